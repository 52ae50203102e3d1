//! Special functions, distribution functions and random samplers.

pub mod distributions;
pub mod mvn;
pub mod quadrature;
pub mod rng;
pub mod special;

pub use distributions::{
    chi_square_cdf, chi_square_quantile, chi_square_sf, std_normal_cdf, std_normal_quantile,
    student_t_two_sided_p,
};
pub use mvn::{
    covariance_to_correlation, sample_inverse_wishart, sample_mvn, InverseWishart,
    MultivariateNormal,
};
pub use rng::SeededRng;
