use crate::error::Result;
use crate::model::{check_threshold, Transform};
use crate::numerics::distributions::{norm_pdf, norm_quantile};

/// Mean and variance of one transformed imputation drawn below (`W`) or
/// above (`V`) a censoring threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedMoments {
    /// `E[F⁻¹(q)]`, `q ~ U(0, α)`.
    pub mu_w: f64,
    pub var_w: f64,
    /// `E[F⁻¹(r)]`, `r ~ U(α, 1)`.
    pub mu_v: f64,
    pub var_v: f64,
}

/// Closed-form moments of the transformed uniform on each side of `alpha`.
pub fn truncated_moments(transform: Transform, alpha: f64) -> Result<TruncatedMoments> {
    check_threshold(alpha)?;
    Ok(moments_unchecked(transform, alpha))
}

pub(crate) fn moments_unchecked(transform: Transform, alpha: f64) -> TruncatedMoments {
    match transform {
        Transform::Fisher => {
            let ln_a = alpha.ln();
            let comp = 1.0 - alpha;
            TruncatedMoments {
                mu_w: 2.0 * (1.0 - ln_a),
                var_w: 4.0,
                mu_v: 2.0 + 2.0 * alpha / comp * ln_a,
                var_v: 4.0 - 4.0 * alpha / (comp * comp) * ln_a * ln_a,
            }
        }
        Transform::Stouffer => {
            // Truncated standard normal below / above z = Φ⁻¹(α).
            let z = norm_quantile(alpha);
            let dens = norm_pdf(z);
            let comp = 1.0 - alpha;
            let lw = dens / alpha;
            let lv = dens / comp;
            TruncatedMoments {
                mu_w: -lw,
                var_w: 1.0 - z * lw - lw * lw,
                mu_v: lv,
                var_v: 1.0 + z * lv - lv * lv,
            }
        }
    }
}
