//! Mean, single random, and multiple imputation of censored p-values, with
//! the analytic null distribution of each imputed statistic.

mod impute;
mod moments;
mod null_cdf;

use std::fmt;
use std::str::FromStr;

pub use impute::{
    impute_mean, mean_expected_statistic, mean_impute_statistic, mean_statistic,
    multiple_impute_statistic, single_impute_statistic,
};
pub use moments::{truncated_moments, TruncatedMoments};
pub use null_cdf::{
    mean_null_cdf, mean_shift, method_pvalue, multiple_null_cdf, NullCdf, DEFAULT_TERM_CAP,
};

use crate::error::Error;

/// Multiple-imputation draw count used unless configured otherwise.
pub const DEFAULT_IMPUTATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// All p-values observed.
    Complete,
    /// Drop censored studies.
    Available,
    Mean,
    Single,
    Multiple,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Complete,
        Method::Available,
        Method::Mean,
        Method::Single,
        Method::Multiple,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Complete => "complete",
            Method::Available => "available",
            Method::Mean => "mean",
            Method::Single => "single",
            Method::Multiple => "multiple",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}
