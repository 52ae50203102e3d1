//! Meta-analysis of p-values when some studies report only whether each
//! p-value fell below a threshold.
//!
//! Fisher and Stouffer evidence aggregation are extended to censored studies
//! through mean, single random, and multiple imputation, each with its null
//! distribution computed analytically. Around that core sit a genome-scale
//! driver with FDR control, a simulation harness that reproduces the
//! calibration and power studies, and a compact binary store for truncated
//! p-value matrices.

pub mod config;
pub mod error;
pub mod imputation;
pub mod inference;
pub mod ingest;
pub mod model;
pub mod numerics;
pub mod sim;
pub mod store;

pub use error::{Error, Result};
