//! Brute-force Monte Carlo null distributions, compared against the
//! analytic ones.

use rand::RngCore;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imputation::{Method, NullCdf};
use crate::inference::method_statistic;
use crate::model::{StudyObservation, StudyPanel, ThresholdGroups, Transform};
use crate::numerics::rng::SeededRng;

const CHUNK: usize = 8192;

/// Empirical CDF of a sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical CDF of an empty sample".into(),
            ));
        }
        if let Some(&bad) = samples.iter().find(|v| v.is_nan()) {
            return Err(Error::NonFinite {
                what: "sample",
                value: bad,
            });
        }
        samples.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of the sample `≤ x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Fraction of the sample `< x`.
    pub fn evaluate_below(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.len() as f64
    }
}

fn draw_panel(k1: usize, thresholds: &[f64], rng: &mut SeededRng) -> StudyPanel {
    let mut obs = Vec::with_capacity(k1 + thresholds.len());
    for _ in 0..k1 {
        obs.push(StudyObservation::Observed { p: rng.open01() });
    }
    for &a in thresholds {
        obs.push(StudyObservation::Censored {
            below: rng.open01() < a,
            threshold: a,
        });
    }
    StudyPanel::new(obs).expect("p-values in (0, 1) and validated thresholds")
}

/// Statistics of `n_draws` null panels: p-values drawn uniform, censored at
/// the group thresholds, imputed, and combined exactly as in production.
pub fn mc_null_statistics(
    method: Method,
    transform: Transform,
    k1: usize,
    groups: &ThresholdGroups,
    imputations: usize,
    n_draws: usize,
    rng: &mut SeededRng,
) -> Result<Vec<f64>> {
    if k1 + groups.k2() == 0 {
        return Err(Error::InvalidArgument("oracle needs K ≥ 1".into()));
    }
    if method == Method::Complete && !groups.is_empty() {
        return Err(Error::CensoredStudies {
            censored: groups.k2(),
        });
    }
    if method == Method::Available && k1 == 0 {
        return Err(Error::NoObservedStudies);
    }
    if n_draws < 100_000 {
        log::warn!("Monte Carlo oracle with only {n_draws} draws");
    }
    let thresholds = groups.expand();
    let base = rng.next_u64();
    let chunks = n_draws.div_ceil(CHUNK);
    let out: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = SeededRng::derive(base, &[c as u64]);
            let n = CHUNK.min(n_draws - c * CHUNK);
            (0..n)
                .map(|_| {
                    let panel = draw_panel(k1, &thresholds, &mut r);
                    method_statistic(method, transform, &panel, groups, imputations, &mut r)
                })
                .collect()
        })
        .collect();
    Ok(out.concat())
}

pub fn mc_null_oracle(
    method: Method,
    transform: Transform,
    k1: usize,
    groups: &ThresholdGroups,
    imputations: usize,
    n_draws: usize,
    rng: &mut SeededRng,
) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(mc_null_statistics(
        method,
        transform,
        k1,
        groups,
        imputations,
        n_draws,
        rng,
    )?)
}

/// Bounds on `sup_x |F_n(x) − F(x)|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupDistance {
    /// Attained at an evaluated point.
    pub lower: f64,
    /// Valid over the whole line.
    pub upper: f64,
}

/// Compare an empirical CDF against an analytic null.
///
/// Both CDFs are evaluated, with left limits, at up to `grid + 1` order
/// statistics. Between consecutive grid points both functions are
/// nondecreasing, which bounds the gap there; with `grid ≥ n` the bound is
/// exact.
pub fn sup_distance(ecdf: &EmpiricalCdf, null: &NullCdf, grid: usize) -> SupDistance {
    let s = ecdf.sorted();
    let n = s.len();
    let m = grid.clamp(1, n);
    let mut points: Vec<f64> = (0..=m)
        .map(|j| s[((j as u128 * (n - 1) as u128) / m as u128) as usize])
        .collect();
    points.dedup();
    let vals: Vec<[f64; 4]> = points
        .par_iter()
        .map(|&y| {
            [
                ecdf.evaluate(y),
                ecdf.evaluate_below(y),
                null.evaluate(y),
                null.evaluate_below(y),
            ]
        })
        .collect();
    let mut lower: f64 = 0.0;
    for v in &vals {
        lower = lower.max((v[0] - v[2]).abs()).max((v[1] - v[3]).abs());
    }
    let mut upper = lower;
    for w in vals.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        // on (y_j, y_{j+1}): F_n in [F_n(y_j), F_n(y_{j+1}-)], same for F
        upper = upper.max(b[1] - a[2]).max(b[3] - a[0]);
    }
    // beyond the largest draw F_n = 1; below the smallest F_n = 0
    if let Some(last) = vals.last() {
        upper = upper.max(1.0 - last[2]);
    }
    SupDistance { lower, upper }
}

/// Draw the oracle and compare it against the analytic null for the same
/// schema.
#[allow(clippy::too_many_arguments)]
pub fn validate_null(
    method: Method,
    transform: Transform,
    k1: usize,
    groups: &ThresholdGroups,
    imputations: usize,
    n_draws: usize,
    seed: u64,
    grid: usize,
) -> Result<SupDistance> {
    let null = NullCdf::for_method(
        method,
        transform,
        k1,
        groups,
        imputations,
        crate::imputation::DEFAULT_TERM_CAP,
    )?;
    let mut rng = SeededRng::new(seed);
    let ecdf = mc_null_oracle(
        method,
        transform,
        k1,
        groups,
        imputations,
        n_draws,
        &mut rng,
    )?;
    Ok(sup_distance(&ecdf, &null, grid))
}
