//! Analytic null distributions of the imputed combined statistics.
//!
//! Every method's null is a finite mixture: the observed-study sum `A`
//! (χ²_{2K1}, N(0, K1), or a point mass at zero when K1 = 0) shifted by the
//! censored-study contribution of one indicator configuration, optionally
//! smeared by an independent normal (multiple imputation). Configurations
//! are enumerated either per study (`2^K2` terms) or per distinct threshold
//! with binomial weights (`Π (n_l + 1)` terms).

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::moments::moments_unchecked;
use super::Method;
use crate::error::{Error, Result};
use crate::model::{check_threshold, BaseNull, Tail, ThresholdGroups, Transform};
use crate::numerics::distributions::{norm_cdf, norm_sf};
use crate::numerics::quadrature::adaptive_gl;
use crate::numerics::rng::SeededRng;

/// Default cap on the number of mixture terms.
pub const DEFAULT_TERM_CAP: u64 = 10_000_000;
/// Integration half-width for the χ² ⊛ normal convolution, in standard deviations.
const CONV_SDS: f64 = 8.0;
const CONV_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Term {
    weight: f64,
    shift: f64,
    /// Standard deviation of the normal smear; zero for a pure shift.
    sd: f64,
}

/// Evaluable null CDF of a method's combined statistic.
#[derive(Clone, Debug)]
pub struct NullCdf {
    method: Method,
    transform: Transform,
    k1: usize,
    groups: ThresholdGroups,
    imputations: Option<usize>,
    base: BaseNull,
    terms: Vec<Term>,
}

/// Contribution of the censored studies under mean imputation, given how
/// many studies in each threshold group reported `p < β`.
///
/// Both the null mixture and the observed statistic go through this
/// function, so a statistic sitting on an atom compares equal to it.
pub fn mean_shift(transform: Transform, groups: &ThresholdGroups, below: &[usize]) -> f64 {
    let mut shift = 0.0;
    for ((&beta, &n), &j) in groups.thresholds().iter().zip(groups.counts()).zip(below) {
        let low = transform.statistic_clamped(0.5 * beta);
        let high = transform.statistic_clamped(0.5 * (1.0 + beta));
        shift += j as f64 * low + (n - j) as f64 * high;
    }
    shift
}

fn binom_pmf(j: usize, n: usize, p: f64) -> f64 {
    let mut coef = 1.0;
    for i in 0..j.min(n - j) {
        coef = coef * (n - i) as f64 / (i + 1) as f64;
    }
    coef * p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)
}

fn check_cap(terms: u128, cap: u64) -> Result<()> {
    if terms > cap as u128 {
        Err(Error::EnumerationTooLarge { terms, cap })
    } else {
        Ok(())
    }
}

/// Visit every count vector `0 ≤ j_l ≤ n_l` with its binomial weight.
fn for_each_grouped(groups: &ThresholdGroups, mut visit: impl FnMut(&[usize], f64)) {
    let counts = groups.counts();
    let r = counts.len();
    let mut j = vec![0usize; r];
    loop {
        let weight: f64 = (0..r)
            .map(|l| binom_pmf(j[l], counts[l], groups.thresholds()[l]))
            .product();
        visit(&j, weight);
        let mut l = 0;
        loop {
            if l == r {
                return;
            }
            if j[l] < counts[l] {
                j[l] += 1;
                break;
            }
            j[l] = 0;
            l += 1;
        }
    }
}

/// Visit every per-study indicator vector with its product weight.
fn for_each_full(thresholds: &[f64], mut visit: impl FnMut(&[bool], f64)) {
    let k2 = thresholds.len();
    let mut bits = vec![false; k2];
    for mask in 0u64..(1u64 << k2) {
        let mut weight = 1.0;
        for (i, (&a, b)) in thresholds.iter().zip(bits.iter_mut()).enumerate() {
            *b = mask >> i & 1 == 1;
            weight *= if *b { a } else { 1.0 - a };
        }
        visit(&bits, weight);
    }
}

fn check_full(thresholds: &[f64], cap: u64) -> Result<()> {
    for &t in thresholds {
        check_threshold(t)?;
    }
    if thresholds.len() >= 64 {
        return Err(Error::EnumerationTooLarge {
            terms: 1u128 << thresholds.len().min(127),
            cap,
        });
    }
    check_cap(1u128 << thresholds.len(), cap)
}

impl NullCdf {
    fn single_term(method: Method, transform: Transform, k1: usize, k: usize) -> Self {
        NullCdf {
            method,
            transform,
            k1,
            groups: ThresholdGroups::default(),
            imputations: None,
            base: transform.combined_null(k),
            terms: vec![Term {
                weight: 1.0,
                shift: 0.0,
                sd: 0.0,
            }],
        }
    }

    /// Null of the complete-case statistic over `k` studies.
    pub fn complete(transform: Transform, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("complete null needs K ≥ 1".into()));
        }
        Ok(Self::single_term(Method::Complete, transform, k, k))
    }

    /// Null of the available-case statistic.
    pub fn available(transform: Transform, k1: usize) -> Result<Self> {
        if k1 == 0 {
            return Err(Error::NoObservedStudies);
        }
        Ok(Self::single_term(Method::Available, transform, k1, k1))
    }

    /// Single random imputation: exactly the K-study complete null.
    pub fn single(transform: Transform, k1: usize, groups: &ThresholdGroups) -> Result<Self> {
        let k = k1 + groups.k2();
        if k == 0 {
            return Err(Error::InvalidArgument(
                "single-imputation null needs K ≥ 1".into(),
            ));
        }
        let mut null = Self::single_term(Method::Single, transform, k1, k);
        null.groups = groups.clone();
        Ok(null)
    }

    /// Mean imputation, grouped binomial enumeration.
    pub fn mean(
        transform: Transform,
        k1: usize,
        groups: &ThresholdGroups,
        cap: u64,
    ) -> Result<Self> {
        check_cap(groups.term_count(), cap)?;
        let mut terms = Vec::with_capacity(groups.term_count() as usize);
        for_each_grouped(groups, |j, weight| {
            terms.push(Term {
                weight,
                shift: mean_shift(transform, groups, j),
                sd: 0.0,
            })
        });
        Ok(NullCdf {
            method: Method::Mean,
            transform,
            k1,
            groups: groups.clone(),
            imputations: None,
            base: transform.combined_null(k1),
            terms,
        })
    }

    /// Mean imputation, one term per indicator vector (cross-check path).
    pub fn mean_full(
        transform: Transform,
        k1: usize,
        thresholds: &[f64],
        cap: u64,
    ) -> Result<Self> {
        check_full(thresholds, cap)?;
        let mut terms = Vec::with_capacity(1 << thresholds.len());
        for_each_full(thresholds, |bits, weight| {
            let shift = thresholds
                .iter()
                .zip(bits)
                .map(|(&a, &b)| {
                    transform.statistic_clamped(if b { 0.5 * a } else { 0.5 * (1.0 + a) })
                })
                .sum();
            terms.push(Term {
                weight,
                shift,
                sd: 0.0,
            })
        });
        Ok(NullCdf {
            method: Method::Mean,
            transform,
            k1,
            groups: ThresholdGroups::from_thresholds(thresholds)?,
            imputations: None,
            base: transform.combined_null(k1),
            terms,
        })
    }

    /// Multiple imputation with `d` draws per censored study (normal
    /// approximation of the averaged draws), grouped enumeration.
    pub fn multiple(
        transform: Transform,
        k1: usize,
        groups: &ThresholdGroups,
        d: usize,
        cap: u64,
    ) -> Result<Self> {
        check_imputations(d)?;
        check_cap(groups.term_count(), cap)?;
        let moments: Vec<_> = groups
            .thresholds()
            .iter()
            .map(|&b| moments_unchecked(transform, b))
            .collect();
        let mut terms = Vec::with_capacity(groups.term_count() as usize);
        for_each_grouped(groups, |j, weight| {
            let mut mean = 0.0;
            let mut var = 0.0;
            for ((m, &n), &jl) in moments.iter().zip(groups.counts()).zip(j) {
                let (jl, rest) = (jl as f64, (n - jl) as f64);
                mean += jl * m.mu_w + rest * m.mu_v;
                var += jl * m.var_w + rest * m.var_v;
            }
            terms.push(Term {
                weight,
                shift: mean,
                sd: (var / d as f64).sqrt(),
            })
        });
        Ok(NullCdf {
            method: Method::Multiple,
            transform,
            k1,
            groups: groups.clone(),
            imputations: Some(d),
            base: transform.combined_null(k1),
            terms,
        })
    }

    /// Multiple imputation, one term per indicator vector.
    pub fn multiple_full(
        transform: Transform,
        k1: usize,
        thresholds: &[f64],
        d: usize,
        cap: u64,
    ) -> Result<Self> {
        check_imputations(d)?;
        check_full(thresholds, cap)?;
        let moments: Vec<_> = thresholds
            .iter()
            .map(|&a| moments_unchecked(transform, a))
            .collect();
        let mut terms = Vec::with_capacity(1 << thresholds.len());
        for_each_full(thresholds, |bits, weight| {
            let mut mean = 0.0;
            let mut var = 0.0;
            for (m, &b) in moments.iter().zip(bits) {
                if b {
                    mean += m.mu_w;
                    var += m.var_w;
                } else {
                    mean += m.mu_v;
                    var += m.var_v;
                }
            }
            terms.push(Term {
                weight,
                shift: mean,
                sd: (var / d as f64).sqrt(),
            })
        });
        Ok(NullCdf {
            method: Method::Multiple,
            transform,
            k1,
            groups: ThresholdGroups::from_thresholds(thresholds)?,
            imputations: Some(d),
            base: transform.combined_null(k1),
            terms,
        })
    }

    /// Null for `method` on a panel schema with `k1` observed studies and the
    /// given censored thresholds.
    pub fn for_method(
        method: Method,
        transform: Transform,
        k1: usize,
        groups: &ThresholdGroups,
        d: usize,
        cap: u64,
    ) -> Result<Self> {
        match method {
            Method::Complete => {
                if !groups.is_empty() {
                    return Err(Error::CensoredStudies {
                        censored: groups.k2(),
                    });
                }
                Self::complete(transform, k1)
            }
            Method::Available => Self::available(transform, k1),
            Method::Mean => Self::mean(transform, k1, groups, cap),
            Method::Single => Self::single(transform, k1, groups),
            Method::Multiple => Self::multiple(transform, k1, groups, d, cap),
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn groups(&self) -> &ThresholdGroups {
        &self.groups
    }

    pub fn imputations(&self) -> Option<usize> {
        self.imputations
    }

    /// Location of each mixture term (before adding the observed part).
    pub fn term_shifts(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.shift).collect()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Whether the distribution has atoms (mean imputation with K1 = 0).
    pub fn is_discrete(&self) -> bool {
        self.base == BaseNull::PointMass && self.terms.iter().all(|t| t.sd == 0.0)
    }

    /// `P(T ≤ t)`.
    pub fn evaluate(&self, t: f64) -> f64 {
        self.sum_terms(|term| self.term_cdf(term, t))
    }

    /// `P(T < t)`; differs from [`evaluate`](Self::evaluate) only at atoms.
    pub fn evaluate_below(&self, t: f64) -> f64 {
        self.sum_terms(|term| {
            if term.sd == 0.0 {
                self.base.below(t - term.shift)
            } else {
                self.term_cdf(term, t)
            }
        })
    }

    /// `P(T ≥ t)`, computed without cancellation.
    pub fn upper_tail(&self, t: f64) -> f64 {
        self.sum_terms(|term| self.term_upper(term, t))
    }

    /// Significance of an observed statistic in the transform's evidence
    /// tail; atoms at `t` are included (closed tail).
    pub fn pvalue(&self, statistic: f64) -> f64 {
        let p = match self.transform.tail() {
            Tail::Upper => self.upper_tail(statistic),
            Tail::Lower => self.evaluate(statistic),
        };
        p.clamp(0.0, 1.0)
    }

    fn sum_terms(&self, f: impl Fn(&Term) -> f64) -> f64 {
        let s: f64 = self.terms.iter().map(|t| t.weight * f(t)).sum();
        s.clamp(0.0, 1.0)
    }

    fn term_cdf(&self, term: &Term, t: f64) -> f64 {
        let x = t - term.shift;
        if term.sd == 0.0 {
            return self.base.cdf(x);
        }
        match self.base {
            BaseNull::PointMass => norm_cdf(x / term.sd),
            BaseNull::Normal { variance } => norm_cdf(x / (variance + term.sd * term.sd).sqrt()),
            BaseNull::ChiSquare { .. } => {
                // P(A + U ≤ t) = ∫_{u < t} F_A(t − u) φ_U(u) du, U centred at the shift
                let lo = -CONV_SDS * term.sd;
                let hi = (CONV_SDS * term.sd).min(x);
                self.convolve(term.sd, lo, hi, |u| self.base.cdf(x - u))
            }
        }
    }

    fn term_upper(&self, term: &Term, t: f64) -> f64 {
        let x = t - term.shift;
        if term.sd == 0.0 {
            return self.base.upper(x);
        }
        match self.base {
            BaseNull::PointMass => norm_sf(x / term.sd),
            BaseNull::Normal { variance } => norm_sf(x / (variance + term.sd * term.sd).sqrt()),
            BaseNull::ChiSquare { .. } => {
                // P(U ≥ t) + ∫_{u < t} S_A(t − u) φ_U(u) du
                let lo = -CONV_SDS * term.sd;
                let hi = (CONV_SDS * term.sd).min(x);
                norm_sf(x / term.sd) + self.convolve(term.sd, lo, hi, |u| self.base.upper(x - u))
            }
        }
    }

    fn convolve(&self, sd: f64, lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let inv = 1.0 / sd;
        adaptive_gl(
            |u| {
                let z = u * inv;
                f(u) * (-0.5 * z * z).exp() * inv * 0.398_942_280_401_432_7
            },
            lo,
            hi,
            CONV_TOL,
        )
    }

    /// Monte Carlo evaluation of `P(T ≤ t)`, drawing `A` and the normal
    /// smear of each term directly. Cross-validation for the quadrature.
    pub fn evaluate_mc(&self, t: f64, draws_per_term: usize, rng: &mut SeededRng) -> f64 {
        let mut total = 0.0;
        for term in &self.terms {
            let mut hits = 0usize;
            for _ in 0..draws_per_term {
                let a = match self.base {
                    BaseNull::PointMass => 0.0,
                    BaseNull::ChiSquare { df } => {
                        ChiSquared::new(df as f64).expect("df > 0").sample(rng)
                    }
                    BaseNull::Normal { variance } => {
                        variance.sqrt() * rng.sample::<f64, _>(StandardNormal)
                    }
                };
                let u = term.sd * rng.sample::<f64, _>(StandardNormal);
                if a + term.shift + u <= t {
                    hits += 1;
                }
            }
            total += term.weight * hits as f64 / draws_per_term as f64;
        }
        total
    }
}

fn check_imputations(d: usize) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "imputation count D must be ≥ 1".into(),
        ));
    }
    if d < 30 {
        log::warn!(
            "D = {d} < 30: the normal approximation of the averaged imputations may be inaccurate"
        );
    }
    Ok(())
}

/// Build the mean-imputation null (grouped path, default cap).
pub fn mean_null_cdf(transform: Transform, k1: usize, groups: &ThresholdGroups) -> Result<NullCdf> {
    NullCdf::mean(transform, k1, groups, DEFAULT_TERM_CAP)
}

/// Build the multiple-imputation null (grouped path, default cap).
pub fn multiple_null_cdf(
    transform: Transform,
    k1: usize,
    groups: &ThresholdGroups,
    d: usize,
) -> Result<NullCdf> {
    NullCdf::multiple(transform, k1, groups, d, DEFAULT_TERM_CAP)
}

/// Tail-aware p-value of `statistic` under `null`.
pub fn method_pvalue(statistic: f64, null: &NullCdf) -> f64 {
    null.pvalue(statistic)
}
