//! Censored study observations and the Fisher / Stouffer transforms.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::distributions::{chisq_cdf_sf, norm_cdf, norm_quantile, norm_sf};

/// Smallest p-value passed to a transform.
pub const P_FLOOR: f64 = 1e-300;
/// Largest p-value passed to a transform (the double just below one).
pub const P_CEIL: f64 = 1.0 - 1e-16;

/// Which tail of the combined statistic counts as evidence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tail {
    Upper,
    Lower,
}

/// Evidence-aggregation transform `p ↦ T_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    /// `T_k = −2 ln p`, per-study null χ²₂, right tail significant.
    Fisher,
    /// `T_k = Φ⁻¹(p)`, per-study null N(0, 1), left tail significant.
    Stouffer,
}

impl Transform {
    pub const ALL: [Transform; 2] = [Transform::Fisher, Transform::Stouffer];

    pub fn tail(self) -> Tail {
        match self {
            Transform::Fisher => Tail::Upper,
            Transform::Stouffer => Tail::Lower,
        }
    }

    /// Strict transform: rejects p-values that map to an infinite statistic.
    pub fn statistic(self, p: f64) -> Result<f64> {
        match self {
            Transform::Fisher if p > 0.0 && p <= 1.0 => Ok(-2.0 * p.ln()),
            Transform::Stouffer if p > 0.0 && p < 1.0 => Ok(norm_quantile(p)),
            Transform::Fisher => Err(Error::OutOfRange {
                what: "p",
                value: p,
                range: "(0, 1] for Fisher",
            }),
            Transform::Stouffer => Err(Error::OutOfRange {
                what: "p",
                value: p,
                range: "(0, 1) for Stouffer",
            }),
        }
    }

    /// Transform after clamping `p` into `[P_FLOOR, P_CEIL]`.
    #[inline]
    pub fn statistic_clamped(self, p: f64) -> f64 {
        let q = clamp_p(p);
        match self {
            Transform::Fisher => -2.0 * q.ln(),
            Transform::Stouffer => norm_quantile(q),
        }
    }

    /// Null distribution of a sum of `k` transformed uniform p-values.
    pub fn combined_null(self, k: usize) -> BaseNull {
        if k == 0 {
            return BaseNull::PointMass;
        }
        match self {
            Transform::Fisher => BaseNull::ChiSquare { df: 2 * k as u32 },
            Transform::Stouffer => BaseNull::Normal { variance: k as f64 },
        }
    }

    /// Expected transformed value of a uniform p-value.
    pub fn null_mean(self) -> f64 {
        match self {
            Transform::Fisher => 2.0,
            Transform::Stouffer => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transform::Fisher => "fisher",
            Transform::Stouffer => "stouffer",
        }
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fisher" => Ok(Transform::Fisher),
            "stouffer" => Ok(Transform::Stouffer),
            other => Err(Error::InvalidArgument(format!(
                "unknown transform '{other}'"
            ))),
        }
    }
}

/// Clamp a p-value into the range every transform maps to a finite value.
#[inline]
pub fn clamp_p(p: f64) -> f64 {
    if p < P_FLOOR {
        log::debug!("clamping p-value {p:e} up to {P_FLOOR:e}");
        P_FLOOR
    } else if p > P_CEIL {
        log::debug!("clamping p-value {p} down to {P_CEIL}");
        P_CEIL
    } else {
        p
    }
}

/// `transform_inverse`: the per-study statistic for an observed p-value.
pub fn transform_inverse(transform: Transform, p: f64) -> Result<f64> {
    transform.statistic(p)
}

/// Distribution of the observed-study sum `A` under the null.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BaseNull {
    /// No observed studies: `A ≡ 0`.
    PointMass,
    ChiSquare {
        df: u32,
    },
    Normal {
        variance: f64,
    },
}

impl BaseNull {
    /// `P(A ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            BaseNull::PointMass => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            BaseNull::ChiSquare { df } => chisq_cdf_sf(x, df).0,
            BaseNull::Normal { variance } => norm_cdf(x / variance.sqrt()),
        }
    }

    /// `P(A ≥ x)`; includes the atom for the point mass.
    pub fn upper(&self, x: f64) -> f64 {
        match *self {
            BaseNull::PointMass => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            BaseNull::ChiSquare { df } => chisq_cdf_sf(x, df).1,
            BaseNull::Normal { variance } => norm_sf(x / variance.sqrt()),
        }
    }

    /// `P(A < x)`.
    pub fn below(&self, x: f64) -> f64 {
        match *self {
            BaseNull::PointMass => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.cdf(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            BaseNull::PointMass => 0.0,
            BaseNull::ChiSquare { df } => df as f64,
            BaseNull::Normal { .. } => 0.0,
        }
    }
}

/// One study's evidence for one feature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StudyObservation {
    Observed {
        p: f64,
    },
    /// Only `p < threshold` is known.
    Censored {
        below: bool,
        threshold: f64,
    },
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "threshold",
            value: threshold,
            range: "(0, 1)",
        })
    }
}

pub(crate) fn check_pvalue(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            what: "p",
            value: p,
            range: "(0, 1]",
        })
    }
}

impl StudyObservation {
    pub fn observed(p: f64) -> Result<Self> {
        check_pvalue(p)?;
        Ok(StudyObservation::Observed { p })
    }

    pub fn censored(below: bool, threshold: f64) -> Result<Self> {
        check_threshold(threshold)?;
        Ok(StudyObservation::Censored { below, threshold })
    }

    /// Censor a known p-value at `threshold`.
    pub fn truncate(p: f64, threshold: f64) -> Result<Self> {
        check_pvalue(p)?;
        Self::censored(p < threshold, threshold)
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, StudyObservation::Censored { .. })
    }
}

/// The `K = K1 + K2` studies combined for one feature, in a fixed order.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyPanel {
    observations: Vec<StudyObservation>,
}

impl StudyPanel {
    pub fn new(observations: Vec<StudyObservation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument(
                "a panel needs at least one study".into(),
            ));
        }
        for o in &observations {
            match *o {
                StudyObservation::Observed { p } => check_pvalue(p)?,
                StudyObservation::Censored { threshold, .. } => check_threshold(threshold)?,
            }
        }
        Ok(StudyPanel { observations })
    }

    /// Panel with every study observed.
    pub fn from_pvalues(pvalues: &[f64]) -> Result<Self> {
        Self::new(
            pvalues
                .iter()
                .map(|&p| StudyObservation::observed(p))
                .collect::<Result<_>>()?,
        )
    }

    pub fn observations(&self) -> &[StudyObservation] {
        &self.observations
    }

    pub fn k(&self) -> usize {
        self.observations.len()
    }

    pub fn k1(&self) -> usize {
        self.observed().count()
    }

    pub fn k2(&self) -> usize {
        self.k() - self.k1()
    }

    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.observations.iter().filter_map(|o| match *o {
            StudyObservation::Observed { p } => Some(p),
            _ => None,
        })
    }

    /// `(below, threshold)` for each censored study, in panel order.
    pub fn censored(&self) -> impl Iterator<Item = (bool, f64)> + '_ {
        self.observations.iter().filter_map(|o| match *o {
            StudyObservation::Censored { below, threshold } => Some((below, threshold)),
            _ => None,
        })
    }

    pub fn censored_thresholds(&self) -> Vec<f64> {
        self.censored().map(|(_, t)| t).collect()
    }

    /// Sum of transformed observed p-values (`A`), in panel order.
    pub fn observed_sum(&self, transform: Transform) -> f64 {
        self.observed()
            .map(|p| transform.statistic_clamped(p))
            .sum()
    }
}

/// Distinct censoring thresholds with multiplicities, ascending.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ThresholdGroups {
    thresholds: Vec<f64>,
    counts: Vec<usize>,
}

impl ThresholdGroups {
    /// Group a multiset of thresholds by exact equality.
    pub fn from_thresholds(thresholds: &[f64]) -> Result<Self> {
        for &t in thresholds {
            check_threshold(t)?;
        }
        let mut sorted = thresholds.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut groups = ThresholdGroups::default();
        for t in sorted {
            match groups.thresholds.last() {
                Some(&last) if last == t => *groups.counts.last_mut().unwrap() += 1,
                _ => {
                    groups.thresholds.push(t);
                    groups.counts.push(1);
                }
            }
        }
        Ok(groups)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    pub fn k2(&self) -> usize {
        self.counts.iter().sum()
    }

    /// The multiset back, ascending.
    pub fn expand(&self) -> Vec<f64> {
        self.thresholds
            .iter()
            .zip(&self.counts)
            .flat_map(|(&t, &n)| std::iter::repeat_n(t, n))
            .collect()
    }

    pub fn index_of(&self, threshold: f64) -> Option<usize> {
        self.thresholds.iter().position(|&t| t == threshold)
    }

    /// Number of enumeration terms `Π (n_l + 1)`.
    pub fn term_count(&self) -> u128 {
        self.counts
            .iter()
            .fold(1u128, |acc, &n| acc.saturating_mul(n as u128 + 1))
    }

    /// Per-group count of censored studies reporting `p < threshold`.
    pub fn below_counts(&self, panel: &StudyPanel) -> Vec<usize> {
        let mut counts = vec![0; self.len()];
        for (below, t) in panel.censored() {
            if below {
                let i = self
                    .index_of(t)
                    .expect("panel threshold missing from its groups");
                counts[i] += 1;
            }
        }
        counts
    }
}

/// `group_thresholds`: collapse the panel's censoring thresholds.
pub fn group_thresholds(panel: &StudyPanel) -> ThresholdGroups {
    ThresholdGroups::from_thresholds(&panel.censored_thresholds())
        .expect("panel thresholds validated on construction")
}

/// How one study reports: an exact p-value or only an indicator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StudyMode {
    Observed,
    Censored { threshold: f64 },
}

/// Per-study reporting modes shared by every feature of a matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PanelSchema {
    modes: Vec<StudyMode>,
}

impl PanelSchema {
    pub fn new(modes: Vec<StudyMode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidArgument(
                "a schema needs at least one study".into(),
            ));
        }
        for m in &modes {
            if let StudyMode::Censored { threshold } = *m {
                check_threshold(threshold)?;
            }
        }
        Ok(PanelSchema { modes })
    }

    pub fn of(panel: &StudyPanel) -> Self {
        PanelSchema {
            modes: panel
                .observations()
                .iter()
                .map(|o| match *o {
                    StudyObservation::Observed { .. } => StudyMode::Observed,
                    StudyObservation::Censored { threshold, .. } => {
                        StudyMode::Censored { threshold }
                    }
                })
                .collect(),
        }
    }

    pub fn modes(&self) -> &[StudyMode] {
        &self.modes
    }

    pub fn k(&self) -> usize {
        self.modes.len()
    }

    pub fn k1(&self) -> usize {
        self.modes
            .iter()
            .filter(|m| matches!(m, StudyMode::Observed))
            .count()
    }

    pub fn k2(&self) -> usize {
        self.k() - self.k1()
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.modes
            .iter()
            .filter_map(|m| match *m {
                StudyMode::Censored { threshold } => Some(threshold),
                StudyMode::Observed => None,
            })
            .collect()
    }

    pub fn groups(&self) -> ThresholdGroups {
        ThresholdGroups::from_thresholds(&self.thresholds()).expect("thresholds validated")
    }

    /// Whether `panel` has this exact pattern of modes and thresholds.
    pub fn matches(&self, panel: &StudyPanel) -> bool {
        panel.k() == self.k()
            && panel
                .observations()
                .iter()
                .zip(&self.modes)
                .all(|(o, m)| match (*o, *m) {
                    (StudyObservation::Observed { .. }, StudyMode::Observed) => true,
                    (
                        StudyObservation::Censored { threshold: a, .. },
                        StudyMode::Censored { threshold: b },
                    ) => a == b,
                    _ => false,
                })
    }

    /// Censor a full row of p-values according to the schema.
    pub fn apply(&self, pvalues: &[f64]) -> Result<StudyPanel> {
        if pvalues.len() != self.k() {
            return Err(Error::InvalidArgument(format!(
                "row has {} p-values, schema has {} studies",
                pvalues.len(),
                self.k()
            )));
        }
        StudyPanel::new(
            pvalues
                .iter()
                .zip(&self.modes)
                .map(|(&p, m)| match *m {
                    StudyMode::Observed => StudyObservation::observed(p),
                    StudyMode::Censored { threshold } => StudyObservation::truncate(p, threshold),
                })
                .collect::<Result<_>>()?,
        )
    }
}

/// A combined statistic and its meta-analysis p-value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Combined {
    pub statistic: f64,
    pub p_meta: f64,
}

pub(crate) fn complete_pvalue(transform: Transform, statistic: f64, k: usize) -> f64 {
    match transform {
        Transform::Fisher => chisq_cdf_sf(statistic, 2 * k as u32).1,
        Transform::Stouffer => norm_cdf(statistic / (k as f64).sqrt()),
    }
}

/// Fisher / Stouffer combination of fully observed p-values.
pub fn combine_complete(transform: Transform, pvalues: &[f64]) -> Result<Combined> {
    if pvalues.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot combine an empty list of p-values".into(),
        ));
    }
    let mut statistic = 0.0;
    for &p in pvalues {
        check_pvalue(p)?;
        statistic += transform.statistic_clamped(p);
    }
    Ok(Combined {
        statistic,
        p_meta: complete_pvalue(transform, statistic, pvalues.len()),
    })
}

/// Combine only the studies whose p-values were observed.
pub fn combine_available(transform: Transform, panel: &StudyPanel) -> Result<Combined> {
    let k1 = panel.k1();
    if k1 == 0 {
        return Err(Error::NoObservedStudies);
    }
    let statistic = panel.observed_sum(transform);
    Ok(Combined {
        statistic,
        p_meta: complete_pvalue(transform, statistic, k1),
    })
}
