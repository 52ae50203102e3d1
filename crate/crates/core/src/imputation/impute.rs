//! Imputed combined statistics for a single panel.

use super::null_cdf::mean_shift;
use crate::model::{
    complete_pvalue, group_thresholds, Combined, StudyObservation, StudyPanel, ThresholdGroups,
    Transform,
};
use crate::numerics::rng::SeededRng;

/// Replace each censored p-value by the midpoint of its known interval.
pub fn impute_mean(panel: &StudyPanel) -> Vec<f64> {
    panel
        .observations()
        .iter()
        .map(|o| match *o {
            StudyObservation::Observed { p } => p,
            StudyObservation::Censored {
                below: true,
                threshold,
            } => 0.5 * threshold,
            StudyObservation::Censored {
                below: false,
                threshold,
            } => 0.5 * (1.0 + threshold),
        })
        .collect()
}

/// Mean-imputation statistic `A + Σ F⁻¹(p̃)`, with the censored part summed
/// per threshold group exactly as the null mixture places its atoms.
pub fn mean_statistic(transform: Transform, panel: &StudyPanel, groups: &ThresholdGroups) -> f64 {
    panel.observed_sum(transform) + mean_shift(transform, groups, &groups.below_counts(panel))
}

pub fn mean_impute_statistic(panel: &StudyPanel, transform: Transform) -> f64 {
    mean_statistic(transform, panel, &group_thresholds(panel))
}

/// One transformed draw from `U(0, α)` or `U(α, 1)`.
#[inline]
pub(crate) fn draw_transformed(
    transform: Transform,
    below: bool,
    threshold: f64,
    rng: &mut SeededRng,
) -> f64 {
    let u = rng.open01();
    let p = if below {
        threshold * u
    } else {
        threshold + (1.0 - threshold) * u
    };
    transform.statistic_clamped(p)
}

/// `A + Σ_j (1/D) Σ_l F⁻¹(draw_jl)`. Draws are taken study by study in panel
/// order, `d` at a time, so `d = 1` reproduces single imputation exactly.
pub fn multiple_impute_statistic(
    panel: &StudyPanel,
    transform: Transform,
    d: usize,
    rng: &mut SeededRng,
) -> f64 {
    let d = d.max(1);
    let mut total = panel.observed_sum(transform);
    for (below, threshold) in panel.censored() {
        let mut s = 0.0;
        for _ in 0..d {
            s += draw_transformed(transform, below, threshold, rng);
        }
        total += s / d as f64;
    }
    total
}

/// Single random imputation, tested against the K-study complete null.
pub fn single_impute_statistic(
    panel: &StudyPanel,
    transform: Transform,
    rng: &mut SeededRng,
) -> Combined {
    let statistic = multiple_impute_statistic(panel, transform, 1, rng);
    Combined {
        statistic,
        p_meta: complete_pvalue(transform, statistic, panel.k()),
    }
}

/// Null expectation of the mean-imputation statistic.
pub fn mean_expected_statistic(transform: Transform, k1: usize, groups: &ThresholdGroups) -> f64 {
    let mut e = k1 as f64 * transform.null_mean();
    for (&a, &n) in groups.thresholds().iter().zip(groups.counts()) {
        e += n as f64
            * (a * transform.statistic_clamped(0.5 * a)
                + (1.0 - a) * transform.statistic_clamped(0.5 * (1.0 + a)));
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::combine_complete;

    fn panel(obs: &[f64], cens: &[(bool, f64)]) -> StudyPanel {
        let mut v: Vec<_> = obs
            .iter()
            .map(|&p| StudyObservation::observed(p).unwrap())
            .collect();
        v.extend(
            cens.iter()
                .map(|&(b, t)| StudyObservation::censored(b, t).unwrap()),
        );
        StudyPanel::new(v).unwrap()
    }

    #[test]
    fn mean_imputation_values() {
        let p = panel(&[0.3], &[(true, 0.05), (false, 0.05)]);
        let imp = impute_mean(&p);
        assert_eq!(imp[0], 0.3);
        assert_eq!(imp[1], 0.025);
        assert_eq!(imp[2], 0.525);
    }

    #[test]
    fn mean_statistic_matches_imputed_sum() {
        let p = panel(&[0.3, 0.01], &[(true, 0.05), (false, 0.001), (true, 0.001)]);
        for tr in Transform::ALL {
            let direct = combine_complete(tr, &impute_mean(&p)).unwrap().statistic;
            assert!((mean_impute_statistic(&p, tr) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn no_censoring_matches_complete() {
        let p = panel(&[0.3, 0.01, 0.7], &[]);
        let mut rng = SeededRng::new(1);
        for tr in Transform::ALL {
            let c = combine_complete(tr, &[0.3, 0.01, 0.7]).unwrap();
            assert_eq!(single_impute_statistic(&p, tr, &mut rng), c);
            for d in [1, 7, 50] {
                assert_eq!(multiple_impute_statistic(&p, tr, d, &mut rng), c.statistic);
            }
        }
    }

    #[test]
    fn single_draw_range() {
        let p = panel(&[], &[(true, 0.5)]);
        let mut rng = SeededRng::new(5);
        for _ in 0..10_000 {
            let s = single_impute_statistic(&p, Transform::Fisher, &mut rng).statistic;
            assert!(s > 1.386_294);
        }
    }

    #[test]
    fn d_one_equals_single() {
        let p = panel(&[0.2], &[(true, 0.01), (false, 0.05)]);
        let mut a = SeededRng::new(77);
        let mut b = SeededRng::new(77);
        for tr in Transform::ALL {
            let s = single_impute_statistic(&p, tr, &mut a).statistic;
            let m = multiple_impute_statistic(&p, tr, 1, &mut b);
            assert_eq!(s, m);
        }
    }

    #[test]
    fn expected_statistic_examples() {
        let g = ThresholdGroups::from_thresholds(&[0.05]).unwrap();
        assert!((mean_expected_statistic(Transform::Fisher, 0, &g) - 1.593_166).abs() < 1e-5);
        assert!((mean_expected_statistic(Transform::Stouffer, 0, &g) + 0.038_427).abs() < 1e-5);
        let none = ThresholdGroups::default();
        assert_eq!(mean_expected_statistic(Transform::Fisher, 7, &none), 14.0);
    }
}
