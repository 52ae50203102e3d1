use proptest::prelude::*;
use truncmeta::imputation::{
    mean_impute_statistic, mean_null_cdf, method_pvalue, single_impute_statistic, Method,
};
use truncmeta::inference::{
    analyze_feature, bh_adjust, by_adjust, harmonic, meta_analyze_matrix, step_up_reject,
    FeatureRow,
};
use truncmeta::model::{group_thresholds, StudyObservation, StudyPanel, Transform};
use truncmeta::numerics::SeededRng;

const THRESHOLDS: [f64; 3] = [0.001, 0.01, 0.05];

fn rows(n: usize, seed: u64) -> Vec<FeatureRow> {
    let mut rng = SeededRng::new(seed);
    (0..n)
        .map(|i| {
            let mut obs: Vec<StudyObservation> = (0..2)
                .map(|_| StudyObservation::observed(rng.open01().powi(2)).unwrap())
                .collect();
            for a in THRESHOLDS {
                obs.push(StudyObservation::truncate(rng.open01().powi(2), a).unwrap());
            }
            FeatureRow {
                id: format!("gene{i}"),
                panel: StudyPanel::new(obs).unwrap(),
            }
        })
        .collect()
}

fn pvalues() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..=1.0, 1..200)
}

#[test]
fn one_row_matches_single_feature_functions() {
    let r = rows(1, 1).remove(0);
    let seed = 77;
    for t in Transform::ALL {
        let single = meta_analyze_matrix(std::slice::from_ref(&r), Method::Single, t, 1, seed)
            .unwrap()
            .remove(0);
        let direct = single_impute_statistic(&r.panel, t, &mut SeededRng::for_feature(seed, &r.id));
        assert_eq!(single.statistic.to_bits(), direct.statistic.to_bits());
        assert_eq!(single.p_meta.to_bits(), direct.p_meta.to_bits());

        let mean = analyze_feature(&r, Method::Mean, t, 1, seed).unwrap();
        let s = mean_impute_statistic(&r.panel, t);
        let null = mean_null_cdf(t, r.panel.k1(), &group_thresholds(&r.panel)).unwrap();
        assert_eq!(mean.statistic.to_bits(), s.to_bits());
        assert_eq!(mean.p_meta.to_bits(), method_pvalue(s, &null).to_bits());
        assert_eq!(mean.q_bh, mean.p_meta);
    }
}

#[test]
fn shared_null_matches_per_row_rebuild() {
    let rs = rows(40, 2);
    for m in [
        Method::Mean,
        Method::Single,
        Method::Multiple,
        Method::Available,
    ] {
        for t in Transform::ALL {
            let all = meta_analyze_matrix(&rs, m, t, 25, 9).unwrap();
            for (row, res) in rs.iter().zip(&all) {
                let one = analyze_feature(row, m, t, 25, 9).unwrap();
                assert_eq!(one.statistic.to_bits(), res.statistic.to_bits());
                assert_eq!(one.p_meta.to_bits(), res.p_meta.to_bits());
            }
        }
    }
}

#[test]
fn results_do_not_depend_on_row_order() {
    let rs = rows(60, 3);
    let mut rev = rs.clone();
    rev.reverse();
    for m in [Method::Single, Method::Multiple] {
        let a = meta_analyze_matrix(&rs, m, Transform::Stouffer, 10, 4).unwrap();
        let mut b = meta_analyze_matrix(&rev, m, Transform::Stouffer, 10, 4).unwrap();
        b.reverse();
        assert_eq!(a, b);
    }
}

#[test]
fn by_penalty_is_harmonic_number() {
    let p = [0.001, 0.004, 0.03, 0.5];
    let bh = bh_adjust(&p).unwrap();
    let by = by_adjust(&p).unwrap();
    let c = harmonic(4);
    assert!((c - 25.0 / 12.0).abs() < 1e-15);
    for (a, b) in bh.iter().zip(&by) {
        assert!((b - (a * c).min(1.0)).abs() < 1e-15);
    }
}

proptest! {
    #[test]
    fn bh_is_permutation_equivariant(p in pvalues(), seed in any::<u64>()) {
        let mut idx: Vec<usize> = (0..p.len()).collect();
        let mut rng = SeededRng::new(seed);
        for i in (1..idx.len()).rev() {
            let j = ((rng.open01() * (i + 1) as f64) as usize).min(i);
            idx.swap(i, j);
        }
        let shuffled: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
        let q = bh_adjust(&p).unwrap();
        let qs = bh_adjust(&shuffled).unwrap();
        for (k, &i) in idx.iter().enumerate() {
            prop_assert_eq!(qs[k], q[i]);
        }
    }

    #[test]
    fn q_values_are_monotone_in_p(p in pvalues()) {
        let q = bh_adjust(&p).unwrap();
        let by = by_adjust(&p).unwrap();
        for i in 0..p.len() {
            prop_assert!(q[i] >= p[i] && q[i] <= 1.0);
            prop_assert!(by[i] >= q[i]);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(q[i] <= q[j]);
                }
            }
        }
    }

    #[test]
    fn q_value_threshold_equals_step_up(p in pvalues(), level in 0.001f64..0.3) {
        let m = p.len() as f64;
        for (q, factor) in [(bh_adjust(&p).unwrap(), 1.0), (by_adjust(&p).unwrap(), harmonic(p.len()))] {
            let reject = step_up_reject(&p, level, factor);
            // largest i with p_(i) <= i q / (m c)
            let mut sorted = p.clone();
            sorted.sort_by(f64::total_cmp);
            let cutoff = (1..=p.len())
                .rev()
                .find(|&i| sorted[i - 1] <= i as f64 * level / (m * factor))
                .map(|i| sorted[i - 1]);
            for i in 0..p.len() {
                let expected = cutoff.is_some_and(|c| p[i] <= c);
                prop_assert_eq!(reject[i], expected);
                prop_assert_eq!(q[i] <= level, expected);
            }
        }
    }
}
