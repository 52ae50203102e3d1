//! Per-feature meta-analysis across a features × studies matrix, with
//! multiplicity adjustment and calibration metrics.

use std::collections::HashSet;
use std::hash::Hash;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imputation::{
    mean_statistic, multiple_impute_statistic, Method, NullCdf, DEFAULT_TERM_CAP,
};
use crate::model::{Combined, PanelSchema, StudyPanel, ThresholdGroups, Transform};
use crate::numerics::rng::SeededRng;

fn check_unit(pvalues: &[f64]) -> Result<()> {
    for &p in pvalues {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                what: "p",
                value: p,
                range: "[0, 1]",
            });
        }
    }
    Ok(())
}

fn step_up(pvalues: &[f64], factor: f64) -> Vec<f64> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    // sort_by is stable: ties keep input order
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let mut adj = vec![0.0; m];
    let mut running = 1.0f64;
    for (rank, &i) in order.iter().enumerate().rev() {
        // q >= p holds exactly; the clamp absorbs rounding of p * m / m
        let v = (pvalues[i] * factor * m as f64 / (rank + 1) as f64).clamp(pvalues[i], 1.0);
        running = running.min(v);
        adj[i] = running;
    }
    adj
}

/// Benjamini–Hochberg adjusted p-values, in input order.
pub fn bh_adjust(pvalues: &[f64]) -> Result<Vec<f64>> {
    check_unit(pvalues)?;
    Ok(step_up(pvalues, 1.0))
}

/// `c(m) = Σ_{i=1..m} 1/i`.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|i| 1.0 / i as f64).sum()
}

/// Benjamini–Yekutieli adjusted p-values, in input order.
pub fn by_adjust(pvalues: &[f64]) -> Result<Vec<f64>> {
    check_unit(pvalues)?;
    Ok(step_up(pvalues, harmonic(pvalues.len())))
}

/// Classical step-up rejection at level `q`: reject the `j` smallest
/// p-values for the largest `j` with `p_(j) ≤ j·q / (m·factor)`.
pub fn step_up_reject(pvalues: &[f64], q: f64, factor: f64) -> Vec<bool> {
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));
    let mut cutoff = 0;
    for (rank, &i) in order.iter().enumerate() {
        if pvalues[i] <= (rank + 1) as f64 * q / (m as f64 * factor) {
            cutoff = rank + 1;
        }
    }
    let mut reject = vec![false; m];
    for &i in &order[..cutoff] {
        reject[i] = true;
    }
    reject
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdrProcedure {
    BenjaminiHochberg,
    BenjaminiYekutieli,
}

impl FdrProcedure {
    pub fn adjust(self, pvalues: &[f64]) -> Result<Vec<f64>> {
        match self {
            FdrProcedure::BenjaminiHochberg => bh_adjust(pvalues),
            FdrProcedure::BenjaminiYekutieli => by_adjust(pvalues),
        }
    }
}

impl std::str::FromStr for FdrProcedure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bh" => Ok(FdrProcedure::BenjaminiHochberg),
            "by" => Ok(FdrProcedure::BenjaminiYekutieli),
            other => Err(Error::InvalidArgument(format!(
                "unknown FDR procedure '{other}' (expected bh or by)"
            ))),
        }
    }
}

/// One feature's row of input: its id and its study panel.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub panel: StudyPanel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureResult {
    pub feature_id: String,
    pub statistic: f64,
    pub p_meta: f64,
    pub q_bh: f64,
    pub q_by: f64,
    pub method: Method,
    pub transform: Transform,
}

/// Combined statistic of `panel` under `method`. `groups` must be the
/// panel's censoring thresholds; `rng` is used only by random imputation.
pub fn method_statistic(
    method: Method,
    transform: Transform,
    panel: &StudyPanel,
    groups: &ThresholdGroups,
    imputations: usize,
    rng: &mut SeededRng,
) -> f64 {
    match method {
        Method::Complete | Method::Available => panel.observed_sum(transform),
        Method::Mean => mean_statistic(transform, panel, groups),
        Method::Single => multiple_impute_statistic(panel, transform, 1, rng),
        Method::Multiple => multiple_impute_statistic(panel, transform, imputations, rng),
    }
}

/// Method, transform, and null distribution for one panel schema, shared
/// read-only across features.
#[derive(Clone, Debug)]
pub struct FeatureAnalyzer {
    schema: PanelSchema,
    groups: ThresholdGroups,
    method: Method,
    transform: Transform,
    imputations: usize,
    null: NullCdf,
}

impl FeatureAnalyzer {
    pub fn new(
        schema: &PanelSchema,
        method: Method,
        transform: Transform,
        imputations: usize,
    ) -> Result<Self> {
        Self::with_cap(schema, method, transform, imputations, DEFAULT_TERM_CAP)
    }

    pub fn with_cap(
        schema: &PanelSchema,
        method: Method,
        transform: Transform,
        imputations: usize,
        cap: u64,
    ) -> Result<Self> {
        let groups = schema.groups();
        let null = NullCdf::for_method(method, transform, schema.k1(), &groups, imputations, cap)?;
        Ok(FeatureAnalyzer {
            schema: schema.clone(),
            groups,
            method,
            transform,
            imputations,
            null,
        })
    }

    pub fn schema(&self) -> &PanelSchema {
        &self.schema
    }

    pub fn null(&self) -> &NullCdf {
        &self.null
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    /// The panel must match the schema.
    pub fn statistic(&self, panel: &StudyPanel, rng: &mut SeededRng) -> f64 {
        method_statistic(
            self.method,
            self.transform,
            panel,
            &self.groups,
            self.imputations,
            rng,
        )
    }

    pub fn combine(&self, panel: &StudyPanel, rng: &mut SeededRng) -> Combined {
        let statistic = self.statistic(panel, rng);
        Combined {
            statistic,
            p_meta: self.null.pvalue(statistic),
        }
    }
}

/// Meta-analyze a single feature with its own id-keyed random stream.
pub fn analyze_feature(
    row: &FeatureRow,
    method: Method,
    transform: Transform,
    imputations: usize,
    seed: u64,
) -> Result<FeatureResult> {
    Ok(meta_analyze_matrix(
        std::slice::from_ref(row),
        method,
        transform,
        imputations,
        seed,
    )?
    .remove(0))
}

/// Meta-analyze every row, then attach B–H and B–Y q-values.
///
/// All rows must share one schema. The null distribution is built once and
/// each row draws from a stream keyed by `(seed, feature id)`, so results do
/// not depend on row order or thread scheduling.
pub fn meta_analyze_matrix(
    rows: &[FeatureRow],
    method: Method,
    transform: Transform,
    imputations: usize,
    seed: u64,
) -> Result<Vec<FeatureResult>> {
    let Some(first) = rows.first() else {
        return Ok(Vec::new());
    };
    let schema = PanelSchema::of(&first.panel);
    for (i, row) in rows.iter().enumerate() {
        if !schema.matches(&row.panel) {
            return Err(Error::Row {
                row: i,
                feature: row.id.clone(),
                message: format!(
                    "study layout differs from the first row ({} studies, {} censored expected)",
                    schema.k(),
                    schema.k2()
                ),
            });
        }
    }
    let analyzer = FeatureAnalyzer::new(&schema, method, transform, imputations)?;
    analyze_rows(&analyzer, rows, seed)
}

/// Run a prepared analyzer over rows already known to match its schema.
pub fn analyze_rows(
    analyzer: &FeatureAnalyzer,
    rows: &[FeatureRow],
    seed: u64,
) -> Result<Vec<FeatureResult>> {
    let combined: Vec<Combined> = rows
        .par_iter()
        .map(|row| {
            let mut rng = SeededRng::for_feature(seed, &row.id);
            analyzer.combine(&row.panel, &mut rng)
        })
        .collect();
    let p: Vec<f64> = combined.iter().map(|c| c.p_meta).collect();
    let q_bh = bh_adjust(&p)?;
    let q_by = by_adjust(&p)?;
    Ok(rows
        .iter()
        .zip(combined)
        .enumerate()
        .map(|(i, (row, c))| FeatureResult {
            feature_id: row.id.clone(),
            statistic: c.statistic,
            p_meta: c.p_meta,
            q_bh: q_bh[i],
            q_by: q_by[i],
            method: analyzer.method,
            transform: analyzer.transform,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdrOutcome {
    pub rate: f64,
    pub discoveries: usize,
    /// Set when nothing was detected; `rate` is then 0.
    pub no_discoveries: bool,
}

/// Fraction of detected features that are truly null.
pub fn true_fdr<T: Eq + Hash>(detected: &HashSet<T>, true_nulls: &HashSet<T>) -> FdrOutcome {
    if detected.is_empty() {
        return FdrOutcome {
            rate: 0.0,
            discoveries: 0,
            no_discoveries: true,
        };
    }
    let false_hits = detected.intersection(true_nulls).count();
    FdrOutcome {
        rate: false_hits as f64 / detected.len() as f64,
        discoveries: detected.len(),
        no_discoveries: false,
    }
}

/// Fraction of null p-values at or below `level`.
pub fn empirical_type1(null_pvalues: &[f64], level: f64) -> f64 {
    if null_pvalues.is_empty() {
        return 0.0;
    }
    null_pvalues.iter().filter(|&&p| p <= level).count() as f64 / null_pvalues.len() as f64
}
