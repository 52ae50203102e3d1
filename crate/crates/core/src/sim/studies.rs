//! Replicated calibration, power, and imputation-count studies.

use std::collections::HashSet;
use std::io::Write;

use rand::RngCore;
use rayon::prelude::*;

use super::{simulate_correlated, simulate_independent, SimConfig, SimDataset};
use crate::error::{Error, Result};
use crate::imputation::Method;
use crate::inference::{
    analyze_rows, empirical_type1, true_fdr, FeatureAnalyzer, FeatureResult, FeatureRow,
};
use crate::model::{PanelSchema, Transform};
use crate::numerics::rng::SeededRng;

const DATA_STREAM: u64 = 1;
const IMPUTE_STREAM: u64 = 2;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// One row of a study table, written as CSV.
pub trait TableRow {
    fn header() -> &'static [&'static str];
    fn record(&self) -> Vec<String>;
}

pub fn write_table<R: TableRow, W: Write>(rows: &[R], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header())?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush().map_err(|e| Error::Store(e.to_string()))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Type1Row {
    pub method: Method,
    pub transform: Transform,
    pub mean: f64,
    pub se: f64,
}

impl TableRow for Type1Row {
    fn header() -> &'static [&'static str] {
        &["method", "transform", "type1_mean", "type1_se"]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.method.to_string(),
            self.transform.to_string(),
            self.mean.to_string(),
            self.se.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerRow {
    pub procedure: &'static str,
    pub method: Method,
    pub transform: Transform,
    pub detections_mean: f64,
    pub detections_se: f64,
    pub fdr_mean: f64,
    pub fdr_se: f64,
}

impl TableRow for PowerRow {
    fn header() -> &'static [&'static str] {
        &[
            "procedure",
            "method",
            "transform",
            "detections_mean",
            "detections_se",
            "true_fdr_mean",
            "true_fdr_se",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.procedure.to_string(),
            self.method.to_string(),
            self.transform.to_string(),
            self.detections_mean.to_string(),
            self.detections_se.to_string(),
            self.fdr_mean.to_string(),
            self.fdr_se.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DRobustRow {
    pub transform: Transform,
    pub method: Method,
    /// Draw count; 1 for single imputation.
    pub d: usize,
    pub reference: bool,
    pub power_mean: f64,
    pub power_se: f64,
}

impl TableRow for DRobustRow {
    fn header() -> &'static [&'static str] {
        &[
            "transform",
            "method",
            "d",
            "reference",
            "power_mean",
            "power_se",
        ]
    }

    fn record(&self) -> Vec<String> {
        vec![
            self.transform.to_string(),
            self.method.to_string(),
            self.d.to_string(),
            self.reference.to_string(),
            self.power_mean.to_string(),
            self.power_se.to_string(),
        ]
    }
}

/// One replicate's study p-values as full and censored feature rows.
struct Replicate {
    full: Vec<FeatureRow>,
    censored: Vec<FeatureRow>,
    de: Vec<bool>,
    impute_seed: u64,
}

fn replicate(
    config: &SimConfig,
    rep: usize,
    simulate: fn(&SimConfig, &mut SeededRng) -> Result<SimDataset>,
) -> Result<Replicate> {
    let mut rng = SeededRng::derive(config.seed, &[rep as u64, DATA_STREAM]);
    let data = simulate(config, &mut rng)?;
    let pvalues = data.pvalues()?;
    let (full_schema, schema) = (config.full_schema()?, config.schema()?);
    let mut full = Vec::with_capacity(config.genes);
    let mut censored = Vec::with_capacity(config.genes);
    for (g, p) in pvalues.iter().enumerate() {
        let id = format!("g{g}");
        full.push(FeatureRow {
            id: id.clone(),
            panel: full_schema.apply(p)?,
        });
        censored.push(FeatureRow {
            id,
            panel: schema.apply(p)?,
        });
    }
    let impute_seed = SeededRng::derive(config.seed, &[rep as u64, IMPUTE_STREAM]).next_u64();
    Ok(Replicate {
        full,
        censored,
        de: data.de,
        impute_seed,
    })
}

fn analyzer(
    config: &SimConfig,
    method: Method,
    transform: Transform,
    d: usize,
) -> Result<(FeatureAnalyzer, bool)> {
    // complete-case analysis sees the uncensored p-values
    let full = method == Method::Complete;
    let schema: PanelSchema = if full {
        config.full_schema()?
    } else {
        config.schema()?
    };
    Ok((FeatureAnalyzer::new(&schema, method, transform, d)?, full))
}

fn run(rep: &Replicate, analyzer: &(FeatureAnalyzer, bool)) -> Result<Vec<FeatureResult>> {
    let rows = if analyzer.1 { &rep.full } else { &rep.censored };
    analyze_rows(&analyzer.0, rows, rep.impute_seed)
}

fn cells(config: &SimConfig) -> Result<Vec<(Method, Transform, (FeatureAnalyzer, bool))>> {
    let mut out = Vec::new();
    for method in Method::ALL {
        for transform in Transform::ALL {
            out.push((
                method,
                transform,
                analyzer(config, method, transform, config.imputations)?,
            ));
        }
    }
    Ok(out)
}

fn replicates<T: Send>(
    config: &SimConfig,
    simulate: fn(&SimConfig, &mut SeededRng) -> Result<SimDataset>,
    per_rep: impl Fn(&Replicate) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    config.validate()?;
    (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let rep = replicate(config, r, simulate)?;
            per_rep(&rep)
        })
        .collect()
}

/// Empirical type I error at `config.level` over the non-DE genes of
/// independent data, per method and transform.
pub fn run_type1_study(config: &SimConfig) -> Result<Vec<Type1Row>> {
    let cells = cells(config)?;
    let per_rep = replicates(config, simulate_independent, |rep| {
        cells
            .iter()
            .map(|(_, _, a)| {
                let res = run(rep, a)?;
                let nulls: Vec<f64> = res
                    .iter()
                    .zip(&rep.de)
                    .filter(|(_, &de)| !de)
                    .map(|(r, _)| r.p_meta)
                    .collect();
                Ok(empirical_type1(&nulls, config.level))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(cells
        .iter()
        .enumerate()
        .map(|(i, (method, transform, _))| {
            let xs: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
            let (mean, se) = mean_se(&xs);
            Type1Row {
                method: *method,
                transform: *transform,
                mean,
                se,
            }
        })
        .collect())
}

/// Detections at nominal FDR `config.fdr` under B–H and B–Y, with the true
/// FDR, on correlated data.
pub fn run_power_study(config: &SimConfig) -> Result<Vec<PowerRow>> {
    let cells = cells(config)?;
    // per replicate, per cell: [(count, fdr) for BH, (count, fdr) for BY]
    let per_rep = replicates(config, simulate_correlated, |rep| {
        let nulls: HashSet<usize> = (0..rep.de.len()).filter(|&g| !rep.de[g]).collect();
        cells
            .iter()
            .map(|(_, _, a)| {
                let res = run(rep, a)?;
                let pick = |q: fn(&FeatureResult) -> f64| {
                    let det: HashSet<usize> = res
                        .iter()
                        .enumerate()
                        .filter(|(_, r)| q(r) <= config.fdr)
                        .map(|(g, _)| g)
                        .collect();
                    let out = true_fdr(&det, &nulls);
                    (out.discoveries as f64, out.rate)
                };
                Ok([pick(|r| r.q_bh), pick(|r| r.q_by)])
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::new();
    for (p, procedure) in ["BH", "BY"].into_iter().enumerate() {
        for (i, (method, transform, _)) in cells.iter().enumerate() {
            let det: Vec<f64> = per_rep.iter().map(|r| r[i][p].0).collect();
            let fdr: Vec<f64> = per_rep.iter().map(|r| r[i][p].1).collect();
            let (dm, ds) = mean_se(&det);
            let (fm, fs) = mean_se(&fdr);
            rows.push(PowerRow {
                procedure,
                method: *method,
                transform: *transform,
                detections_mean: dm,
                detections_se: ds,
                fdr_mean: fm,
                fdr_se: fs,
            });
        }
    }
    Ok(rows)
}

/// Power at `config.level` over DE genes for multiple imputation at each
/// `d_values` entry, a large-D reference, and single imputation, on the
/// same correlated data.
pub fn run_d_robustness(config: &SimConfig, d_values: &[usize]) -> Result<Vec<DRobustRow>> {
    if d_values.contains(&0) {
        return Err(Error::InvalidArgument("D must be positive".into()));
    }
    let mut specs: Vec<(Transform, Method, usize, bool)> = Vec::new();
    for transform in Transform::ALL {
        for &d in d_values {
            specs.push((transform, Method::Multiple, d, false));
        }
        specs.push((transform, Method::Multiple, config.reference_d, true));
        specs.push((transform, Method::Single, 1, false));
    }
    let analyzers = specs
        .iter()
        .map(|&(t, m, d, _)| analyzer(config, m, t, d))
        .collect::<Result<Vec<_>>>()?;
    let per_rep = replicates(config, simulate_correlated, |rep| {
        analyzers
            .iter()
            .map(|a| {
                let res = run(rep, a)?;
                let de: Vec<f64> = res
                    .iter()
                    .zip(&rep.de)
                    .filter(|(_, &de)| de)
                    .map(|(r, _)| r.p_meta)
                    .collect();
                Ok(empirical_type1(&de, config.level))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(specs
        .iter()
        .enumerate()
        .map(|(i, &(transform, method, d, reference))| {
            let xs: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
            let (power_mean, power_se) = mean_se(&xs);
            DRobustRow {
                transform,
                method,
                d,
                reference,
                power_mean,
                power_se,
            }
        })
        .collect())
}
