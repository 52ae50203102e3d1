//! Simulated multi-study expression data, calibration and power studies, and
//! the Monte Carlo oracle for the analytic null distributions.

mod oracle;
mod studies;

pub use oracle::{
    mc_null_oracle, mc_null_statistics, sup_distance, validate_null, EmpiricalCdf, SupDistance,
};
pub use studies::{
    run_d_robustness, run_power_study, run_type1_study, write_table, DRobustRow, PowerRow,
    TableRow, Type1Row,
};

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{StandardNormal, Uniform};

use crate::config::{parse_kv, Entry};
use crate::error::{Error, Result};
use crate::model::{PanelSchema, StudyMode, P_FLOOR};
use crate::numerics::distributions::student_t_two_sided_p;
use crate::numerics::mvn::{covariance_to_correlation, InverseWishart, MultivariateNormal};
use crate::numerics::rng::SeededRng;

/// Censoring used by the reference simulations: the last five of ten
/// studies report only `p < α`.
pub const REFERENCE_THRESHOLDS: [f64; 5] = [0.001, 0.001, 0.01, 0.01, 0.05];

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub genes: usize,
    /// Samples per study; the first half are controls, the rest cases.
    pub samples: usize,
    pub studies: usize,
    pub n_clusters: usize,
    pub cluster_size: usize,
    /// Genes `0..n_de` are differentially expressed.
    pub n_de: usize,
    pub effect_range: (f64, f64),
    pub wishart_dof: usize,
    pub psi_diag: f64,
    pub psi_offdiag: f64,
    /// Per-study censoring threshold; `None` keeps the exact p-value.
    pub censor: Vec<Option<f64>>,
    pub reps: usize,
    pub seed: u64,
    /// Multiple-imputation draw count.
    pub imputations: usize,
    /// Significance level for type I error and D-robustness power.
    pub level: f64,
    /// Nominal FDR for detections.
    pub fdr: f64,
    pub d_values: Vec<usize>,
    pub reference_d: usize,
}

fn reference_censor(studies: usize) -> Vec<Option<f64>> {
    let mut c = vec![None; studies];
    let m = REFERENCE_THRESHOLDS.len().min(studies);
    for (slot, &a) in c[studies - m..]
        .iter_mut()
        .zip(&REFERENCE_THRESHOLDS[REFERENCE_THRESHOLDS.len() - m..])
    {
        *slot = Some(a);
    }
    c
}

impl SimConfig {
    /// Full-size setting: 10 000 genes, 200 clusters of 20, 1000 DE genes.
    pub fn full() -> Self {
        SimConfig {
            genes: 10_000,
            samples: 100,
            studies: 10,
            n_clusters: 200,
            cluster_size: 20,
            n_de: 1000,
            effect_range: (0.1, 0.5),
            wishart_dof: 60,
            psi_diag: 1.0,
            psi_offdiag: 0.5,
            censor: reference_censor(10),
            reps: 50,
            seed: 20_131_001,
            imputations: 50,
            level: 0.05,
            fdr: 0.05,
            d_values: vec![20, 30, 50, 100, 150, 200, 250, 300, 500],
            reference_d: 1000,
        }
    }

    /// Reduced scale with the same proportions: 2000 genes, 40 clusters,
    /// 200 DE genes, 10 replicates.
    pub fn desk() -> Self {
        SimConfig {
            genes: 2000,
            n_clusters: 40,
            n_de: 200,
            reps: 10,
            d_values: vec![20, 50, 200],
            ..Self::full()
        }
    }

    /// Reduced-scale type I setting: 3000 genes, 300 DE genes.
    pub fn desk_type1() -> Self {
        SimConfig {
            genes: 3000,
            n_clusters: 60,
            n_de: 300,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.genes == 0 || self.studies == 0 || self.reps == 0 {
            return bad("genes, studies and reps must be positive".into());
        }
        if self.samples < 4 || !self.samples.is_multiple_of(2) {
            return bad(format!(
                "samples must be even and at least 4, got {}",
                self.samples
            ));
        }
        if self.n_clusters * self.cluster_size > self.genes {
            return bad(format!(
                "{} clusters of {} exceed {} genes",
                self.n_clusters, self.cluster_size, self.genes
            ));
        }
        if self.n_de > self.genes {
            return bad(format!("n_de {} exceeds {} genes", self.n_de, self.genes));
        }
        let (lo, hi) = self.effect_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return bad(format!("effect range ({lo}, {hi}) must satisfy lo < hi"));
        }
        if self.n_clusters > 0 && self.wishart_dof <= self.cluster_size + 1 {
            return bad(format!(
                "wishart_dof {} must exceed cluster_size + 1",
                self.wishart_dof
            ));
        }
        if self.censor.len() != self.studies {
            return bad(format!(
                "censor pattern has {} entries for {} studies",
                self.censor.len(),
                self.studies
            ));
        }
        if self.imputations == 0 || self.reference_d == 0 || self.d_values.contains(&0) {
            return bad("imputation counts must be positive".into());
        }
        for (what, v) in [("level", self.level), ("fdr", self.fdr)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{what} must lie in (0, 1), got {v}"));
            }
        }
        self.schema().map(|_| ())
    }

    /// Panel schema of the censored (observed) data.
    pub fn schema(&self) -> Result<PanelSchema> {
        PanelSchema::new(
            self.censor
                .iter()
                .map(|c| match *c {
                    Some(threshold) => StudyMode::Censored { threshold },
                    None => StudyMode::Observed,
                })
                .collect(),
        )
    }

    /// Schema with every study observed.
    pub fn full_schema(&self) -> Result<PanelSchema> {
        PanelSchema::new(vec![StudyMode::Observed; self.studies])
    }

    fn psi(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.cluster_size, self.cluster_size, |i, j| {
            if i == j {
                self.psi_diag
            } else {
                self.psi_offdiag
            }
        })
    }

    /// Apply `key = value` overrides. A `preset` key (`desk`, `type1`,
    /// `full`) selects the starting point and is applied first.
    pub fn from_entries(entries: &[Entry], origin: &str) -> Result<Self> {
        let err = |e: &Entry, m: String| Error::Config {
            path: origin.to_string(),
            message: format!("line {}: {}: {m}", e.line, e.key),
        };
        let mut cfg = match entries.iter().find(|e| e.key == "preset") {
            None => Self::desk(),
            Some(e) => match e.value.as_str() {
                "desk" => Self::desk(),
                "type1" => Self::desk_type1(),
                "full" => Self::full(),
                other => return Err(err(e, format!("unknown preset '{other}'"))),
            },
        };
        let mut censor_set = false;
        for e in entries {
            let v = e.value.as_str();
            macro_rules! num {
                () => {
                    v.parse().map_err(|x| err(e, format!("'{v}': {x}")))?
                };
            }
            match e.key.as_str() {
                "preset" => {}
                "genes" => cfg.genes = num!(),
                "samples" => cfg.samples = num!(),
                "studies" => cfg.studies = num!(),
                "clusters" => cfg.n_clusters = num!(),
                "cluster_size" => cfg.cluster_size = num!(),
                "n_de" => cfg.n_de = num!(),
                "effect_lo" => cfg.effect_range.0 = num!(),
                "effect_hi" => cfg.effect_range.1 = num!(),
                "wishart_dof" => cfg.wishart_dof = num!(),
                "psi_diag" => cfg.psi_diag = num!(),
                "psi_offdiag" => cfg.psi_offdiag = num!(),
                "reps" => cfg.reps = num!(),
                "seed" => cfg.seed = num!(),
                "imputations" => cfg.imputations = num!(),
                "level" => cfg.level = num!(),
                "fdr" => cfg.fdr = num!(),
                "reference_d" => cfg.reference_d = num!(),
                "d_values" => {
                    cfg.d_values = v
                        .split(',')
                        .map(|s| s.trim().parse::<usize>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|x| err(e, format!("'{v}': {x}")))?
                }
                "censor" => {
                    censor_set = true;
                    cfg.censor = if v == "none" {
                        Vec::new()
                    } else {
                        v.split(',')
                            .map(|s| match s.trim() {
                                "-" => Ok(None),
                                t => t
                                    .parse::<f64>()
                                    .map(Some)
                                    .map_err(|x| err(e, format!("'{t}': {x}"))),
                            })
                            .collect::<Result<_>>()?
                    }
                }
                other => return Err(err(e, format!("unknown key '{other}'"))),
            }
        }
        if !censor_set && cfg.censor.len() != cfg.studies {
            cfg.censor = reference_censor(cfg.studies);
        }
        if cfg.censor.is_empty() {
            cfg.censor = vec![None; cfg.studies];
        }
        cfg.validate().map_err(|e| Error::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        Self::from_entries(&parse_kv(text, origin)?, origin)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_entries(&crate::config::read_kv(path)?, &path.display().to_string())
    }
}

/// Expression for `genes × samples × studies`, plus the ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct SimDataset {
    pub genes: usize,
    pub samples: usize,
    pub studies: usize,
    /// Study-major: `expression[(k·G + g)·N + n]`.
    pub expression: Vec<f64>,
    pub de: Vec<bool>,
    /// 0 for unclustered genes, otherwise `1..=C`.
    pub cluster_labels: Vec<usize>,
    /// `effects[g·K + k]`.
    pub effects: Vec<f64>,
}

impl SimDataset {
    pub fn row(&self, gene: usize, study: usize) -> &[f64] {
        let start = (study * self.genes + gene) * self.samples;
        &self.expression[start..start + self.samples]
    }

    /// Pooled two-sample t-test p-value per gene and study (`G` rows of `K`).
    pub fn pvalues(&self) -> Result<Vec<Vec<f64>>> {
        let half = self.samples / 2;
        (0..self.genes)
            .map(|g| {
                (0..self.studies)
                    .map(|k| {
                        let r = self.row(g, k);
                        pooled_t_test(&r[..half], &r[half..]).map(|(_, p)| p.max(P_FLOOR))
                    })
                    .collect()
            })
            .collect()
    }
}

/// Pooled-variance two-sample t-test of `case − control`; returns
/// `(t, two-sided p)` on `n1 + n2 − 2` degrees of freedom.
pub fn pooled_t_test(control: &[f64], case: &[f64]) -> Result<(f64, f64)> {
    let (n1, n2) = (control.len(), case.len());
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidArgument(
            "t-test needs at least two samples per group".into(),
        ));
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let (m1, m2) = (mean(control), mean(case));
    let ss = |x: &[f64], m: f64| x.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
    let df = (n1 + n2 - 2) as f64;
    let sp2 = (ss(control, m1) + ss(case, m2)) / df;
    let se = (sp2 * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    if !(se > 0.0) {
        return Err(Error::InvalidArgument(
            "t-test on constant data is undefined".into(),
        ));
    }
    let t = (m2 - m1) / se;
    Ok((t, student_t_two_sided_p(t, df)?))
}

fn cluster_labels(config: &SimConfig, rng: &mut SeededRng) -> Vec<usize> {
    let mut labels = vec![0usize; config.genes];
    for (i, l) in labels
        .iter_mut()
        .take(config.n_clusters * config.cluster_size)
        .enumerate()
    {
        *l = i / config.cluster_size + 1;
    }
    labels.shuffle(rng);
    labels
}

fn empty_dataset(config: &SimConfig, labels: Vec<usize>) -> SimDataset {
    SimDataset {
        genes: config.genes,
        samples: config.samples,
        studies: config.studies,
        expression: vec![0.0; config.genes * config.samples * config.studies],
        de: (0..config.genes).map(|g| g < config.n_de).collect(),
        cluster_labels: labels,
        effects: vec![0.0; config.genes * config.studies],
    }
}

fn add_effects(config: &SimConfig, data: &mut SimDataset, rng: &mut SeededRng) -> Result<()> {
    let (lo, hi) = config.effect_range;
    let unif = Uniform::new(lo, hi).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let (g_n, n_n, k_n) = (data.genes, data.samples, data.studies);
    for g in 0..config.n_de {
        for k in 0..k_n {
            let mu = rng.sample(unif);
            data.effects[g * k_n + k] = mu;
            let start = (k * g_n + g) * n_n;
            for v in &mut data.expression[start + n_n / 2..start + n_n] {
                *v += mu;
            }
        }
    }
    Ok(())
}

/// Clustered genes drawn jointly normal with an inverse-Wishart-derived
/// correlation per cluster and study; the rest independent N(0, 1).
pub fn simulate_correlated(config: &SimConfig, rng: &mut SeededRng) -> Result<SimDataset> {
    config.validate()?;
    let labels = cluster_labels(config, rng);
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); config.n_clusters + 1];
    for (g, &c) in labels.iter().enumerate() {
        members[c].push(g);
    }
    let mut data = empty_dataset(config, labels);
    let (g_n, n_n) = (config.genes, config.samples);
    let iw = if config.n_clusters > 0 {
        Some(InverseWishart::new(&config.psi(), config.wishart_dof)?)
    } else {
        None
    };
    let size = config.cluster_size;
    let mut z = vec![0.0; size];
    let mut x = vec![0.0; size];
    for k in 0..config.studies {
        for g in &members[0] {
            let start = (k * g_n + g) * n_n;
            for v in &mut data.expression[start..start + n_n] {
                *v = rng.sample(StandardNormal);
            }
        }
        if let Some(iw) = &iw {
            for cluster in &members[1..] {
                let sigma = covariance_to_correlation(&iw.sample(rng))?;
                let mvn = MultivariateNormal::new(DVector::zeros(size), &sigma)?;
                for n in 0..n_n {
                    mvn.sample_into(rng, &mut z, &mut x);
                    for (j, &g) in cluster.iter().enumerate() {
                        data.expression[(k * g_n + g) * n_n + n] = x[j];
                    }
                }
            }
        }
    }
    add_effects(config, &mut data, rng)?;
    Ok(data)
}

/// Every gene independent N(0, 1) before the case shift.
pub fn simulate_independent(config: &SimConfig, rng: &mut SeededRng) -> Result<SimDataset> {
    config.validate()?;
    let mut data = empty_dataset(config, vec![0; config.genes]);
    for v in &mut data.expression {
        *v = rng.sample(StandardNormal);
    }
    add_effects(config, &mut data, rng)?;
    Ok(data)
}
