use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use truncmeta::imputation::{truncated_moments, Method, DEFAULT_IMPUTATIONS};
use truncmeta::inference::{meta_analyze_matrix, FeatureResult, FeatureRow};
use truncmeta::ingest::{ingest_csv, numeric_ids, read_pvalue_csv, read_schema, read_thresholds};
use truncmeta::model::{ThresholdGroups, Transform};
use truncmeta::sim::{
    run_d_robustness, run_power_study, run_type1_study, validate_null, write_table, SimConfig,
};
use truncmeta::store::{is_store, read_store, truncate_matrix, write_store};

/// Marks errors caused by how the tool was invoked (exit status 1).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(
    name = "truncmeta",
    version,
    about = "Meta-analysis of p-values when some studies report only p < alpha"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Complete,
    Available,
    Mean,
    Single,
    Multiple,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Complete => Method::Complete,
            MethodArg::Available => Method::Available,
            MethodArg::Mean => Method::Mean,
            MethodArg::Single => Method::Single,
            MethodArg::Multiple => Method::Multiple,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransformArg {
    Fisher,
    Stouffer,
}

impl From<TransformArg> for Transform {
    fn from(t: TransformArg) -> Self {
        match t {
            TransformArg::Fisher => Transform::Fisher,
            TransformArg::Stouffer => Transform::Stouffer,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FdrArg {
    Bh,
    By,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StudyArg {
    Type1,
    Power,
    Drobust,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Combine per-study evidence for every feature and adjust for FDR.
    Combine {
        /// CSV of study columns, or a TPV1 store.
        #[arg(long)]
        input: PathBuf,
        /// Per-study schema (required for CSV input).
        #[arg(long)]
        schema: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, value_enum)]
        transform: TransformArg,
        /// Imputations per censored study (multiple imputation only).
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "bh")]
        fdr: FdrArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a simulation study and write its table.
    Simulate {
        /// key = value overrides of the desk-scale configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        study: StudyArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Truncate a full p-value CSV into a TPV1 store.
    Truncate {
        #[arg(long)]
        input: PathBuf,
        /// study = <alpha> | observed
        #[arg(long)]
        thresholds: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare an analytic null CDF against its Monte Carlo oracle.
    Validate {
        #[arg(long, value_enum)]
        method: MethodArg,
        #[arg(long, value_enum)]
        transform: TransformArg,
        /// Number of observed studies.
        #[arg(long, default_value_t = 2)]
        k1: usize,
        /// Comma-separated censoring thresholds.
        #[arg(long, default_value = "0.01,0.05")]
        thresholds: String,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 1_000_000)]
        draws: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Order statistics at which both CDFs are evaluated.
        #[arg(long, default_value_t = 20_000)]
        grid: usize,
    },
    /// Print the truncated moments at a threshold.
    Moments {
        #[arg(long, value_enum)]
        transform: TransformArg,
        #[arg(long)]
        alpha: f64,
    },
}

fn imputations(method: Method, d: Option<usize>) -> Result<usize> {
    match (method, d) {
        (Method::Multiple, Some(0)) => Err(usage("--d must be positive")),
        (Method::Multiple, Some(d)) => Ok(d),
        (Method::Multiple, None) => Ok(DEFAULT_IMPUTATIONS),
        (_, Some(_)) => Err(usage(format!(
            "--d applies only to --method multiple, not {method}"
        ))),
        (_, None) => Ok(DEFAULT_IMPUTATIONS),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

// numeric ids in numeric order, then the rest lexicographically
fn id_key(id: &str) -> (u8, u64, &str) {
    match id.parse::<u64>() {
        Ok(n) => (0, n, id),
        Err(_) => (1, 0, id),
    }
}

fn write_results(path: &Path, results: &mut [FeatureResult], fdr: FdrArg) -> Result<()> {
    results.sort_by(|a, b| id_key(&a.feature_id).cmp(&id_key(&b.feature_id)));
    let mut w = create(path)?;
    writeln!(w, "feature_id,statistic,p_meta,q_value")?;
    for r in results.iter() {
        let q = match fdr {
            FdrArg::Bh => r.q_bh,
            FdrArg::By => r.q_by,
        };
        writeln!(w, "{},{},{},{}", r.feature_id, r.statistic, r.p_meta, q)?;
    }
    w.flush()?;
    Ok(())
}

fn load_rows(input: &Path, schema: Option<&Path>) -> Result<Vec<FeatureRow>> {
    if is_store(input)? {
        if schema.is_some() {
            return Err(usage(
                "--schema conflicts with store input (the store carries its own)",
            ));
        }
        Ok(read_store(input)?.to_rows())
    } else {
        let schema = schema.ok_or_else(|| usage("--schema is required for CSV input"))?;
        Ok(ingest_csv(input, &read_schema(schema)?)?.rows)
    }
}

fn parse_thresholds(s: &str) -> Result<ThresholdGroups> {
    let v = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| usage(format!("threshold '{t}': {e}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    ThresholdGroups::from_thresholds(&v).map_err(|e| usage(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Combine {
            input,
            schema,
            method,
            transform,
            d,
            seed,
            fdr,
            out,
        } => {
            let method = Method::from(method);
            let d = imputations(method, d)?;
            let rows = load_rows(&input, schema.as_deref())?;
            let mut results = meta_analyze_matrix(&rows, method, transform.into(), d, seed)?;
            write_results(&out, &mut results, fdr)?;
            log::info!("wrote {} features to {}", results.len(), out.display());
        }
        Command::Simulate { config, study, out } => {
            let cfg = match &config {
                Some(p) => SimConfig::from_file(p)?,
                None => SimConfig::desk(),
            };
            let w = create(&out)?;
            match study {
                StudyArg::Type1 => write_table(&run_type1_study(&cfg)?, w)?,
                StudyArg::Power => write_table(&run_power_study(&cfg)?, w)?,
                StudyArg::Drobust => write_table(&run_d_robustness(&cfg, &cfg.d_values)?, w)?,
            }
        }
        Command::Truncate {
            input,
            thresholds,
            out,
        } => {
            let m = read_pvalue_csv(&input)?;
            let thr = read_thresholds(&thresholds, &m.study_names)?;
            let (ids, kept) = numeric_ids(&m.ids);
            if !kept {
                log::warn!("feature ids are not all unsigned integers; storing row ordinals");
            }
            let (store, report) = truncate_matrix(&ids, &m.pvalues, &thr)?;
            write_store(&store, &out)?;
            println!("records {}", store.len());
            println!("{}", report.describe());
        }
        Command::Validate {
            method,
            transform,
            k1,
            thresholds,
            d,
            draws,
            seed,
            grid,
        } => {
            let method = Method::from(method);
            let d = imputations(method, d)?;
            let groups = parse_thresholds(&thresholds)?;
            if draws == 0 || grid == 0 {
                bail!(usage("--draws and --grid must be positive"));
            }
            let sd = validate_null(method, transform.into(), k1, &groups, d, draws, seed, grid)?;
            println!("draws {draws}");
            println!("sup_distance {:.6}", sd.upper);
            println!("sup_distance_lower {:.6}", sd.lower);
        }
        Command::Moments { transform, alpha } => {
            let m = truncated_moments(transform.into(), alpha).map_err(|e| usage(e.to_string()))?;
            println!("mu_W={:.6}", m.mu_w);
            println!("sigma2_W={:.6}", m.var_w);
            println!("mu_V={:.6}", m.mu_v);
            println!("sigma2_V={:.6}", m.var_v);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
