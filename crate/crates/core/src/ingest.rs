//! CSV ingestion of study p-values under a per-study schema.
//!
//! The CSV has a header row; the first column holds feature ids and each
//! other column one study. A separate `key = value` schema file declares
//! every study, in panel order:
//!
//! ```text
//! study_a = observed
//! study_b = censored:0.01
//! study_c = delist:0.05:published_hits.txt
//! ```
//!
//! `observed` columns hold p-values in (0, 1], `censored` columns 0/1
//! indicators of `p < α`. A `delist` study has no CSV column: features named
//! in the list file are marked below the threshold, all others above.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use crate::config::read_kv;
use crate::error::{Error, Result};
use crate::inference::FeatureRow;
use crate::model::{check_pvalue, PanelSchema, StudyMode, StudyObservation, StudyPanel};

#[derive(Clone, Debug, PartialEq)]
pub enum StudySource {
    Observed,
    Censored { threshold: f64 },
    DeList { threshold: f64, list: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudySpec {
    pub name: String,
    pub source: StudySource,
}

fn parse_threshold(s: &str) -> Option<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|a| *a > 0.0 && *a < 1.0)
}

/// Read a schema file. Relative list paths resolve against its directory.
pub fn read_schema(path: &Path) -> Result<Vec<StudySpec>> {
    let origin = path.display().to_string();
    let base = path.parent().unwrap_or(Path::new("."));
    let mut out = Vec::new();
    for e in read_kv(path)? {
        let bad = |m: String| Error::Config {
            path: origin.clone(),
            message: format!("line {}: {}: {m}", e.line, e.key),
        };
        let v = e.value.as_str();
        let source = if v == "observed" {
            StudySource::Observed
        } else if let Some(a) = v.strip_prefix("censored:") {
            StudySource::Censored {
                threshold: parse_threshold(a)
                    .ok_or_else(|| bad(format!("threshold '{a}' must lie in (0, 1)")))?,
            }
        } else if let Some(rest) = v.strip_prefix("delist:") {
            let (a, list) = rest
                .split_once(':')
                .ok_or_else(|| bad("expected delist:<alpha>:<path>".into()))?;
            StudySource::DeList {
                threshold: parse_threshold(a)
                    .ok_or_else(|| bad(format!("threshold '{a}' must lie in (0, 1)")))?,
                list: base.join(list.trim()),
            }
        } else {
            return Err(bad(format!(
                "unknown mode '{v}' (expected observed, censored:<alpha> or delist:<alpha>:<path>)"
            )));
        };
        out.push(StudySpec {
            name: e.key,
            source,
        });
    }
    if out.is_empty() {
        return Err(Error::Config {
            path: origin,
            message: "no studies declared".into(),
        });
    }
    Ok(out)
}

/// Ingested features with their shared schema.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyMatrix {
    pub study_names: Vec<String>,
    pub schema: PanelSchema,
    pub rows: Vec<FeatureRow>,
}

fn read_id_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

/// Indicator per universe feature: listed ⇒ below `threshold`.
pub fn ingest_de_list(
    list: &Path,
    universe: &Path,
    threshold: f64,
) -> Result<Vec<(String, StudyObservation)>> {
    let ids = read_id_list(universe)?;
    let listed = listed_set(list, &ids)?;
    ids.into_iter()
        .map(|id| {
            let below = listed.contains(id.as_str());
            Ok((id, StudyObservation::censored(below, threshold)?))
        })
        .collect()
}

fn listed_set(list: &Path, universe: &[String]) -> Result<HashSet<String>> {
    let listed: HashSet<String> = read_id_list(list)?.into_iter().collect();
    let known: HashSet<&str> = universe.iter().map(String::as_str).collect();
    let stray = listed
        .iter()
        .filter(|id| !known.contains(id.as_str()))
        .count();
    if stray > 0 {
        log::warn!(
            "{}: {stray} listed ids are not in the feature universe",
            list.display()
        );
    }
    Ok(listed)
}

fn data_err(path: &Path, line: usize, column: &str, message: String) -> Error {
    Error::Data {
        path: path.display().to_string(),
        line,
        column: column.to_string(),
        message,
    }
}

/// Parsed CSV: study names from the header, then `(id, cells, line)` rows.
type RawCsv = (Vec<String>, Vec<(String, Vec<String>, usize)>);

fn read_raw(path: &Path) -> Result<RawCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| {
            if e.is_io_error() {
                match e.into_kind() {
                    csv::ErrorKind::Io(io) => Error::io(path, io),
                    _ => unreachable!(),
                }
            } else {
                Error::Csv(e)
            }
        })?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() {
        return Err(data_err(path, 1, "", "missing header row".into()));
    }
    let mut seen = HashSet::new();
    for h in &header[1..] {
        if !seen.insert(h.as_str()) {
            return Err(data_err(path, 1, h, "duplicate column".into()));
        }
    }
    let mut rows = Vec::new();
    let mut ids = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            data_err(path, line, "", e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(data_err(
                path,
                line,
                "",
                format!("{} cells, header has {}", rec.len(), header.len()),
            ));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(data_err(path, line, &header[0], "empty feature id".into()));
        }
        if !ids.insert(id.clone()) {
            return Err(data_err(
                path,
                line,
                &header[0],
                format!("duplicate feature id '{id}'"),
            ));
        }
        rows.push((id, rec.iter().skip(1).map(str::to_string).collect(), line));
    }
    Ok((header, rows))
}

/// Read a CSV of study columns under `specs`.
pub fn ingest_csv(path: &Path, specs: &[StudySpec]) -> Result<StudyMatrix> {
    let (header, raw) = read_raw(path)?;
    let col_of: HashMap<&str, usize> = header[1..]
        .iter()
        .enumerate()
        .map(|(i, h)| (h.as_str(), i))
        .collect();
    let declared: HashSet<&str> = specs.iter().map(|s| s.name.as_str()).collect();
    for h in &header[1..] {
        if !declared.contains(h.as_str()) {
            return Err(data_err(path, 1, h, "column not declared in schema".into()));
        }
    }
    let ids: Vec<String> = raw.iter().map(|r| r.0.clone()).collect();
    // per study: column index or delist set
    enum Src {
        Col(usize),
        List(HashSet<String>),
    }
    let mut sources = Vec::with_capacity(specs.len());
    let mut modes = Vec::with_capacity(specs.len());
    for s in specs {
        match &s.source {
            StudySource::DeList { threshold, list } => {
                if col_of.contains_key(s.name.as_str()) {
                    return Err(data_err(
                        path,
                        1,
                        &s.name,
                        "delist study must not also be a CSV column".into(),
                    ));
                }
                sources.push(Src::List(listed_set(list, &ids)?));
                modes.push(StudyMode::Censored {
                    threshold: *threshold,
                });
            }
            other => {
                let col = *col_of.get(s.name.as_str()).ok_or_else(|| {
                    data_err(path, 1, &s.name, "schema study missing from CSV".into())
                })?;
                sources.push(Src::Col(col));
                modes.push(match other {
                    StudySource::Censored { threshold } => StudyMode::Censored {
                        threshold: *threshold,
                    },
                    _ => StudyMode::Observed,
                });
            }
        }
    }
    let schema = PanelSchema::new(modes)?;
    let mut rows = Vec::with_capacity(raw.len());
    for (id, cells, line) in raw {
        let mut obs = Vec::with_capacity(specs.len());
        for ((spec, src), mode) in specs.iter().zip(&sources).zip(schema.modes()) {
            let o = match (src, *mode) {
                (Src::List(set), StudyMode::Censored { threshold }) => StudyObservation::Censored {
                    below: set.contains(&id),
                    threshold,
                },
                (Src::Col(c), StudyMode::Observed) => {
                    let cell = &cells[*c];
                    let p: f64 = cell.parse().map_err(|_| {
                        data_err(path, line, &spec.name, format!("'{cell}' is not a number"))
                    })?;
                    check_pvalue(p).map_err(|_| {
                        data_err(path, line, &spec.name, format!("p-value {p} not in (0, 1]"))
                    })?;
                    StudyObservation::Observed { p }
                }
                (Src::Col(c), StudyMode::Censored { threshold }) => {
                    let below = match cells[*c].as_str() {
                        "1" => true,
                        "0" => false,
                        other => {
                            return Err(data_err(
                                path,
                                line,
                                &spec.name,
                                format!("indicator '{other}' must be 0 or 1"),
                            ))
                        }
                    };
                    StudyObservation::Censored { below, threshold }
                }
                (Src::List(_), StudyMode::Observed) => unreachable!("delist is censored"),
            };
            obs.push(o);
        }
        rows.push(FeatureRow {
            id,
            panel: StudyPanel::new(obs)?,
        });
    }
    log::info!(
        "{}: {} features, {} studies ({} censored)",
        path.display(),
        rows.len(),
        schema.k(),
        schema.k2()
    );
    Ok(StudyMatrix {
        study_names: specs.iter().map(|s| s.name.clone()).collect(),
        schema,
        rows,
    })
}

/// A full p-value matrix: every study column holds p-values.
#[derive(Clone, Debug, PartialEq)]
pub struct PValueMatrix {
    pub study_names: Vec<String>,
    pub ids: Vec<String>,
    pub pvalues: Vec<Vec<f64>>,
}

pub fn read_pvalue_csv(path: &Path) -> Result<PValueMatrix> {
    let (header, raw) = read_raw(path)?;
    let names = header[1..].to_vec();
    let mut ids = Vec::with_capacity(raw.len());
    let mut pvalues = Vec::with_capacity(raw.len());
    for (id, cells, line) in raw {
        let row = cells
            .iter()
            .zip(&names)
            .map(|(cell, name)| {
                let p: f64 = cell
                    .parse()
                    .map_err(|_| data_err(path, line, name, format!("'{cell}' is not a number")))?;
                check_pvalue(p).map_err(|_| {
                    data_err(path, line, name, format!("p-value {p} not in (0, 1]"))
                })?;
                Ok(p)
            })
            .collect::<Result<Vec<f64>>>()?;
        ids.push(id);
        pvalues.push(row);
    }
    Ok(PValueMatrix {
        study_names: names,
        ids,
        pvalues,
    })
}

/// Per-study truncation thresholds: `study = <alpha>` or `study = observed`.
/// Studies not named stay observed; unknown names are rejected.
pub fn read_thresholds(path: &Path, study_names: &[String]) -> Result<Vec<Option<f64>>> {
    let origin = path.display().to_string();
    let mut out = vec![None; study_names.len()];
    for e in read_kv(path)? {
        let bad = |m: String| Error::Config {
            path: origin.clone(),
            message: format!("line {}: {}: {m}", e.line, e.key),
        };
        let i = study_names
            .iter()
            .position(|n| *n == e.key)
            .ok_or_else(|| bad("no such study column".into()))?;
        out[i] = if e.value == "observed" {
            None
        } else {
            Some(
                parse_threshold(&e.value)
                    .ok_or_else(|| bad(format!("threshold '{}' must lie in (0, 1)", e.value)))?,
            )
        };
    }
    Ok(out)
}

/// Store feature ids: the CSV ids when all are unsigned integers, otherwise
/// row ordinals.
pub fn numeric_ids(ids: &[String]) -> (Vec<u64>, bool) {
    match ids
        .iter()
        .map(|s| s.parse::<u64>())
        .collect::<std::result::Result<Vec<_>, _>>()
    {
        Ok(v) => (v, true),
        Err(_) => ((0..ids.len() as u64).collect(), false),
    }
}
