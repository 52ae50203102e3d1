//! `TPV1`: a compact binary store of truncated p-value matrices.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "TPV1" | version u32 | n_records u64 | K u32
//! K × (censored u8, threshold f64)
//! n_records × (feature id u64, K1 × p f64, ceil(K2/8) indicator bytes)
//! CRC32 of everything above, u32
//! ```
//!
//! Indicator bits follow censored-study order, least significant bit first;
//! a set bit means the p-value fell below its threshold.

use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::FeatureRow;
use crate::model::{check_pvalue, PanelSchema, StudyMode, StudyObservation, StudyPanel};

pub const MAGIC: &[u8; 4] = b"TPV1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct StoreRecord {
    pub feature_id: u64,
    /// Exact p-values of the observed studies, in study order.
    pub observed: Vec<f64>,
    /// `p < α` for each censored study, in study order.
    pub indicators: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedStore {
    schema: PanelSchema,
    records: Vec<StoreRecord>,
}

impl TruncatedStore {
    pub fn new(schema: PanelSchema, records: Vec<StoreRecord>) -> Result<Self> {
        let (k1, k2) = (schema.k1(), schema.k2());
        for (i, r) in records.iter().enumerate() {
            if r.observed.len() != k1 || r.indicators.len() != k2 {
                return Err(Error::Store(format!(
                    "record {i} has {} observed values and {} indicators, schema needs {k1} and {k2}",
                    r.observed.len(),
                    r.indicators.len()
                )));
            }
            for &p in &r.observed {
                check_pvalue(p)?;
            }
        }
        Ok(TruncatedStore { schema, records })
    }

    pub fn schema(&self) -> &PanelSchema {
        &self.schema
    }

    pub fn records(&self) -> &[StoreRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rebuild the study panel of one record.
    pub fn panel(&self, record: &StoreRecord) -> StudyPanel {
        let mut obs = record.observed.iter();
        let mut ind = record.indicators.iter();
        let v = self
            .schema
            .modes()
            .iter()
            .map(|m| match *m {
                StudyMode::Observed => StudyObservation::Observed {
                    p: *obs.next().expect("length checked"),
                },
                StudyMode::Censored { threshold } => StudyObservation::Censored {
                    below: *ind.next().expect("length checked"),
                    threshold,
                },
            })
            .collect();
        StudyPanel::new(v).expect("validated on construction")
    }

    /// Feature rows with decimal feature ids.
    pub fn to_rows(&self) -> Vec<FeatureRow> {
        self.records
            .iter()
            .map(|r| FeatureRow {
                id: r.feature_id.to_string(),
                panel: self.panel(r),
            })
            .collect()
    }

    /// Store rows that all follow `schema`; ids must be decimal `u64`.
    pub fn from_rows(schema: &PanelSchema, rows: &[FeatureRow]) -> Result<Self> {
        let mut records = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let row_err = |m: String| Error::Row {
                row: i,
                feature: row.id.clone(),
                message: m,
            };
            if !schema.matches(&row.panel) {
                return Err(row_err("study layout differs from the store schema".into()));
            }
            let feature_id = row
                .id
                .parse::<u64>()
                .map_err(|_| row_err("store feature ids must be unsigned integers".into()))?;
            let mut observed = Vec::new();
            let mut indicators = Vec::new();
            for o in row.panel.observations() {
                match *o {
                    StudyObservation::Observed { p } => observed.push(p),
                    StudyObservation::Censored { below, .. } => indicators.push(below),
                }
            }
            records.push(StoreRecord {
                feature_id,
                observed,
                indicators,
            });
        }
        Self::new(schema.clone(), records)
    }

    fn record_len(&self) -> usize {
        8 + 8 * self.schema.k1() + self.schema.k2().div_ceil(8)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let k = self.schema.k();
        let mut out = Vec::with_capacity(20 + 9 * k + self.len() * self.record_len() + 4);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        out.extend_from_slice(&(k as u32).to_le_bytes());
        for m in self.schema.modes() {
            let (flag, thr) = match *m {
                StudyMode::Observed => (0u8, 0.0f64),
                StudyMode::Censored { threshold } => (1u8, threshold),
            };
            out.push(flag);
            out.extend_from_slice(&thr.to_le_bytes());
        }
        let nbytes = self.schema.k2().div_ceil(8);
        for r in &self.records {
            out.extend_from_slice(&r.feature_id.to_le_bytes());
            for &p in &r.observed {
                out.extend_from_slice(&p.to_le_bytes());
            }
            let mut packed = vec![0u8; nbytes];
            for (j, &b) in r.indicators.iter().enumerate() {
                if b {
                    packed[j / 8] |= 1 << (j % 8);
                }
            }
            out.extend_from_slice(&packed);
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let truncated = |what: &str| Error::Store(format!("file truncated in {what}"));
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::Store("bad magic, not a TPV1 store".into()));
        }
        if bytes.len() < 24 {
            return Err(truncated("header"));
        }
        let (payload, trailer) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let mut cur = Cursor {
            buf: payload,
            pos: 4,
        };
        let version = cur.u32().ok_or_else(|| truncated("header"))?;
        if version != FORMAT_VERSION {
            return Err(Error::Store(format!(
                "unsupported format version {version}"
            )));
        }
        let n = cur.u64().ok_or_else(|| truncated("header"))?;
        let k = cur.u32().ok_or_else(|| truncated("header"))? as usize;
        let mut modes = Vec::with_capacity(k.min(1 << 16));
        for _ in 0..k {
            let flag = cur.u8().ok_or_else(|| truncated("study descriptors"))?;
            let thr = cur.f64().ok_or_else(|| truncated("study descriptors"))?;
            modes.push(match flag {
                0 => StudyMode::Observed,
                1 => StudyMode::Censored { threshold: thr },
                f => return Err(Error::Store(format!("bad censored flag {f}"))),
            });
        }
        let schema = PanelSchema::new(modes)?;
        let (k1, k2) = (schema.k1(), schema.k2());
        let nbytes = k2.div_ceil(8);
        let rec_len = (8 + 8 * k1 + nbytes) as u128;
        let remaining = (payload.len() - cur.pos) as u128;
        if remaining != rec_len * n as u128 {
            return Err(Error::Store(format!(
                "{n} records of {rec_len} bytes need {} bytes, found {remaining}",
                rec_len * n as u128
            )));
        }
        let mut records = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let feature_id = cur.u64().ok_or_else(|| truncated("records"))?;
            let observed = (0..k1)
                .map(|_| cur.f64().ok_or_else(|| truncated("records")))
                .collect::<Result<Vec<f64>>>()?;
            let packed = cur.take(nbytes).ok_or_else(|| truncated("records"))?;
            let indicators = (0..k2).map(|j| packed[j / 8] >> (j % 8) & 1 == 1).collect();
            records.push(StoreRecord {
                feature_id,
                observed,
                indicators,
            });
        }
        Self::new(schema, records)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(s)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.take(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn write_store(store: &TruncatedStore, path: &Path) -> Result<()> {
    std::fs::write(path, store.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_store(path: &Path) -> Result<TruncatedStore> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    TruncatedStore::from_bytes(&bytes)
}

/// Whether `path` starts with the store magic.
pub fn is_store(path: &Path) -> Result<bool> {
    use std::io::Read;
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut head = [0u8; 4];
    match f.read_exact(&mut head) {
        Ok(()) => Ok(&head == MAGIC),
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(false),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// Storage accounting for truncation, counted in values rather than bytes.
///
/// A truncated value costs two stored values when it falls below the
/// threshold (its p-value and its index) and nothing otherwise; observed
/// values cost one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionReport {
    pub total_values: u64,
    pub stored_values: u64,
    pub truncated_values: u64,
    pub below_threshold: u64,
    /// `1 − stored / total`; may be negative.
    pub ratio: f64,
}

impl CompressionReport {
    /// Fraction of truncated values below their threshold.
    pub fn fraction_below(&self) -> f64 {
        if self.truncated_values == 0 {
            0.0
        } else {
            self.below_threshold as f64 / self.truncated_values as f64
        }
    }

    /// False when truncation would store more than the full matrix.
    pub fn compresses(&self) -> bool {
        self.ratio > 0.0
    }

    pub fn describe(&self) -> String {
        if self.truncated_values == 0 {
            "no truncated studies: compression ratio 0".to_string()
        } else if self.compresses() {
            format!(
                "compression ratio {:.4} ({:.4} of truncated values below threshold)",
                self.ratio,
                self.fraction_below()
            )
        } else {
            format!(
                "no compression: {:.4} of truncated values below threshold (ratio {:.4})",
                self.fraction_below(),
                self.ratio
            )
        }
    }
}

/// Truncate a full p-value matrix study by study.
pub fn truncate_matrix(
    ids: &[u64],
    pvalues: &[Vec<f64>],
    thresholds: &[Option<f64>],
) -> Result<(TruncatedStore, CompressionReport)> {
    if ids.len() != pvalues.len() {
        return Err(Error::InvalidArgument(format!(
            "{} ids for {} rows",
            ids.len(),
            pvalues.len()
        )));
    }
    let schema = PanelSchema::new(
        thresholds
            .iter()
            .map(|t| match *t {
                Some(threshold) => StudyMode::Censored { threshold },
                None => StudyMode::Observed,
            })
            .collect(),
    )?;
    let mut records = Vec::with_capacity(ids.len());
    let mut below_count = 0u64;
    for (i, (&id, row)) in ids.iter().zip(pvalues).enumerate() {
        let panel = schema.apply(row).map_err(|e| Error::Row {
            row: i,
            feature: id.to_string(),
            message: e.to_string(),
        })?;
        let mut observed = Vec::new();
        let mut indicators = Vec::new();
        for o in panel.observations() {
            match *o {
                StudyObservation::Observed { p } => observed.push(p),
                StudyObservation::Censored { below, .. } => {
                    below_count += below as u64;
                    indicators.push(below);
                }
            }
        }
        records.push(StoreRecord {
            feature_id: id,
            observed,
            indicators,
        });
    }
    let n = ids.len() as u64;
    let total = n * schema.k() as u64;
    let truncated = n * schema.k2() as u64;
    let stored = n * schema.k1() as u64 + 2 * below_count;
    let ratio = if total == 0 || truncated == 0 {
        0.0
    } else {
        1.0 - stored as f64 / total as f64
    };
    let report = CompressionReport {
        total_values: total,
        stored_values: stored,
        truncated_values: truncated,
        below_threshold: below_count,
        ratio,
    };
    Ok((TruncatedStore::new(schema, records)?, report))
}
