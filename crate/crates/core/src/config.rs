//! Plain-text `key = value` configuration files.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parse `key = value` lines. Blank lines and `#` comments are skipped;
/// duplicate keys are rejected.
pub fn parse_kv(text: &str, origin: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config {
                path: origin.to_string(),
                message: format!("line {}: expected key = value, got '{line}'", i + 1),
            });
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config {
                path: origin.to_string(),
                message: format!("line {}: empty key", i + 1),
            });
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(Error::Config {
                path: origin.to_string(),
                message: format!(
                    "line {}: key '{key}' already set on line {}",
                    i + 1,
                    prev.line
                ),
            });
        }
        out.push(Entry {
            line: i + 1,
            key,
            value: v.trim().to_string(),
        });
    }
    Ok(out)
}

pub fn read_kv(path: &Path) -> Result<Vec<Entry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_kv(&text, &path.display().to_string())
}
