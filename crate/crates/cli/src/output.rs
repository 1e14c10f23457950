//! File helpers: CSV writers with full-precision floats and JSON I/O.
//!
//! Floats are formatted with Rust's shortest round-trip representation,
//! so re-reading any exported number reproduces the exact bit pattern.

use anyhow::{Context, Result};
use gwlimit::Pgf;
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

pub fn read_pgf(path: &Path) -> Result<Pgf> {
    read_json(path).with_context(|| format!("reading p.g.f. from {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Writes a CSV with the given header and one row per record.
pub fn write_csv<I>(dir: &Path, name: &str, header: &str, rows: I) -> Result<PathBuf>
where
    I: IntoIterator<Item = String>,
{
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}
