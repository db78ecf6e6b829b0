//! Field snapshots: a JSON sidecar plus a raw little-endian `f64` array, and
//! a tidy CSV export.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Field, Grid};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub schema_version: u32,
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n: usize,
    pub time: f64,
    #[serde(default)]
    pub params: serde_json::Value,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<stem>.f64` and `<stem>.json`.
pub fn write_snapshot(stem: &Path, field: &Field, time: f64, params: serde_json::Value) -> Result<()> {
    let g = field.grid();
    let header = SnapshotHeader {
        schema_version: 1,
        dim: g.dim(),
        half_length: g.half_length(),
        n: g.n(),
        time,
        params,
    };
    let mut bytes = Vec::with_capacity(8 * field.values().len());
    for v in field.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let data_path = with_ext(stem, "f64");
    fs::write(&data_path, bytes).map_err(|e| Error::io(&data_path, e))?;
    let json_path = with_ext(stem, "json");
    let text = serde_json::to_string_pretty(&header)?;
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]. `path` may name either
/// file of the pair or the common stem.
pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, Vec<f64>)> {
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some("f64") | Some("json") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let json_path = with_ext(&stem, "json");
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let header: SnapshotHeader = serde_json::from_str(&text)?;
    let data_path = with_ext(&stem, "f64");
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let expected = header.n.pow(header.dim as u32);
    if bytes.len() != 8 * expected {
        return Err(Error::SizeMismatch { expected, actual: bytes.len() / 8 });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8 bytes")))
        .collect();
    Ok((header, values))
}

/// CSV with coordinate columns followed by the value.
pub fn write_csv(path: &Path, field: &Field) -> Result<()> {
    let g: &Grid = field.grid();
    let mut out = String::new();
    out.push_str(if g.dim() == 1 { "x,u\n" } else { "x,y,u\n" });
    for (i, v) in field.values().iter().enumerate() {
        let [x, y] = g.point(i);
        if g.dim() == 1 {
            out.push_str(&format!("{x},{v}\n"));
        } else {
            out.push_str(&format!("{x},{y},{v}\n"));
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(())
}
