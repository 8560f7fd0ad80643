//! On-disk formats.
//!
//! Q-table file: 8-byte magic `ETCQTAB1`, `u64` state count, `u64` action
//! count (little endian), then `f64` values row-major, little endian.
//! Visit file: magic `ETCQVIS1`, the same two dimensions, then `u64` counts.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::HarnessError;
use crate::learning::QTable;

pub const QTABLE_MAGIC: &[u8; 8] = b"ETCQTAB1";
pub const VISITS_MAGIC: &[u8; 8] = b"ETCQVIS1";
const HEADER_LEN: usize = 24;

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.to_path_buf(), source }
}

fn format_error(path: &Path, offset: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Format { path: path.to_path_buf(), offset: offset as u64, message: message.into() }
}

fn encode(magic: &[u8; 8], n_states: usize, n_actions: usize, body: impl Iterator<Item = [u8; 8]>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n_states * n_actions);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(n_states as u64).to_le_bytes());
    out.extend_from_slice(&(n_actions as u64).to_le_bytes());
    body.for_each(|w| out.extend_from_slice(&w));
    out
}

fn decode<'a>(path: &Path, bytes: &'a [u8], magic: &[u8; 8]) -> Result<(usize, usize, &'a [u8]), HarnessError> {
    if bytes.len() < HEADER_LEN {
        return Err(format_error(
            path,
            bytes.len(),
            format!("truncated header ({} of {HEADER_LEN} bytes)", bytes.len()),
        ));
    }
    if &bytes[..8] != magic {
        return Err(format_error(path, 0, format!("bad magic, expected {}", String::from_utf8_lossy(magic))));
    }
    let dim = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let (n_states, n_actions) = (dim(8), dim(16));
    if n_states == 0 || n_actions == 0 {
        return Err(format_error(path, 8, "zero table dimension"));
    }
    let expected = n_states
        .checked_mul(n_actions)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(HEADER_LEN as u64))
        .ok_or_else(|| format_error(path, 8, "table dimensions overflow"))?;
    if bytes.len() as u64 != expected {
        let at = (bytes.len() as u64).min(expected) as usize;
        return Err(format_error(path, at, format!("file is {} bytes, header implies {expected}", bytes.len())));
    }
    Ok((n_states as usize, n_actions as usize, &bytes[HEADER_LEN..]))
}

pub fn encode_qtable(table: &QTable) -> Vec<u8> {
    encode(QTABLE_MAGIC, table.n_states(), table.n_actions(), table.values().iter().map(|v| v.to_le_bytes()))
}

pub fn decode_qtable(path: &Path, bytes: &[u8]) -> Result<QTable, HarnessError> {
    let (n_states, n_actions, body) = decode(path, bytes, QTABLE_MAGIC)?;
    let mut values = Vec::with_capacity(n_states * n_actions);
    for (i, chunk) in body.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        if !v.is_finite() {
            return Err(format_error(path, HEADER_LEN + 8 * i, format!("non-finite value {v}")));
        }
        values.push(v);
    }
    QTable::from_values(n_states, n_actions, values).map_err(|e| format_error(path, 8, e.to_string()))
}

pub fn save_qtable(path: &Path, table: &QTable) -> Result<(), HarnessError> {
    write_atomic(path, &encode_qtable(table))
}

pub fn load_qtable(path: &Path) -> Result<QTable, HarnessError> {
    let bytes = fs::read(path).map_err(io_error(path))?;
    decode_qtable(path, &bytes)
}

pub fn save_visits(path: &Path, table: &QTable) -> Result<(), HarnessError> {
    let body = table.visit_counts().iter().map(|v| v.to_le_bytes());
    write_atomic(path, &encode(VISITS_MAGIC, table.n_states(), table.n_actions(), body))
}

/// Restores visit counts saved next to `table`.
pub fn load_visits(path: &Path, table: &mut QTable) -> Result<(), HarnessError> {
    let bytes = fs::read(path).map_err(io_error(path))?;
    let (n_states, n_actions, body) = decode(path, &bytes, VISITS_MAGIC)?;
    if (n_states, n_actions) != (table.n_states(), table.n_actions()) {
        return Err(format_error(
            path,
            8,
            format!("visit table is {n_states} x {n_actions}, Q table is {} x {}", table.n_states(), table.n_actions()),
        ));
    }
    let visits = body.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    table.set_visits(visits).map_err(|e| format_error(path, 8, e.to_string()))
}

/// Writes through a temporary sibling so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(io_error(&tmp))?;
    fs::rename(&tmp, path).map_err(io_error(path))
}

/// Serializes `rows` under an explicit header; the header is written even
/// when there are no rows.
pub fn csv_bytes<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| HarnessError::Config(format!("csv serialization: {e}")))?;
    for row in rows {
        w.serialize(row).map_err(|e| HarnessError::Config(format!("csv serialization: {e}")))?;
    }
    w.into_inner().map_err(|e| HarnessError::Config(format!("csv serialization: {e}")))
}

pub fn write_csv<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<(), HarnessError> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// Reads a numeric CSV file written by [`write_csv`]: header and rows.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| format_error(path, 0, e.to_string()))?;
    let header = r.headers().map_err(|e| format_error(path, 0, e.to_string()))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| {
            let offset = e.position().map_or(0, |p| p.byte() as usize);
            format_error(path, offset, e.to_string())
        })?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}
