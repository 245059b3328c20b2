//! Stream file formats.
//!
//! Text: first line `dim=<n>`, then one row per line of `n` space-separated
//! decimals, written with Rust's shortest-round-trip float formatting so a
//! read-back is lossless. Binary: magic `SWNLA1`, little-endian `u32` row
//! width, then packed little-endian `f64` entries row by row. Readers sniff
//! the magic to pick the format.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

/// Leading bytes of the binary stream format.
pub const BINARY_MAGIC: &[u8; 6] = b"SWNLA1";

/// Render rows as the text format. Every row must have width `dim`.
pub fn to_text(rows: &[Vec<f64>], dim: usize) -> Result<String> {
    let mut out = String::new();
    out.push_str(&format!("dim={dim}\n"));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::invalid(format!("row {i} has width {}, expected {dim}", r.len())));
        }
        for (j, v) in r.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Parse the text format; returns `(rows, dim)`.
pub fn from_text(s: &str) -> Result<(Vec<Vec<f64>>, usize)> {
    let mut lines = s.lines();
    let header = lines.next().ok_or_else(|| Error::invalid("empty stream file"))?;
    let dim: usize = header
        .strip_prefix("dim=")
        .ok_or_else(|| Error::invalid(format!("bad header {header:?}, expected dim=<n>")))?
        .trim()
        .parse()
        .map_err(|e| Error::invalid(format!("bad dim in header {header:?}: {e}")))?;
    if dim == 0 {
        return Err(Error::invalid("dim must be ≥ 1"));
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(dim);
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|e| Error::invalid(format!("line {}: bad number {tok:?}: {e}", ln + 2)))?;
            row.push(v);
        }
        if row.len() != dim {
            return Err(Error::invalid(format!(
                "line {}: {} entries, expected {dim}",
                ln + 2,
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok((rows, dim))
}

/// Render rows as the binary format.
pub fn to_binary(rows: &[Vec<f64>], dim: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(10 + rows.len() * dim * 8);
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for (i, r) in rows.iter().enumerate() {
        if r.len() != dim {
            return Err(Error::invalid(format!("row {i} has width {}, expected {dim}", r.len())));
        }
        for v in r {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Parse the binary format; returns `(rows, dim)`.
pub fn from_binary(bytes: &[u8]) -> Result<(Vec<Vec<f64>>, usize)> {
    if bytes.len() < 10 || &bytes[..6] != BINARY_MAGIC {
        return Err(Error::invalid("missing SWNLA1 magic"));
    }
    let dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    if dim == 0 {
        return Err(Error::invalid("dim must be ≥ 1"));
    }
    let body = &bytes[10..];
    let row_bytes = dim * 8;
    if body.len() % row_bytes != 0 {
        return Err(Error::invalid("truncated binary stream (partial row)"));
    }
    let mut rows = Vec::with_capacity(body.len() / row_bytes);
    for chunk in body.chunks_exact(row_bytes) {
        let row: Vec<f64> = chunk
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        rows.push(row);
    }
    Ok((rows, dim))
}

/// Read a stream file, sniffing binary vs text by the magic bytes.
pub fn read_stream(path: &Path) -> Result<(Vec<Vec<f64>>, usize)> {
    let bytes = fs::read(path)?;
    if bytes.len() >= 6 && &bytes[..6] == BINARY_MAGIC {
        from_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::invalid("stream file is neither SWNLA1 binary nor UTF-8 text"))?;
        from_text(&text)
    }
}

/// Write a stream file in the chosen format.
pub fn write_stream(path: &Path, rows: &[Vec<f64>], dim: usize, binary: bool) -> Result<()> {
    let mut f = fs::File::create(path)?;
    if binary {
        f.write_all(&to_binary(rows, dim)?)?;
    } else {
        f.write_all(to_text(rows, dim)?.as_bytes())?;
    }
    Ok(())
}
