//! Text formats for matrices, fields and states, and fingerprint hashing.
//!
//! Matrix text form: the first line is either `rows cols` (dense, followed
//! by `rows` lines of `cols` whitespace-separated values, row-major) or
//! `rows cols nnz` (sparse coordinate triplets, followed by `nnz` lines of
//! `row col value`, 0-based). Fields are CSV `entity_index,value`; states
//! are CSV `component,entity_index,value`. Floating-point output always
//! uses 17 significant digits so identical data produces identical bytes.

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ops::SparseMatrix;

/// 17-significant-digit scientific notation; the canonical float format of
/// every file this crate writes.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Hex SHA-256 of a canonical description string.
pub fn fingerprint(description: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(description.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn parse_tokens(line: &str) -> Vec<&str> {
    line.split_whitespace().collect()
}

fn parse_f64(tok: &str, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
}

fn parse_usize(tok: &str, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
}

/// Parse a dense or sparse matrix text file into a dense matrix.
pub fn parse_matrix_text(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let toks = parse_tokens(header);
    match toks.len() {
        2 => {
            let rows = parse_usize(toks[0], "row count")?;
            let cols = parse_usize(toks[1], "column count")?;
            let mut m = DMatrix::zeros(rows, cols);
            for r in 0..rows {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse(format!("dense matrix ends at row {r}")))?;
                let vals = parse_tokens(line);
                if vals.len() != cols {
                    return Err(Error::Parse(format!(
                        "dense row {r} has {} values, expected {cols}",
                        vals.len()
                    )));
                }
                for (c, tok) in vals.iter().enumerate() {
                    m[(r, c)] = parse_f64(tok, "matrix entry")?;
                }
            }
            Ok(m)
        }
        3 => {
            let rows = parse_usize(toks[0], "row count")?;
            let cols = parse_usize(toks[1], "column count")?;
            let nnz = parse_usize(toks[2], "nnz")?;
            let mut m = DMatrix::zeros(rows, cols);
            for k in 0..nnz {
                let line = lines
                    .next()
                    .ok_or_else(|| Error::Parse(format!("sparse matrix ends at entry {k}")))?;
                let vals = parse_tokens(line);
                if vals.len() != 3 {
                    return Err(Error::Parse(format!("sparse entry {k} malformed")));
                }
                let r = parse_usize(vals[0], "row index")?;
                let c = parse_usize(vals[1], "column index")?;
                if r >= rows || c >= cols {
                    return Err(Error::Shape(format!(
                        "sparse entry ({r},{c}) outside {rows}x{cols}"
                    )));
                }
                m[(r, c)] += parse_f64(vals[2], "matrix entry")?;
            }
            Ok(m)
        }
        _ => Err(Error::Parse(
            "matrix header must be `rows cols` or `rows cols nnz`".into(),
        )),
    }
}

pub fn read_matrix_text(path: &Path) -> Result<DMatrix<f64>> {
    parse_matrix_text(&std::fs::read_to_string(path)?)
}

pub fn dense_matrix_text(m: &DMatrix<f64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format_float(m[(r, c)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn sparse_matrix_text(m: &SparseMatrix) -> String {
    let (rows, cols) = m.shape();
    let mut out = format!("{rows} {cols} {}\n", m.nnz());
    for &(r, c, v) in m.triplets() {
        out.push_str(&format!("{r} {c} {}\n", format_float(v)));
    }
    out
}

/// CSV with one `entity_index,value` row per entry.
pub fn field_csv(values: &DVector<f64>) -> String {
    let mut out = String::from("entity_index,value\n");
    for (i, v) in values.iter().enumerate() {
        out.push_str(&format!("{i},{}\n", format_float(*v)));
    }
    out
}

pub fn parse_field_csv(text: &str, expected_len: usize) -> Result<DVector<f64>> {
    let mut values = vec![None; expected_len];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("entity_index")) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Parse(format!("field CSV line {lineno} malformed")));
        }
        let idx = parse_usize(parts[0].trim(), "entity index")?;
        if idx >= expected_len {
            return Err(Error::Shape(format!(
                "entity index {idx} outside field of length {expected_len}"
            )));
        }
        values[idx] = Some(parse_f64(parts[1].trim(), "field value")?);
    }
    let mut out = DVector::zeros(expected_len);
    for (i, v) in values.into_iter().enumerate() {
        out[i] = v.ok_or_else(|| Error::Shape(format!("entity index {i} missing from field CSV")))?;
    }
    Ok(out)
}

/// CSV with `component,entity_index,value` rows, components in the given
/// order.
pub fn state_csv(components: &[(&str, &DVector<f64>)]) -> String {
    let mut out = String::from("component,entity_index,value\n");
    for (name, values) in components {
        for (i, v) in values.iter().enumerate() {
            out.push_str(&format!("{name},{i},{}\n", format_float(*v)));
        }
    }
    out
}

/// Parse a state CSV; `lengths` gives the expected component names and
/// sizes.
pub fn parse_state_csv(text: &str, lengths: &[(&str, usize)]) -> Result<Vec<DVector<f64>>> {
    let mut slots: Vec<Vec<Option<f64>>> =
        lengths.iter().map(|&(_, n)| vec![None; n]).collect();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("component")) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!("state CSV line {lineno} malformed")));
        }
        let name = parts[0].trim();
        let slot = lengths
            .iter()
            .position(|&(n, _)| n == name)
            .ok_or_else(|| Error::Parse(format!("unknown state component {name:?}")))?;
        let idx = parse_usize(parts[1].trim(), "entity index")?;
        if idx >= lengths[slot].1 {
            return Err(Error::Shape(format!(
                "index {idx} outside component {name} of length {}",
                lengths[slot].1
            )));
        }
        slots[slot][idx] = Some(parse_f64(parts[2].trim(), "state value")?);
    }
    let mut out = Vec::with_capacity(slots.len());
    for (slot, (name, _)) in slots.into_iter().zip(lengths.iter()) {
        let mut v = DVector::zeros(slot.len());
        for (i, entry) in slot.into_iter().enumerate() {
            v[i] = entry.ok_or_else(|| {
                Error::Shape(format!("component {name} is missing entity index {i}"))
            })?;
        }
        out.push(v);
    }
    Ok(out)
}

/// Write atomically: temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
