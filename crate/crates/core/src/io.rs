//! File formats: Matrix Market coordinate input, plain vector files and dense
//! column dumps.

use std::path::Path;

use nalgebra::DVector;
use nalgebra_sparse::io::load_coo_from_matrix_market_str;

use crate::error::{Error, Result};
use crate::hilbert::{LinearMap, Subspace};

/// Reads a real general Matrix Market coordinate file.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<LinearMap> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix_market(&text).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_matrix_market(text: &str) -> Result<LinearMap> {
    let header = text
        .lines()
        .next()
        .ok_or_else(|| Error::Input("empty Matrix Market file".into()))?
        .to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::Input(format!("bad Matrix Market header: {header}")));
    }
    if fields[2] != "coordinate" || fields[3] != "real" || fields[4] != "general" {
        return Err(Error::Input(format!(
            "only 'coordinate real general' is supported, got '{} {} {}'",
            fields[2], fields[3], fields[4]
        )));
    }
    let coo = load_coo_from_matrix_market_str::<f64>(text)
        .map_err(|e| Error::Input(format!("malformed Matrix Market data: {}", e.message())))?;
    LinearMap::from_coo(&coo)
}

pub fn write_matrix_market(map: &LinearMap) -> String {
    nalgebra_sparse::io::save_to_matrix_market_str(&map.to_coo())
}

/// One number per line; blank lines and lines starting with `#` or `%` are
/// skipped.
pub fn parse_vector(text: &str) -> Result<DVector<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let v: f64 = t
            .parse()
            .map_err(|_| Error::Input(format!("line {}: not a number: '{t}'", lineno + 1)))?;
        if !v.is_finite() {
            return Err(Error::Input(format!("line {}: non-finite value", lineno + 1)));
        }
        values.push(v);
    }
    Ok(DVector::from_vec(values))
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_vector(&text)
}

pub fn write_subspace(path: impl AsRef<Path>, s: &Subspace) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, s.to_dense_columns())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
