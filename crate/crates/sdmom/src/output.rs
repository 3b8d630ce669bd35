//! Report writers: depth profiles and scatter matrices as CSV, runs as JSON.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use sdmom_core::{DepthProfile, ScatterEstimate};
use serde::Serialize;

use crate::error::{Error, Result};

/// `vx1..vxd,median,momad`, one direction per line.
pub fn profile_csv(profile: &DepthProfile) -> String {
    let d = profile.dim();
    let mut out = String::new();
    for j in 1..=d {
        let _ = write!(out, "vx{j},");
    }
    out.push_str("median,momad\n");
    for (v, s) in profile.dirs.iter().zip(&profile.stats) {
        for x in v {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{},{}", s.median, s.momad);
    }
    out
}

/// Row-major matrix under a `# phi0=<value> projected=<bool>` header.
pub fn scatter_csv(est: &ScatterEstimate) -> String {
    let mut out = format!("# phi0={} projected={}\n", est.phi0, est.projected);
    let m = &est.matrix;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Inverse of [`scatter_csv`]: the matrix, `phi0` and `projected`.
pub fn parse_scatter_csv(text: &str) -> Result<(DMatrix<f64>, f64, bool)> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let bad = |msg: &str| Error::Parse { line: 1, msg: msg.to_string() };
    let rest = header.strip_prefix("# ").ok_or_else(|| bad("missing '# phi0=... projected=...' header"))?;
    let mut phi0 = None;
    let mut projected = None;
    for tok in rest.split_whitespace() {
        match tok.split_once('=') {
            Some(("phi0", v)) => phi0 = v.parse().ok(),
            Some(("projected", v)) => projected = v.parse().ok(),
            _ => return Err(bad("unexpected header field")),
        }
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        for t in line.split(',') {
            values.push(t.trim().parse::<f64>().map_err(|_| Error::Parse { line: i + 2, msg: format!("not a number: {t:?}") })?);
        }
        rows += 1;
    }
    if rows * rows != values.len() {
        return Err(Error::Parse { line: rows + 1, msg: "matrix is not square".into() });
    }
    Ok((DMatrix::from_row_slice(rows, rows, &values), phi0.ok_or_else(|| bad("bad phi0"))?, projected.ok_or_else(|| bad("bad projected"))?))
}

/// One JSON object on one line.
pub fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}
