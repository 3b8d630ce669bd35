//! Dataset CSV and oracle sidecar files.
//!
//! The CSV has a header `x1,...,xd` and one observation per line. The sidecar
//! is a key=value file with `mu`, `sigma` (row-major) and `outliers`
//! (zero-based row indices), each a comma-separated list. Other keys are
//! informational and ignored on read.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use sdmom_core::{Dataset, Oracle};

use crate::config::parse_kv;
use crate::error::{Error, Result};

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    read_csv_from(fs::File::open(path)?)
}

pub fn read_csv_from<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let d = headers.len();
    for (j, h) in headers.iter().enumerate() {
        if h != format!("x{}", j + 1) {
            return Err(Error::Parse { line: 1, msg: format!("expected header x{} but found {h:?}", j + 1) });
        }
    }
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != d {
            return Err(Error::Parse { line, msg: format!("expected {d} fields, found {}", rec.len()) });
        }
        for field in rec.iter() {
            let x: f64 = field.parse().map_err(|_| Error::Parse { line, msg: format!("not a number: {field:?}") })?;
            if !x.is_finite() {
                return Err(Error::Parse { line, msg: format!("non-finite value {field:?}") });
            }
            values.push(x);
        }
    }
    Ok(Dataset::from_flat(values, d)?)
}

pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_csv_to(data, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn write_csv_to<W: Write>(data: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record((1..=data.dim()).map(|j| format!("x{j}")))?;
    for row in data.rows() {
        // `{}` prints the shortest representation that parses back exactly
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(key: &str, s: &str) -> Result<Vec<T>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse {t:?}"))))
        .collect()
}

pub fn parse_meta(text: &str) -> Result<Oracle> {
    let kv = parse_kv(text)?;
    let mut oracle = Oracle::default();
    if let Some(s) = kv.get("mu") {
        oracle.true_mu = Some(parse_list("mu", s)?);
    }
    if let Some(s) = kv.get("sigma") {
        let v: Vec<f64> = parse_list("sigma", s)?;
        let d = (v.len() as f64).sqrt().round() as usize;
        if d * d != v.len() || d == 0 {
            return Err(Error::Config(format!("sigma has {} entries, not a square matrix", v.len())));
        }
        oracle.true_sigma = Some(DMatrix::from_row_slice(d, d, &v));
    }
    if let Some(s) = kv.get("outliers") {
        let mut idx: Vec<usize> = parse_list("outliers", s)?;
        idx.sort_unstable();
        idx.dedup();
        oracle.outlier_indices = idx;
    }
    Ok(oracle)
}

pub fn read_meta(path: impl AsRef<Path>) -> Result<Oracle> {
    parse_meta(&fs::read_to_string(path)?)
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Sidecar text; `extra` lines come first, in the given order.
pub fn format_meta(oracle: &Oracle, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (k, v) in extra {
        let _ = writeln!(out, "{k}={v}");
    }
    if let Some(mu) = &oracle.true_mu {
        let _ = writeln!(out, "mu={}", join(mu));
    }
    if let Some(s) = &oracle.true_sigma {
        let _ = writeln!(out, "sigma={}", join((0..s.nrows()).flat_map(|i| (0..s.ncols()).map(move |j| s[(i, j)]))));
    }
    let _ = writeln!(out, "outliers={}", join(&oracle.outlier_indices));
    out
}

pub fn write_meta(oracle: &Oracle, extra: &[(&str, String)], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_meta(oracle, extra))?;
    Ok(())
}

/// Read a dataset and, when given, attach the sidecar oracle.
pub fn load(input: impl AsRef<Path>, meta: Option<&Path>) -> Result<Dataset> {
    let data = read_csv(input)?;
    match meta {
        Some(p) => Ok(data.with_oracle(read_meta(p)?)?),
        None => Ok(data),
    }
}
