//! Output files: JSON reports, CSV time series and matrix dumps.
//!
//! Every file starts with the same header (tool version, SHA-256 of the
//! configuration, basis tag). Floating-point values are rounded to
//! [`SIGNIFICANT_DIGITS`] before serialization so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::evolve::EvolutionResult;
use crate::lattice::BasisTag;

pub const SIGNIFICANT_DIGITS: usize = 12;
pub const TOOL: &str = "kinetic";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("serialization failed: {0}")]
    Serialize(String),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ReportError {
    ReportError::Io { path: path.display().to_string(), message: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub basis: Option<BasisTag>,
}

impl Header {
    /// `config` is the canonical configuration text the run was started from.
    pub fn new(config: &str, basis: Option<BasisTag>) -> Self {
        Self { tool: TOOL.into(), version: VERSION.into(), config_sha256: sha256_hex(config.as_bytes()), basis }
    }

    pub fn with_basis(&self, basis: BasisTag) -> Self {
        Self { basis: Some(basis), ..self.clone() }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `x` rounded to `digits` significant digits; non-finite values pass through.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(f64::NAN), SIGNIFICANT_DIGITS);
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round_value).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// Serializes `body` to a JSON value with every float rounded.
pub fn to_rounded_value<T: Serialize>(body: &T) -> Result<Value, ReportError> {
    serde_json::to_value(body).map(round_value).map_err(|e| ReportError::Serialize(e.to_string()))
}

/// `{"header": …, "report": …}`, pretty-printed with a trailing newline.
pub fn render_json<T: Serialize>(header: &Header, body: &T) -> Result<String, ReportError> {
    let doc = serde_json::json!({ "header": to_rounded_value(header)?, "report": to_rounded_value(body)? });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| ReportError::Serialize(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, header: &Header, body: &T) -> Result<(), ReportError> {
    let text = render_json(header, body)?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn header_line(header: &Header) -> Result<String, ReportError> {
    let v = to_rounded_value(header)?;
    Ok(format!("# {}\n", serde_json::to_string(&v).map_err(|e| ReportError::Serialize(e.to_string()))?))
}

fn format_float(x: f64) -> String {
    let r = round_sig(x, SIGNIFICANT_DIGITS);
    if r.is_finite() {
        format!("{r}")
    } else {
        "nan".into()
    }
}

/// CSV of arbitrary numeric columns under a `# {header json}` line.
pub fn render_columns(header: &Header, names: &[String], rows: &[Vec<f64>]) -> Result<String, ReportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(names).map_err(|e| ReportError::Serialize(e.to_string()))?;
    for row in rows {
        w.write_record(row.iter().map(|&x| format_float(x))).map_err(|e| ReportError::Serialize(e.to_string()))?;
    }
    let body = w.into_inner().map_err(|e| ReportError::Serialize(e.to_string()))?;
    let mut out = header_line(header)?;
    out.push_str(&String::from_utf8(body).map_err(|e| ReportError::Serialize(e.to_string()))?);
    Ok(out)
}

/// Trajectory CSV: column `t`, then one column per observable.
pub fn render_trajectory(header: &Header, result: &EvolutionResult) -> Result<String, ReportError> {
    let names: Vec<String> = std::iter::once("t".to_string()).chain(result.names.iter().cloned()).collect();
    let rows: Vec<Vec<f64>> = result
        .times
        .iter()
        .zip(&result.records)
        .map(|(&t, r)| std::iter::once(t).chain(r.iter().copied()).collect())
        .collect();
    render_columns(header, &names, &rows)
}

/// Nonzero entries as `row,col,re,im` (0-based, basis order of the header).
pub fn render_matrix(header: &Header, m: &DMatrix<Complex64>) -> Result<String, ReportError> {
    let names: Vec<String> = ["row", "col", "re", "im"].map(String::from).to_vec();
    let mut rows = Vec::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if z != Complex64::new(0.0, 0.0) {
                rows.push(vec![i as f64, j as f64, z.re, z.im]);
            }
        }
    }
    render_columns(header, &names, &rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ReportError> {
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}
