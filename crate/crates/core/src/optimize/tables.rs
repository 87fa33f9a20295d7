//! Re-verification of the shipped tables of published drive profiles.
//!
//! Data files are plain text, one row per line:
//! `label | a_1 a_2 … a_k | g`, where the profile is in canonical order
//! `(F_N, …, F_2, V_1)` and `g` is the published cost. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::{cost, polish, CgSettings, ChannelSpec, OptimizeError};
use crate::par;

const TOFFOLI_TABLE: &str = include_str!("../../data/toffoli_table_1.txt");
const QUTRIT_TABLE: &str = include_str!("../../data/qutrit_table_2.txt");

/// Absolute pass bar for rows published at `g ~ 1e−8`.
pub const ABSOLUTE_BAR: f64 = 1e-6;
/// Rows pass when the polished cost is within this factor of the published one.
pub const RELATIVE_BAR: f64 = 10.0;
/// The polish may not weaken any open channel below this fraction of its
/// value at the published point.
pub const OPEN_GUARD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TableId {
    /// Toffoli gates on `N+1` qubits; label is the qubit count.
    ToffoliTable1,
    /// Qutrit target with `N` control qubits; label is `N`.
    QutritTable2,
}

impl FromStr for TableId {
    type Err = OptimizeError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" | "toffoli_table_1" => Ok(Self::ToffoliTable1),
            "table2" | "qutrit_table_2" => Ok(Self::QutritTable2),
            _ => Err(OptimizeError::InvalidSpec(format!("unknown table {s:?} (expected table1 or table2)"))),
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ToffoliTable1 => "toffoli_table_1",
            Self::QutritTable2 => "qutrit_table_2",
        })
    }
}

impl TableId {
    pub fn rows(&self) -> Result<Vec<PublishedRow>, OptimizeError> {
        parse_table(match self {
            Self::ToffoliTable1 => TOFFOLI_TABLE,
            Self::QutritTable2 => QUTRIT_TABLE,
        })
    }

    pub fn spec_for(&self, label: usize) -> Result<ChannelSpec, OptimizeError> {
        match self {
            Self::ToffoliTable1 => ChannelSpec::toffoli(label),
            Self::QutritTable2 => ChannelSpec::qutrit_controlled(label),
        }
    }

    pub fn row(&self, label: usize) -> Result<PublishedRow, OptimizeError> {
        self.rows()?
            .into_iter()
            .find(|r| r.label == label)
            .ok_or_else(|| OptimizeError::InvalidSpec(format!("{self} has no row {label}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PublishedRow {
    pub label: usize,
    pub profile: Vec<f64>,
    pub g: f64,
}

pub fn parse_table(text: &str) -> Result<Vec<PublishedRow>, OptimizeError> {
    let bad = |n: usize, msg: &str| OptimizeError::InvalidSpec(format!("table line {n}: {msg}"));
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(str::trim).collect();
        let [label, profile, g] = fields[..] else {
            return Err(bad(n, "expected three |-separated fields"));
        };
        let label = label.parse().map_err(|_| bad(n, "label is not an integer"))?;
        let profile = profile
            .split_whitespace()
            .map(|v| v.parse::<f64>().map_err(|_| bad(n, "bad profile value")))
            .collect::<Result<Vec<_>, _>>()?;
        let g = g.parse().map_err(|_| bad(n, "bad cost value"))?;
        rows.push(PublishedRow { label, profile, g });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowVerification {
    pub label: usize,
    pub published_profile: Vec<f64>,
    pub published_g: f64,
    /// Cost at the printed (rounded) profile.
    pub raw_g: f64,
    pub raw_open: Vec<f64>,
    pub polished_profile: Vec<f64>,
    pub polished_g: f64,
    pub polished_open: Vec<f64>,
    pub polish_iterations: usize,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub table: TableId,
    pub rows: Vec<RowVerification>,
    pub pass: bool,
}

impl TableReport {
    /// Whether every printed profile reaches `tol` without any polish.
    pub fn raw_within(&self, tol: f64) -> bool {
        self.rows.iter().all(|r| r.raw_g <= tol)
    }
}

/// One guarded local re-polish per row from the printed profile.
pub fn verify_row(table: TableId, row: &PublishedRow, settings: &CgSettings) -> Result<RowVerification, OptimizeError> {
    let spec = table.spec_for(row.label)?;
    let raw_g = cost(&spec, &row.profile)?.g;
    let raw_open = spec.open_values(&row.profile)?;
    let guard = |x: &[f64]| match spec.open_values(x) {
        Ok(v) => v.iter().zip(&raw_open).all(|(now, was)| now.abs() >= OPEN_GUARD * was.abs()),
        Err(_) => false,
    };
    let out = polish(&spec, &row.profile, &[], settings, guard)?;
    let polished_g = cost(&spec, &out.x)?.g;
    let threshold = (RELATIVE_BAR * row.g).max(ABSOLUTE_BAR);
    Ok(RowVerification {
        label: row.label,
        published_profile: row.profile.clone(),
        published_g: row.g,
        raw_g,
        raw_open,
        polished_open: spec.open_values(&out.x)?,
        polished_profile: out.x,
        polished_g,
        polish_iterations: out.iterations,
        threshold,
        pass: polished_g <= threshold,
    })
}

pub fn verify_table(table: TableId, settings: &CgSettings) -> Result<TableReport, OptimizeError> {
    let rows = table.rows()?;
    let rows = par::try_map(&rows, |_, row| verify_row(table, row, settings))?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(TableReport { table, rows, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_tables_parse() {
        let t1 = TableId::ToffoliTable1.rows().unwrap();
        assert_eq!(t1.iter().map(|r| r.label).collect::<Vec<_>>(), vec![4, 5, 6, 7, 8, 9]);
        for r in &t1 {
            assert_eq!(r.profile.len(), r.label - 1);
        }
        let t2 = TableId::QutritTable2.rows().unwrap();
        for r in &t2 {
            assert_eq!(r.profile.len(), 2 * r.label);
        }
        assert_eq!(t2[1].profile[3..5], [-6.825, -6.760]);
    }

    #[test]
    fn parser_errors() {
        assert!(parse_table("4 | 1 2 |").is_err());
        assert!(parse_table("x | 1 2 | 1e-3").is_err());
        assert!(parse_table("4 | 1 2").is_err());
        assert_eq!(parse_table("# c\n\n3 | 1 2 | 0.5\n").unwrap().len(), 1);
    }

    #[test]
    fn table_ids() {
        assert_eq!("table1".parse::<TableId>().unwrap(), TableId::ToffoliTable1);
        assert_eq!(TableId::QutritTable2.to_string(), "qutrit_table_2");
        assert!("table3".parse::<TableId>().is_err());
    }
}
