//! Tabular input and the rank transform to pseudo-observations.
//!
//! Data is stored column-major: ranking, column dropping, and column-subset
//! extraction all work per column.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numeric table: `m` rows by `n` named columns, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    column_names: Vec<String>,
    /// One vector per column, each of length `m`.
    columns: Vec<Vec<f64>>,
}

/// Rank-transformed table with every column a uniform margin on (0, 1].
///
/// With the default divisor `m`, each entry equals `r/m` for a 1-based rank
/// `r`; ties are broken stably by row order.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservations {
    column_names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

/// Denominator of the rank transform. `M` matches the definition used
/// throughout this crate; `MPlusOne` exists for interop with software that
/// divides by `m + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PobsDivisor {
    #[default]
    #[serde(rename = "m")]
    M,
    #[serde(rename = "m+1")]
    MPlusOne,
}

impl std::str::FromStr for PobsDivisor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m" => Ok(PobsDivisor::M),
            "m+1" => Ok(PobsDivisor::MPlusOne),
            other => Err(Error::Usage(format!(
                "unknown pobs divisor {other:?}; expected \"m\" or \"m+1\""
            ))),
        }
    }
}

impl RawDataset {
    /// Build from column vectors; validates shape and finiteness.
    pub fn new(column_names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if column_names.len() != columns.len() {
            return Err(Error::InvalidInput(format!(
                "{} column names for {} columns",
                column_names.len(),
                columns.len()
            )));
        }
        if columns.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 columns, got {}",
                columns.len()
            )));
        }
        let m = columns[0].len();
        if m < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 rows, got {m}"
            )));
        }
        for (name, col) in column_names.iter().zip(&columns) {
            if col.len() != m {
                return Err(Error::InvalidInput(format!(
                    "column {name:?} has {} rows, expected {m}",
                    col.len()
                )));
            }
            if let Some(bad) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "column {name:?}, row {}: entry {} is not finite",
                    bad + 1,
                    col[bad]
                )));
            }
        }
        Ok(RawDataset {
            column_names,
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }
}

/// Parse a delimited UTF-8 file with a header row, dropping the named
/// columns. Every kept cell must parse as a number. Comma is the expected
/// separator; a header containing semicolons and no commas switches the
/// whole file to semicolons (the dialect of the UCI wine files).
pub fn load_csv(path: impl AsRef<Path>, drop_columns: &[String]) -> Result<RawDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let header_line = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
    let delimiter = if header_line.contains(&b';') && !header_line.contains(&b',') {
        b';'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .delimiter(delimiter)
        .from_reader(bytes.as_slice());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.to_string())
        .collect();

    for name in drop_columns {
        if !headers.iter().any(|h| h == name) {
            return Err(Error::InvalidInput(format!(
                "drop column {name:?} not found in header"
            )));
        }
    }

    let keep: Vec<usize> = (0..headers.len())
        .filter(|&i| !drop_columns.contains(&headers[i]))
        .collect();
    if keep.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{} columns remain after dropping {}; need at least 2",
            keep.len(),
            drop_columns.len()
        )));
    }

    let kept_names: Vec<String> = keep.iter().map(|&i| headers[i].clone()).collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); keep.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        for (kept_idx, &i) in keep.iter().enumerate() {
            let cell = record.get(i).ok_or_else(|| {
                Error::Csv(format!(
                    "row {} has {} fields, expected {}",
                    row_idx + 2,
                    record.len(),
                    headers.len()
                ))
            })?;
            let value: f64 = cell.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "column {:?}, row {}: cannot parse {cell:?} as a number",
                    kept_names[kept_idx],
                    row_idx + 2
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "column {:?}, row {}: entry {value} is not finite",
                    kept_names[kept_idx],
                    row_idx + 2
                )));
            }
            columns[kept_idx].push(value);
        }
    }

    RawDataset::new(kept_names, columns)
}

/// Stable 1-based ranks of a column: equal values keep their row order.
fn stable_ranks(column: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..column.len()).collect();
    // All entries are finite, so partial_cmp cannot fail; the index
    // tie-break makes equal values rank in row order.
    order.sort_by(|&a, &b| {
        column[a]
            .partial_cmp(&column[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut ranks = vec![0usize; column.len()];
    for (rank0, &row) in order.iter().enumerate() {
        ranks[row] = rank0 + 1;
    }
    ranks
}

/// Rank-transform every column into a uniform margin.
pub fn pobs(data: &RawDataset, divisor: PobsDivisor) -> PseudoObservations {
    let m = data.n_rows();
    let denom = match divisor {
        PobsDivisor::M => m as f64,
        PobsDivisor::MPlusOne => (m + 1) as f64,
    };
    let columns = data
        .columns
        .iter()
        .map(|col| {
            stable_ranks(col)
                .into_iter()
                .map(|r| r as f64 / denom)
                .collect()
        })
        .collect();
    PseudoObservations {
        column_names: data.column_names.clone(),
        columns,
    }
}

impl PseudoObservations {
    pub fn n_rows(&self) -> usize {
        self.columns[0].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// View as a raw dataset, e.g. to rank-transform again.
    pub fn to_raw(&self) -> RawDataset {
        RawDataset {
            column_names: self.column_names.clone(),
            columns: self.columns.clone(),
        }
    }

    /// Write as CSV with 12 significant digits per entry.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut buf = String::new();
        buf.push_str(&self.column_names.join(","));
        buf.push('\n');
        for row in 0..self.n_rows() {
            for (c, col) in self.columns.iter().enumerate() {
                if c > 0 {
                    buf.push(',');
                }
                buf.push_str(&format!("{:.11e}", col[row]));
            }
            buf.push('\n');
        }
        out.write_all(buf.as_bytes()).map_err(|e| Error::io(path, e))
    }
}
