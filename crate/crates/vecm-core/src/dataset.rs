//! Quarterly panel ingestion, validation, transformation, and summaries.
//!
//! Quarterly periods are the canonical frequency. Input with any other
//! spacing (including monthly) is rejected rather than aggregated, and
//! missing or non-finite cells are hard errors: every downstream statistic
//! assumes a balanced panel.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A calendar quarter, e.g. `2004Q1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Quarter {
    year: i32,
    /// 1..=4
    quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Result<Self> {
        if !(1..=4).contains(&quarter) {
            return Err(Error::BadDate {
                value: format!("{year}Q{quarter}"),
            });
        }
        Ok(Self { year, quarter })
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn quarter(&self) -> u8 {
        self.quarter
    }

    /// The next consecutive quarter.
    pub fn succ(&self) -> Self {
        if self.quarter == 4 {
            Self {
                year: self.year + 1,
                quarter: 1,
            }
        } else {
            Self {
                year: self.year,
                quarter: self.quarter + 1,
            }
        }
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl FromStr for Quarter {
    type Err = Error;

    /// Accepts `YYYYQn` and ISO first-day-of-quarter dates
    /// (`YYYY-01-01`, `YYYY-04-01`, `YYYY-07-01`, `YYYY-10-01`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadDate {
            value: s.to_string(),
        };
        let s = s.trim();
        if let Some((y, q)) = s.split_once(['Q', 'q']) {
            let year: i32 = y.parse().map_err(|_| bad())?;
            let quarter: u8 = q.parse().map_err(|_| bad())?;
            return Quarter::new(year, quarter).map_err(|_| bad());
        }
        let mut parts = s.split('-');
        let (y, m, d) = (parts.next(), parts.next(), parts.next());
        if parts.next().is_some() {
            return Err(bad());
        }
        match (y, m, d) {
            (Some(y), Some(m), Some(d)) => {
                let year: i32 = y.parse().map_err(|_| bad())?;
                let month: u8 = m.parse().map_err(|_| bad())?;
                let day: u8 = d.parse().map_err(|_| bad())?;
                let quarter = match (month, day) {
                    (1, 1) => 1,
                    (4, 1) => 2,
                    (7, 1) => 3,
                    (10, 1) => 4,
                    _ => return Err(bad()),
                };
                Quarter::new(year, quarter)
            }
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for Quarter {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Quarter> for String {
    fn from(q: Quarter) -> String {
        q.to_string()
    }
}

/// Aligned quarterly panel: a date axis, unique variable names, and a
/// T x K value matrix (rows = time, columns = variables).
///
/// Immutable after construction; all invariants (consecutive quarters,
/// finite cells, unique names) are checked in [`TimeSeriesTable::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesTable {
    dates: Vec<Quarter>,
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl TimeSeriesTable {
    pub fn new(dates: Vec<Quarter>, names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if dates.is_empty() || names.is_empty() {
            return Err(Error::EmptyTable);
        }
        if values.nrows() != dates.len() || values.ncols() != names.len() {
            return Err(Error::InvalidParameter {
                what: format!(
                    "value matrix is {}x{} but there are {} dates and {} names",
                    values.nrows(),
                    values.ncols(),
                    dates.len(),
                    names.len()
                ),
            });
        }
        for w in dates.windows(2) {
            let expected = w[0].succ();
            if w[1] <= w[0] {
                return Err(Error::DateOrder {
                    previous: w[0].to_string(),
                    found: w[1].to_string(),
                });
            }
            if w[1] != expected {
                return Err(Error::DateGap {
                    previous: w[0].to_string(),
                    expected: expected.to_string(),
                    found: w[1].to_string(),
                });
            }
        }
        for (j, name) in names.iter().enumerate() {
            if names[..j].contains(name) {
                return Err(Error::DuplicateColumn { name: name.clone() });
            }
        }
        for j in 0..values.ncols() {
            for i in 0..values.nrows() {
                if !values[(i, j)].is_finite() {
                    return Err(Error::NonFinite {
                        row: i,
                        column: names[j].clone(),
                    });
                }
            }
        }
        Ok(Self {
            dates,
            names,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Number of variables.
    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn dates(&self) -> &[Quarter] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable {
                name: name.to_string(),
            })
    }

    pub fn column(&self, name: &str) -> Result<DVector<f64>> {
        Ok(self.values.column(self.column_index(name)?).into_owned())
    }

    /// New table holding `names` in the given order.
    pub fn select(&self, names: &[String]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column_index(n))
            .collect::<Result<_>>()?;
        let values = DMatrix::from_fn(self.len(), idx.len(), |i, j| self.values[(i, idx[j])]);
        Self::new(self.dates.clone(), names.to_vec(), values)
    }

    /// Load a validated table from delimited text (comma-separated, header
    /// row, one date column).
    pub fn load_csv(path: &Path, date_column: &str) -> Result<Self> {
        let io_err = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => io_err(io),
                other => Error::InvalidParameter {
                    what: format!("csv: {other:?}"),
                },
            })?;
        let headers = reader
            .headers()
            .map_err(|e| Error::InvalidParameter {
                what: format!("csv header: {e}"),
            })?
            .clone();
        let date_pos = headers
            .iter()
            .position(|h| h == date_column)
            .ok_or_else(|| Error::MissingDateColumn {
                column: date_column.to_string(),
            })?;
        let names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != date_pos)
            .map(|(_, h)| h.to_string())
            .collect();
        if names.is_empty() {
            return Err(Error::EmptyTable);
        }

        let mut dates = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (row_idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::BadCell {
                row: row_idx,
                column: "<record>".to_string(),
                value: e.to_string(),
            })?;
            let date_str = record.get(date_pos).unwrap_or("");
            let date: Quarter = date_str.parse()?;
            dates.push(date);
            let mut row = Vec::with_capacity(names.len());
            for (i, field) in record.iter().enumerate() {
                if i == date_pos {
                    continue;
                }
                let column = headers.get(i).unwrap_or("").to_string();
                let value: f64 = field.parse().map_err(|_| Error::BadCell {
                    row: row_idx,
                    column: column.clone(),
                    value: field.to_string(),
                })?;
                row.push(value);
            }
            if row.len() != names.len() {
                return Err(Error::BadCell {
                    row: row_idx,
                    column: "<record>".to_string(),
                    value: format!("expected {} fields, got {}", names.len() + 1, row.len() + 1),
                });
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        let values = DMatrix::from_fn(rows.len(), names.len(), |i, j| rows[i][j]);
        Self::new(dates, names, values)
    }

    /// Write the table back out in the same format. Numbers use the shortest
    /// representation that round-trips exactly, so `load_csv(save_csv(t))`
    /// reproduces `t` bit for bit.
    pub fn save_csv(&self, path: &Path, date_column: &str) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => io_err(io),
            other => Error::InvalidParameter {
                what: format!("csv: {other:?}"),
            },
        })?;
        let mut header = vec![date_column.to_string()];
        header.extend(self.names.iter().cloned());
        writer.write_record(&header).map_err(|e| Error::InvalidParameter {
            what: format!("csv write: {e}"),
        })?;
        for (i, date) in self.dates.iter().enumerate() {
            let mut record = vec![date.to_string()];
            for j in 0..self.width() {
                record.push(format!("{}", self.values[(i, j)]));
            }
            writer.write_record(&record).map_err(|e| Error::InvalidParameter {
                what: format!("csv write: {e}"),
            })?;
        }
        writer.flush().map_err(io_err)?;
        Ok(())
    }
}

/// Per-variable measurement transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Keep the series as supplied.
    Level,
    /// Replace the series by its natural logarithm.
    Log,
}

/// Deterministic component of a unit-root test regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Deterministic {
    Constant,
    ConstantTrend,
}

impl fmt::Display for Deterministic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deterministic::Constant => write!(f, "constant"),
            Deterministic::ConstantTrend => write!(f, "constant and trend"),
        }
    }
}

/// Per-variable transform and unit-root deterministic choices.
///
/// Invariant: covers every variable of the table it is applied to exactly
/// once (checked by [`apply_transforms`]).
#[derive(Debug, Clone, Default)]
pub struct TransformSpec {
    entries: BTreeMap<String, (Transform, Deterministic)>,
}

impl TransformSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, transform: Transform, deterministic: Deterministic) {
        self.entries
            .insert(name.to_string(), (transform, deterministic));
    }

    pub fn transform(&self, name: &str) -> Option<Transform> {
        self.entries.get(name).map(|(t, _)| *t)
    }

    pub fn deterministic(&self, name: &str) -> Option<Deterministic> {
        self.entries.get(name).map(|(_, d)| *d)
    }

    /// All variables named by the spec, in sorted order.
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }
}

/// Apply the per-variable transforms, leaving level columns untouched.
///
/// Errors if the spec does not cover the table exactly (one entry per
/// column, no strays) or if a log is requested on a non-positive cell.
pub fn apply_transforms(table: &TimeSeriesTable, spec: &TransformSpec) -> Result<TimeSeriesTable> {
    for name in spec.variables() {
        if !table.names().iter().any(|n| n == name) {
            return Err(Error::TransformCoverage {
                name: name.to_string(),
            });
        }
    }
    let mut values = table.values().clone();
    for (j, name) in table.names().iter().enumerate() {
        let transform = spec.transform(name).ok_or_else(|| Error::TransformCoverage {
            name: name.clone(),
        })?;
        if transform == Transform::Log {
            for i in 0..table.len() {
                let v = values[(i, j)];
                if v <= 0.0 {
                    return Err(Error::NonPositiveLog {
                        column: name.clone(),
                        row: i,
                        value: v,
                    });
                }
                values[(i, j)] = v.ln();
            }
        }
    }
    TimeSeriesTable::new(table.dates().to_vec(), table.names().to_vec(), values)
}

/// First difference: `out[t] = x[t+1] - x[t]`, length T-1.
pub fn first_difference(series: &[f64]) -> Result<Vec<f64>> {
    if series.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: series.len(),
        });
    }
    Ok(series.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Descriptive statistics of one variable.
#[derive(Debug, Clone, Serialize)]
pub struct VariableStats {
    pub name: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (N-1 denominator); 0.0 when undefined.
    pub sd: f64,
    /// False when N = 1 and the standard deviation is undefined.
    pub sd_defined: bool,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

/// Per-variable N, mean, SD, min, quartiles, max. Percentiles interpolate
/// linearly between order statistics.
pub fn descriptive_stats(table: &TimeSeriesTable) -> Vec<VariableStats> {
    let t = table.len();
    table
        .names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = table.values().column(j).iter().copied().collect();
            let mean = col.iter().sum::<f64>() / t as f64;
            let (sd, sd_defined) = if t > 1 {
                let ss = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
                ((ss / (t - 1) as f64).sqrt(), true)
            } else {
                (0.0, false)
            };
            let mut sorted = col;
            sorted.sort_by(|a, b| a.total_cmp(b));
            VariableStats {
                name: name.clone(),
                n: t,
                mean,
                sd,
                sd_defined,
                min: sorted[0],
                p25: crate::linalg::percentile_sorted(&sorted, 0.25),
                p50: crate::linalg::percentile_sorted(&sorted, 0.50),
                p75: crate::linalg::percentile_sorted(&sorted, 0.75),
                max: sorted[t - 1],
            }
        })
        .collect()
}
