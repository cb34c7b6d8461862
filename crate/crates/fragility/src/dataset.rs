//! In-memory numeric dataset and margin specification.

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// Dense n x d matrix of observations with labeled columns.
///
/// Rows are observation positions (0-based), columns are coordinates
/// (1-based, like every coordinate index in this crate). An optional date
/// column, kept separate from the numeric values, must be non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    labels: Vec<String>,
    values: Vec<f64>,
    n: usize,
    d: usize,
    dates: Option<Vec<NaiveDate>>,
}

impl Dataset {
    /// Builds a dataset from row-major data, validating shape, label
    /// uniqueness, value finiteness and date ordering.
    pub fn new(
        labels: Vec<String>,
        rows: Vec<Vec<f64>>,
        dates: Option<Vec<NaiveDate>>,
    ) -> Result<Self> {
        let d = labels.len();
        if d == 0 {
            return Err(Error::InvalidArgument(
                "dataset needs at least one column".into(),
            ));
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "column {} has an empty label",
                    i + 1
                )));
            }
            if labels[..i].contains(label) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate column label '{label}'"
                )));
            }
        }
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("dataset needs at least one row".into()));
        }
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidArgument(format!(
                    "row {} has {} values, expected {d}",
                    i + 1,
                    row.len()
                )));
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "row {} contains a non-finite value",
                        i + 1
                    )));
                }
            }
            values.extend_from_slice(row);
        }
        if let Some(ref ds) = dates {
            if ds.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "{} dates for {n} rows",
                    ds.len()
                )));
            }
            if let Some(w) = ds.windows(2).position(|w| w[0] > w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "dates out of order at row {}",
                    w + 2
                )));
            }
        }
        Ok(Dataset {
            labels,
            values,
            n,
            d,
            dates,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.d
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dates(&self) -> Option<&[NaiveDate]> {
        self.dates.as_deref()
    }

    /// Row `i` (0-based) as a slice of d values.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    /// Value at row `i` (0-based), coordinate `j` (1-based).
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.d + (j - 1)]
    }

    /// Column `j` (1-based) as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, j)).collect()
    }
}

/// Margin baseline for the equivalent-margins formulas.
///
/// `Unit` is the common unit-Frechet baseline; `EquivalentFrechet` carries a
/// per-coordinate scale gamma_i > 0.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginSpec {
    Unit,
    EquivalentFrechet(Vec<f64>),
}

impl MarginSpec {
    /// Resolves to a concrete gamma vector of length d.
    pub fn gamma(&self, d: usize) -> Result<Vec<f64>> {
        match self {
            MarginSpec::Unit => Ok(vec![1.0; d]),
            MarginSpec::EquivalentFrechet(g) => {
                if g.len() != d {
                    return Err(Error::InvalidArgument(format!(
                        "gamma has {} entries, expected {d}",
                        g.len()
                    )));
                }
                if let Some(i) = g.iter().position(|v| !v.is_finite() || *v <= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "gamma[{}] must be finite and positive",
                        i + 1
                    )));
                }
                Ok(g.clone())
            }
        }
    }
}
