//! Data ingestion and preprocessing for the command-line pipeline.
//!
//! CSV files carry one header row, an optional leading date column named
//! `date` (any capitalization, ISO `YYYY-MM-DD` values), and numeric
//! columns. Rows with unparseable or non-finite cells are dropped listwise
//! and counted. Preprocessing covers negative log-returns of price series
//! and per-calendar-month componentwise maxima.

use std::path::Path;

use chrono::{Datelike, NaiveDate};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

fn record_line(record: &csv::StringRecord) -> String {
    record
        .position()
        .map(|p| p.line().to_string())
        .unwrap_or_else(|| "?".to_string())
}

/// Reads a CSV file into a dataset. Returns the dataset together with the
/// number of rows dropped because a cell failed to parse as a finite number
/// (or as a date, in the date column).
pub fn load_csv(path: impl AsRef<Path>) -> Result<(Dataset, usize)> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("unreadable header: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(Error::Data("header row is empty".into()));
    }
    let has_dates = headers
        .get(0)
        .map(|h| h.trim().eq_ignore_ascii_case("date"))
        .unwrap_or(false);
    let first_value_col = usize::from(has_dates);
    let labels: Vec<String> = headers
        .iter()
        .skip(first_value_col)
        .map(|h| h.trim().to_string())
        .collect();
    if labels.is_empty() {
        return Err(Error::Data("no value columns after the date column".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut dropped = 0_usize;
    for record in reader.records() {
        let record = record.map_err(|e| Error::Data(format!("unreadable row: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "row at line {} has {} fields, expected {}",
                record_line(&record),
                record.len(),
                headers.len()
            )));
        }
        let date = if has_dates {
            match NaiveDate::parse_from_str(record.get(0).unwrap_or("").trim(), "%Y-%m-%d") {
                Ok(d) => Some(d),
                Err(_) => {
                    dropped += 1;
                    continue;
                }
            }
        } else {
            None
        };
        let mut row = Vec::with_capacity(labels.len());
        let mut usable = true;
        for cell in record.iter().skip(first_value_col) {
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    usable = false;
                    break;
                }
            }
        }
        if !usable {
            dropped += 1;
            continue;
        }
        if let Some(d) = date {
            dates.push(d);
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::Data(format!(
            "{} usable rows in {}; at least 2 are required",
            rows.len(),
            path.display()
        )));
    }
    if has_dates && dates.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Data(format!(
            "dates in {} are not in ascending order",
            path.display()
        )));
    }
    let dataset = Dataset::new(labels, rows, has_dates.then_some(dates))?;
    Ok((dataset, dropped))
}

/// Turns a price series into negative log-returns: row t becomes
/// -log(P_t / P_{t-1}), so losses are positive. The first row is consumed;
/// dates, when present, shift to the later timestamp.
pub fn neg_log_returns(data: &Dataset) -> Result<Dataset> {
    let n = data.n_rows();
    if n < 3 {
        return Err(Error::Data(format!(
            "negative log-returns need at least 3 rows, got {n}"
        )));
    }
    for i in 0..n {
        if let Some(&bad) = data.row(i).iter().find(|&&v| v <= 0.0) {
            return Err(Error::Data(format!(
                "nonpositive price {bad} in row {}; log-returns are undefined",
                i + 1
            )));
        }
    }
    let rows: Vec<Vec<f64>> = (1..n)
        .map(|i| {
            data.row(i)
                .iter()
                .zip(data.row(i - 1))
                .map(|(&now, &before)| -(now / before).ln())
                .collect()
        })
        .collect();
    let dates = data.dates().map(|d| d[1..].to_vec());
    Dataset::new(data.labels().to_vec(), rows, dates)
}

/// Collapses rows to one per calendar month: the componentwise maximum over
/// that month's rows, stamped with the month's last observed date. Months
/// with fewer than `min_obs` rows are dropped; the count of dropped months
/// is returned alongside.
pub fn monthly_block_maxima(data: &Dataset, min_obs: usize) -> Result<(Dataset, usize)> {
    let dates = data.dates().ok_or_else(|| {
        Error::Config("monthly maxima need a date column in the input".into())
    })?;
    let n = data.n_rows();
    let d = data.n_cols();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut month_dates: Vec<NaiveDate> = Vec::new();
    let mut dropped_months = 0_usize;

    let mut start = 0;
    while start < n {
        let key = (dates[start].year(), dates[start].month());
        let mut end = start + 1;
        while end < n && (dates[end].year(), dates[end].month()) == key {
            end += 1;
        }
        if end - start >= min_obs.max(1) {
            let mut maxima = vec![f64::NEG_INFINITY; d];
            for i in start..end {
                for (m, &v) in maxima.iter_mut().zip(data.row(i)) {
                    if v > *m {
                        *m = v;
                    }
                }
            }
            rows.push(maxima);
            month_dates.push(dates[end - 1]);
        } else {
            dropped_months += 1;
        }
        start = end;
    }
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "no calendar month has at least {min_obs} observations"
        )));
    }
    let dataset = Dataset::new(data.labels().to_vec(), rows, Some(month_dates))?;
    Ok((dataset, dropped_months))
}

/// Componentwise maxima over consecutive runs of `block_len` rows, for data
/// without a calendar structure (e.g. simulated series). A trailing
/// incomplete run is dropped; the number of rows so discarded is returned
/// alongside the reduced dataset. When dates are present, each maxima row
/// keeps the last date of its run.
///
/// This is the preprocessing step that turns observation-level data into a
/// sample of maxima, which is what the max-stable extremal-coefficient
/// estimators expect; `monthly_block_maxima` is its calendar-driven
/// counterpart.
pub fn block_maxima(data: &Dataset, block_len: usize) -> Result<(Dataset, usize)> {
    if block_len == 0 {
        return Err(Error::InvalidArgument(
            "block length must be at least 1".into(),
        ));
    }
    let n = data.n_rows();
    let d = data.n_cols();
    let complete = n / block_len;
    if complete < 2 {
        return Err(Error::Data(format!(
            "need at least 2 complete blocks of {block_len} rows, found {complete}"
        )));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(complete);
    let mut block_dates: Vec<NaiveDate> = Vec::new();
    for b in 0..complete {
        let start = b * block_len;
        let end = start + block_len;
        let mut maxima = vec![f64::NEG_INFINITY; d];
        for i in start..end {
            for (m, &v) in maxima.iter_mut().zip(data.row(i)) {
                if v > *m {
                    *m = v;
                }
            }
        }
        rows.push(maxima);
        if let Some(dates) = data.dates() {
            block_dates.push(dates[end - 1]);
        }
    }
    let dates = if data.dates().is_some() {
        Some(block_dates)
    } else {
        None
    };
    let dataset = Dataset::new(data.labels().to_vec(), rows, dates)?;
    Ok((dataset, n - complete * block_len))
}
