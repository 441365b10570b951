//! CSV input.
//!
//! Files have a header row, one date column and one value column selected by
//! name. Row numbers in errors are file line numbers (the header is row 1).

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tvar_core::{PriceSeries, ReturnSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Prices,
    Returns,
}

impl ValueKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "prices" => Some(Self::Prices),
            "returns" => Some(Self::Returns),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed CSV at row {row}: {msg}")]
    Csv { row: u64, msg: String },
    #[error("no column named {0:?} in header")]
    MissingColumn(String),
    #[error("missing value at row {0}")]
    MissingValue(u64),
    #[error("unparseable number {text:?} at row {row}")]
    BadNumber { row: u64, text: String },
    #[error("non-finite value at row {0}")]
    NonFinite(u64),
    #[error("non-positive price at row {0}")]
    NonPositivePrice(u64),
    #[error("non-monotone dates at row {row}: {date:?} does not follow {prev:?}")]
    NonMonotoneDates {
        row: u64,
        date: String,
        prev: String,
    },
    #[error("series too short: {got} rows, need at least {needed}")]
    TooShort { needed: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Prices(PriceSeries),
    Returns(ReturnSeries),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub date: String,
    pub value: String,
}

pub fn load_csv(path: &Path, columns: &ColumnSpec, kind: ValueKind) -> Result<Loaded, LoadError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| LoadError::Open {
            path: path.display().to_string(),
            source,
        })?;
    parse_csv(&text, columns, kind)
}

pub fn parse_csv(text: &str, columns: &ColumnSpec, kind: ValueKind) -> Result<Loaded, LoadError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| LoadError::Csv {
        row: e.position().map_or(0, |p| p.line()),
        msg: e.to_string(),
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| LoadError::MissingColumn(name.to_owned()))
    };
    let (di, vi) = (find(&columns.date)?, find(&columns.value)?);

    let mut dates: Vec<String> = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record.position().map_or(0, |p| p.line());
        let date = record.get(di).unwrap_or("");
        let raw = record.get(vi).unwrap_or("");
        if date.is_empty() || raw.is_empty() {
            return Err(LoadError::MissingValue(row));
        }
        let v: f64 = raw.parse().map_err(|_| LoadError::BadNumber {
            row,
            text: raw.to_owned(),
        })?;
        if !v.is_finite() {
            return Err(LoadError::NonFinite(row));
        }
        if kind == ValueKind::Prices && v <= 0.0 {
            return Err(LoadError::NonPositivePrice(row));
        }
        if let Some(prev) = dates.last() {
            if date <= prev.as_str() {
                return Err(LoadError::NonMonotoneDates {
                    row,
                    date: date.to_owned(),
                    prev: prev.clone(),
                });
            }
        }
        dates.push(date.to_owned());
        values.push(v);
    }
    if values.len() < 2 {
        return Err(LoadError::TooShort {
            needed: 2,
            got: values.len(),
        });
    }
    // Every invariant has been checked row by row above.
    Ok(match kind {
        ValueKind::Prices => {
            Loaded::Prices(PriceSeries::new(dates, values).expect("validated prices"))
        }
        ValueKind::Returns => {
            Loaded::Returns(ReturnSeries::new(dates, values).expect("validated returns"))
        }
    })
}
