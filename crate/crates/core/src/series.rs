//! Dated price and return series plus descriptive statistics.
//!
//! Period labels are opaque strings ordered lexicographically, which covers
//! `YYYY:MM` and ISO dates. No calendar arithmetic is ever performed.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

fn check_dates(dates: &[String]) -> Result<()> {
    for (i, w) in dates.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::NonMonotoneDates { index: i + 1 });
        }
    }
    Ok(())
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Raw index levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<String>,
    values: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
            });
        }
        if values.len() < 2 {
            return Err(Error::TooShort {
                needed: 2,
                got: values.len(),
            });
        }
        check_finite(&values)?;
        if let Some(index) = values.iter().position(|v| *v <= 0.0) {
            return Err(Error::NonPositivePrice { index });
        }
        check_dates(&dates)?;
        Ok(Self { dates, values })
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Log returns `x_t`, one per period label.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<String>,
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                dates: dates.len(),
                values: values.len(),
            });
        }
        check_finite(&values)?;
        check_dates(&dates)?;
        Ok(Self { dates, values })
    }

    /// Series with synthetic labels `t0001`, `t0002`, ... (zero padded so the
    /// labels sort in order).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let dates = (0..values.len())
            .map(|i| alloc::format!("t{:07}", i + 1))
            .collect();
        Self::new(dates, values)
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same dates, values mapped through `f`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.dates.clone(),
            self.values.iter().map(|v| f(*v)).collect(),
        )
    }
}

/// `x_t = ln p_{t+1} - ln p_t`, dated by the later period.
pub fn to_log_returns(prices: &PriceSeries) -> Result<ReturnSeries> {
    if prices.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: prices.len(),
        });
    }
    let values = prices
        .values
        .windows(2)
        .map(|w| libm::log(w[1]) - libm::log(w[0]))
        .collect();
    ReturnSeries::new(prices.dates[1..].to_vec(), values)
}

/// Rebuilds price levels from `start` and a return path.
pub fn cumulate_returns(start: f64, returns: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(returns.len() + 1);
    out.push(start);
    let mut log_level = libm::log(start);
    for r in returns {
        log_level += r;
        out.push(libm::exp(log_level));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptiveStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

pub fn describe(r: &ReturnSeries) -> Result<DescriptiveStats> {
    describe_values(r.values())
}

pub fn describe_values(x: &[f64]) -> Result<DescriptiveStats> {
    let n = x.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    let (min, max) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    Ok(DescriptiveStats {
        mean,
        sd: libm::sqrt(ss / (n - 1) as f64),
        min,
        max,
        n,
    })
}
