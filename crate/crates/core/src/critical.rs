//! Embedded critical-value tables and the simulators that produce them.
//!
//! Both tables live in `data/` as small CSV files and are compiled into the
//! crate. They are regenerated by `cargo run --release -p tvar --example
//! critical_values`, which calls the simulators below.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stationarity::TrendModel;

/// Significance levels carried by every table.
pub const LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

/// Largest number of jointly tested parameters in the L_c table.
pub const LC_MAX_M: usize = 20;

pub const ADF_GLS_CSV: &str = include_str!("../data/adf_gls_critical_values.csv");
pub const HANSEN_LC_CSV: &str = include_str!("../data/hansen_lc_critical_values.csv");

fn level_index(level: f64) -> Result<usize> {
    LEVELS
        .iter()
        .position(|l| (l - level).abs() < 1e-12)
        .ok_or(Error::UnsupportedLevel(level))
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Table("bad number"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdfGlsTable {
    /// `[constant, constant+trend]`, each indexed like [`LEVELS`].
    values: [[f64; 3]; 2],
}

impl AdfGlsTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = [[f64::NAN; 3]; 2];
        let mut lines = data_lines(text);
        if lines.next() != Some("trend,level,value,source") {
            return Err(Error::Table("adf-gls header"));
        }
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(Error::Table("adf-gls row width"));
            }
            let trend = TrendModel::from_code(f[0]).ok_or(Error::Table("adf-gls trend code"))?;
            let li = level_index(parse_f64(f[1])?).map_err(|_| Error::Table("adf-gls level"))?;
            values[trend as usize][li] = parse_f64(f[2])?;
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Table("adf-gls table incomplete"));
        }
        Ok(Self { values })
    }

    pub fn lookup(&self, trend: TrendModel, level: f64) -> Result<f64> {
        Ok(self.values[trend as usize][level_index(level)?])
    }
}

pub fn adf_gls_table() -> Result<AdfGlsTable> {
    AdfGlsTable::parse(ADF_GLS_CSV)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LcTable {
    /// Row `m - 1`, columns indexed like [`LEVELS`].
    rows: Vec<[f64; 3]>,
}

impl LcTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = data_lines(text);
        if lines.next() != Some("m,0.01,0.05,0.10") {
            return Err(Error::Table("lc header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 || f[0].trim().parse::<usize>().ok() != Some(i + 1) {
                return Err(Error::Table("lc row"));
            }
            rows.push([parse_f64(f[1])?, parse_f64(f[2])?, parse_f64(f[3])?]);
        }
        if rows.len() != LC_MAX_M {
            return Err(Error::Table("lc table incomplete"));
        }
        Ok(Self { rows })
    }

    pub fn lookup(&self, m: usize, level: f64) -> Result<f64> {
        if m == 0 || m > self.rows.len() {
            return Err(Error::UnsupportedM(m));
        }
        Ok(self.rows[m - 1][level_index(level)?])
    }
}

pub fn lc_table() -> Result<LcTable> {
    LcTable::parse(HANSEN_LC_CSV)
}

/// Sample quantile with linear interpolation between order statistics
/// (type 7). Sorts `values` in place.
pub fn quantile(values: &mut [f64], p: f64) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.total_cmp(b));
    let h = (values.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(values.len() - 1);
    values[lo] + (h - lo as f64) * (values[hi] - values[lo])
}

/// One draw of `int_0^1 B(r)' B(r) dr` for `m = 1..=m_max` independent
/// Brownian bridges, via the Karhunen-Loeve expansion
/// `sum_k Z_k^2 / (k pi)^2` truncated at `terms` with the tail replaced by its
/// mean. Entry `m - 1` holds the `m`-dimensional functional.
pub fn lc_null_draw<R: rand::Rng + ?Sized>(rng: &mut R, m_max: usize, terms: usize) -> Vec<f64> {
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    let head: f64 = (1..=terms).map(|k| 1.0 / ((k * k) as f64 * pi2)).sum();
    let tail = 1.0 / 6.0 - head;
    let mut out = Vec::with_capacity(m_max);
    let mut acc = 0.0;
    for _ in 0..m_max {
        let mut one = tail;
        for k in 1..=terms {
            let z = crate::random::std_normal(rng);
            one += z * z / ((k * k) as f64 * pi2);
        }
        acc += one;
        out.push(acc);
    }
    out
}
