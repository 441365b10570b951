//! ADF-GLS unit-root test (Elliott, Rothenberg and Stock) with modified
//! information-criterion lag selection (Ng and Perron).
//!
//! The series is first GLS-detrended under the local alternative
//! `1 + c_bar / T`, then the Dickey-Fuller regression
//!
//! ```text
//! dy_t = rho * y_{t-1} + sum_{j=1..k} b_j dy_{t-j} + e_t
//! ```
//!
//! is run on the detrended series without deterministic terms. The lag order
//! `k` minimises MBIC (or MAIC) over `0..=max_lag` on a sample that starts at
//! the same observation for every candidate.

use alloc::vec::Vec;

use crate::armodel::ols;
use crate::critical;
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::series::ReturnSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrendModel {
    Constant,
    ConstantTrend,
}

impl TrendModel {
    /// Local-to-unity parameter recommended by Elliott, Rothenberg and Stock.
    pub fn default_c_bar(self) -> f64 {
        match self {
            TrendModel::Constant => -7.0,
            TrendModel::ConstantTrend => -13.5,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            TrendModel::Constant => "c",
            TrendModel::ConstantTrend => "ct",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        match code {
            "c" => Some(TrendModel::Constant),
            "ct" => Some(TrendModel::ConstantTrend),
            _ => None,
        }
    }

    fn regressors(self, t: usize) -> Vec<f64> {
        match self {
            TrendModel::Constant => alloc::vec![1.0],
            TrendModel::ConstantTrend => alloc::vec![1.0, (t + 1) as f64],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagCriterion {
    /// Penalty `ln(n)`; the default.
    Mbic,
    /// Penalty `2`.
    Maic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdfGlsOptions {
    pub trend: TrendModel,
    /// `None` uses [`schwert_max_lag`].
    pub max_lag: Option<usize>,
    pub criterion: LagCriterion,
    /// `None` uses [`TrendModel::default_c_bar`].
    pub c_bar: Option<f64>,
}

impl AdfGlsOptions {
    pub fn new(trend: TrendModel) -> Self {
        Self {
            trend,
            max_lag: None,
            criterion: LagCriterion::Mbic,
            c_bar: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitRootResult {
    /// t-ratio on the lagged detrended level.
    pub statistic: f64,
    pub lag: usize,
    pub max_lag: usize,
    /// Implied largest AR root, `1 + rho`. Equals the sum of the level-AR
    /// coefficients of the detrended series.
    pub phi_hat: f64,
    /// Raw Dickey-Fuller slope `rho`.
    pub df_slope: f64,
    pub trend_model: TrendModel,
    pub criterion: LagCriterion,
    pub c_bar: f64,
    /// Observations in the final regression.
    pub n_obs: usize,
    /// `(k, criterion value)` for `k = 0..=max_lag`.
    pub criteria: Vec<(usize, f64)>,
    pub critical_values: Vec<(f64, f64)>,
    pub reject: Vec<(f64, bool)>,
}

/// `floor(12 (T/100)^{1/4})`.
pub fn schwert_max_lag(t: usize) -> usize {
    libm::floor(12.0 * libm::pow(t as f64 / 100.0, 0.25)) as usize
}

/// GLS-detrended series `y_t - z_t' delta`.
pub fn gls_detrend(y: &[f64], trend: TrendModel, c_bar: f64) -> Result<Vec<f64>> {
    let t_len = y.len();
    if t_len < 10 {
        return Err(Error::TooShort {
            needed: 10,
            got: t_len,
        });
    }
    if !(c_bar < 0.0) {
        return Err(invalid("c_bar must be negative"));
    }
    let a = 1.0 + c_bar / t_len as f64;
    let k = trend.regressors(0).len();
    let z: Vec<Vec<f64>> = (0..t_len).map(|t| trend.regressors(t)).collect();
    let zq = Matrix::from_fn(t_len, k, |t, j| {
        if t == 0 {
            z[0][j]
        } else {
            z[t][j] - a * z[t - 1][j]
        }
    });
    let yq: Vec<f64> = (0..t_len)
        .map(|t| if t == 0 { y[0] } else { y[t] - a * y[t - 1] })
        .collect();
    let fit = ols(&zq, &yq).map_err(|_| Error::Singular("quasi-differenced deterministics"))?;
    Ok((0..t_len)
        .map(|t| y[t] - crate::linalg::dot(&z[t], &fit.coef))
        .collect())
}

struct DfRegression {
    rho: f64,
    t_stat: f64,
    rss: f64,
    sum_sq_lagged: f64,
    n: usize,
}

/// DF regression with `k` lagged differences on responses `dy_t`,
/// `t = first..len` (0-based levels index).
fn df_regression(u: &[f64], k: usize, first: usize) -> Result<DfRegression> {
    debug_assert!(first > k);
    let n = u.len() - first;
    let x = Matrix::from_fn(n, k + 1, |i, j| {
        let t = first + i;
        if j == 0 {
            u[t - 1]
        } else {
            u[t - j] - u[t - j - 1]
        }
    });
    let dy: Vec<f64> = (first..u.len()).map(|t| u[t] - u[t - 1]).collect();
    let fit = ols(&x, &dy).map_err(|_| Error::Singular("Dickey-Fuller regression"))?;
    let dof = n - (k + 1);
    let s2 = fit.rss / dof as f64;
    let se = libm::sqrt(s2 * fit.xtx_inv[(0, 0)]);
    let sum_sq_lagged = (first..u.len()).map(|t| u[t - 1] * u[t - 1]).sum();
    Ok(DfRegression {
        rho: fit.coef[0],
        t_stat: fit.coef[0] / se,
        rss: fit.rss,
        sum_sq_lagged,
        n,
    })
}

/// Modified information criterion for lag `k` on the fixed sample.
fn modified_ic(reg: &DfRegression, k: usize, criterion: LagCriterion) -> f64 {
    let n = reg.n as f64;
    let s2 = reg.rss / n;
    let tau = reg.rho * reg.rho * reg.sum_sq_lagged / s2;
    let c = match criterion {
        LagCriterion::Mbic => libm::log(n),
        LagCriterion::Maic => 2.0,
    };
    libm::log(s2) + c * (tau + k as f64) / n
}

pub fn adf_gls(
    r: &ReturnSeries,
    max_lag: Option<usize>,
    trend: TrendModel,
) -> Result<UnitRootResult> {
    adf_gls_with(
        r.values(),
        &AdfGlsOptions {
            max_lag,
            ..AdfGlsOptions::new(trend)
        },
    )
}

pub fn adf_gls_with(y: &[f64], opts: &AdfGlsOptions) -> Result<UnitRootResult> {
    let t_len = y.len();
    let max_lag = opts.max_lag.unwrap_or_else(|| schwert_max_lag(t_len));
    let first = max_lag + 1;
    if t_len < 10 || t_len <= first + max_lag + 4 {
        return Err(Error::TooShort {
            needed: (2 * max_lag + 6).max(10),
            got: t_len,
        });
    }
    let c_bar = opts.c_bar.unwrap_or_else(|| opts.trend.default_c_bar());
    let u = gls_detrend(y, opts.trend, c_bar)?;

    let mut criteria = Vec::with_capacity(max_lag + 1);
    let mut best = (0usize, f64::INFINITY);
    for k in 0..=max_lag {
        let reg = df_regression(&u, k, first)?;
        let ic = modified_ic(&reg, k, opts.criterion);
        criteria.push((k, ic));
        if ic < best.1 {
            best = (k, ic);
        }
    }
    let lag = best.0;
    let reg = df_regression(&u, lag, lag + 1)?;

    let mut critical_values = Vec::new();
    let mut reject = Vec::new();
    for level in critical::LEVELS {
        let cv = ur_critical_values(opts.trend, level)?;
        critical_values.push((level, cv));
        reject.push((level, reg.t_stat < cv));
    }

    Ok(UnitRootResult {
        statistic: reg.t_stat,
        lag,
        max_lag,
        phi_hat: 1.0 + reg.rho,
        df_slope: reg.rho,
        trend_model: opts.trend,
        criterion: opts.criterion,
        c_bar,
        n_obs: reg.n,
        criteria,
        critical_values,
        reject,
    })
}

/// Asymptotic lower-tail critical value from the embedded table.
pub fn ur_critical_values(trend: TrendModel, level: f64) -> Result<f64> {
    critical::adf_gls_table()?.lookup(trend, level)
}

/// t-ratio of the lag-0 DF-GLS regression on a driftless random walk; the
/// draw used to tabulate critical values.
pub fn dfgls_null_draw<R: rand::Rng + ?Sized>(
    rng: &mut R,
    t_len: usize,
    trend: TrendModel,
) -> Result<f64> {
    let mut y = Vec::with_capacity(t_len);
    let mut level = 0.0;
    for _ in 0..t_len {
        level += crate::random::std_normal(rng);
        y.push(level);
    }
    let u = gls_detrend(&y, trend, trend.default_c_bar())?;
    Ok(df_regression(&u, 0, 1)?.t_stat)
}
