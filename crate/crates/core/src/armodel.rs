//! Fixed-coefficient AR(q) by OLS, Schwarz order selection and Newey-West
//! HAC covariance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::series::ReturnSeries;

/// Plain least-squares result.
#[derive(Debug, Clone)]
pub struct Ols {
    pub coef: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `(X'X)^{-1}`.
    pub xtx_inv: Matrix,
    pub rss: f64,
}

pub fn ols(x: &Matrix, y: &[f64]) -> Result<Ols> {
    if x.rows() != y.len() {
        return Err(invalid("design rows and response length differ"));
    }
    if x.rows() < x.cols() {
        return Err(Error::TooShort {
            needed: x.cols(),
            got: x.rows(),
        });
    }
    let xt = x.transpose();
    let xtx = xt.matmul(x);
    let chol = Cholesky::new(&xtx, "regressor cross-product matrix")?;
    let coef = chol.solve(&xt.matvec(y));
    let residuals: Vec<f64> = (0..x.rows()).map(|i| y[i] - dot(x.row(i), &coef)).collect();
    let rss = residuals.iter().map(|e| e * e).sum();
    Ok(Ols {
        coef,
        residuals,
        xtx_inv: chol.inverse(),
        rss,
    })
}

/// Newey-West (1994) plug-in rule `floor(4 (T/100)^{2/9})`.
pub fn nw_auto_bandwidth(t: usize) -> usize {
    libm::floor(4.0 * libm::pow(t as f64 / 100.0, 2.0 / 9.0)) as usize
}

/// Bartlett weight `1 - l/(L+1)`.
#[inline]
pub fn bartlett_weight(lag: usize, bandwidth: usize) -> f64 {
    if lag > bandwidth {
        0.0
    } else {
        1.0 - lag as f64 / (bandwidth as f64 + 1.0)
    }
}

/// Bartlett-kernel long-run covariance `sum_l w_l (G_l + G_l')` of the rows
/// of `scores` (no centering, no 1/n scaling).
pub fn bartlett_long_run(scores: &Matrix, bandwidth: usize) -> Matrix {
    let (n, k) = (scores.rows(), scores.cols());
    let mut s = Matrix::zeros(k, k);
    for t in 0..n {
        s.add_outer(1.0, scores.row(t), scores.row(t));
    }
    for lag in 1..=bandwidth.min(n.saturating_sub(1)) {
        let w = bartlett_weight(lag, bandwidth);
        let mut g = Matrix::zeros(k, k);
        for t in lag..n {
            g.add_outer(1.0, scores.row(t), scores.row(t - lag));
        }
        let gt = g.transpose();
        g.add_assign(&gt);
        g.scale(w);
        s.add_assign(&g);
    }
    s.symmetrize();
    s
}

/// Sandwich `(X'X)^{-1} S (X'X)^{-1}` with `S` the Bartlett long-run
/// covariance of the scores `x_t e_t`. Bandwidth 0 is White's estimator.
pub fn newey_west_cov(x: &Matrix, e: &[f64], bandwidth: usize) -> Result<Matrix> {
    if x.rows() != e.len() {
        return Err(invalid("design rows and residual length differ"));
    }
    let xtx = x.transpose().matmul(x);
    let bread = Cholesky::new(&xtx, "regressor cross-product matrix")?.inverse();
    let scores = Matrix::from_fn(x.rows(), x.cols(), |t, j| x[(t, j)] * e[t]);
    let meat = bartlett_long_run(&scores, bandwidth);
    let mut cov = bread.matmul(&meat).matmul(&bread);
    cov.symmetrize();
    Ok(cov)
}

/// Regressors `(1, x_{t-1}, ..., x_{t-q})` and responses `x_t` for
/// `t = start..len`.
pub fn ar_design(x: &[f64], q: usize, start: usize) -> (Matrix, Vec<f64>) {
    assert!(start >= q && start <= x.len());
    let n = x.len() - start;
    let design = Matrix::from_fn(n, q + 1, |i, j| if j == 0 { 1.0 } else { x[start + i - j] });
    (design, x[start..].to_vec())
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ArOptions {
    /// HAC bandwidth; `None` uses [`nw_auto_bandwidth`] on the estimation sample.
    pub bandwidth: Option<usize>,
    /// First response index; defaults to `q`.
    pub start: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ArFit {
    pub order: usize,
    pub intercept: f64,
    pub coeffs: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `RSS / (n - q - 1)`.
    pub sigma2: f64,
    pub ols_cov: Matrix,
    pub hac_cov: Matrix,
    pub hac_se: Vec<f64>,
    pub bandwidth: usize,
    pub r2: f64,
    pub r2_adj: f64,
    /// `ln(RSS/n) + (q+1) ln(n) / n`.
    pub sbic: f64,
    pub n_used: usize,
    /// Regressor matrix, one row per used observation.
    pub design: Matrix,
    pub response: Vec<f64>,
}

impl ArFit {
    /// `(alpha_0, alpha_1, ..., alpha_q)`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = vec![self.intercept];
        p.extend_from_slice(&self.coeffs);
        p
    }

    pub fn ols_se(&self) -> Vec<f64> {
        self.ols_cov
            .diagonal()
            .into_iter()
            .map(libm::sqrt)
            .collect()
    }
}

pub fn fit_ar_ols(r: &ReturnSeries, q: usize) -> Result<ArFit> {
    fit_ar_values(r.values(), q, ArOptions::default())
}

pub fn fit_ar_values(x: &[f64], q: usize, opts: ArOptions) -> Result<ArFit> {
    let t = x.len();
    if t <= 3 * (q + 1) {
        return Err(Error::TooShort {
            needed: 3 * (q + 1) + 1,
            got: t,
        });
    }
    let start = opts.start.unwrap_or(q);
    if start < q || start + q + 2 > t {
        return Err(invalid("estimation start leaves too few observations"));
    }
    let (design, y) = ar_design(x, q, start);
    let n = y.len();
    let k = q + 1;
    let fit = ols(&design, &y).map_err(|e| match e {
        Error::Singular(_) => Error::Singular("AR design matrix"),
        other => other,
    })?;
    let bandwidth = opts.bandwidth.unwrap_or_else(|| nw_auto_bandwidth(n));
    let hac_cov = newey_west_cov(&design, &fit.residuals, bandwidth)?;
    let hac_se = hac_cov
        .diagonal()
        .into_iter()
        .map(|v| libm::sqrt(v.max(0.0)))
        .collect();

    let mean_y = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let (r2, r2_adj) = if tss > 0.0 {
        (
            1.0 - fit.rss / tss,
            1.0 - (fit.rss / (n - k) as f64) / (tss / (n - 1) as f64),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let sigma2 = fit.rss / (n - k) as f64;
    let sbic = libm::log(fit.rss / n as f64) + k as f64 * libm::log(n as f64) / n as f64;

    Ok(ArFit {
        order: q,
        intercept: fit.coef[0],
        coeffs: fit.coef[1..].to_vec(),
        residuals: fit.residuals,
        sigma2,
        ols_cov: fit.xtx_inv.scaled(sigma2),
        hac_cov,
        hac_se,
        bandwidth,
        r2,
        r2_adj,
        sbic,
        n_used: n,
        design,
        response: y,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    pub order: usize,
    /// `(q, SBIC)` on the common sample.
    pub criteria: Vec<(usize, f64)>,
    pub n_common: usize,
}

/// Minimises SBIC over `q = 1..=q_max`, every candidate estimated on the
/// sample that drops the first `q_max` observations. Ties go to the smaller
/// order.
pub fn select_order_sbic(r: &ReturnSeries, q_max: usize) -> Result<OrderSelection> {
    select_order_values(r.values(), q_max)
}

pub fn select_order_values(x: &[f64], q_max: usize) -> Result<OrderSelection> {
    if q_max == 0 {
        return Err(invalid("q_max must be at least 1"));
    }
    let mut criteria = Vec::with_capacity(q_max);
    let mut best = (0usize, f64::INFINITY);
    let mut n_common = 0;
    for q in 1..=q_max {
        let fit = fit_ar_values(
            x,
            q,
            ArOptions {
                bandwidth: Some(0),
                start: Some(q_max),
            },
        )?;
        n_common = fit.n_used;
        criteria.push((q, fit.sbic));
        if fit.sbic < best.1 {
            best = (q, fit.sbic);
        }
    }
    Ok(OrderSelection {
        order: best.0,
        criteria,
        n_common,
    })
}
