//! Time-varying AR estimation.
//!
//! The model is
//!
//! ```text
//! x_t        = alpha_0 + alpha_{1,t} x_{t-1} + ... + alpha_{q,t} x_{t-q} + u_t,   u_t ~ (0, s2)
//! alpha_{l,t} = alpha_{l,t-1} + v_{l,t},                                          v_{l,t} ~ (0, d2 * s2)
//! ```
//!
//! with a time-invariant intercept and independent random-walk slopes. The
//! intercept has a flat prior. The first-period slopes get a wide Gaussian
//! prior with variance `prior_variance * s2` (a proper stand-in for a
//! diffuse start).
//!
//! Two solvers compute the same posterior means and covariances:
//!
//! * [`estimate_tvar_stacked`] minimises the penalised least-squares criterion
//!   directly. Its normal equations are block tridiagonal in the slope
//!   vectors with one dense border column for the intercept; they are solved
//!   by a block Cholesky factorisation, and the per-period covariance blocks
//!   come from selected inversion of the same factor.
//! * [`estimate_tvar_kalman`] runs a Kalman filter on the slopes followed by
//!   a fixed-interval (Rauch-Tung-Striebel) smoother. The intercept is
//!   concentrated out by filtering a column of ones through the same gains.
//!
//! Both report the same diffuse log-likelihood with `s2` concentrated out.

use alloc::vec;
use alloc::vec::Vec;

use crate::armodel::{bartlett_long_run, nw_auto_bandwidth};
use crate::dist::two_sided_z;
use crate::error::{invalid, Error, Result};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::series::ReturnSeries;

/// Default prior variance multiplier for the first-period state.
pub const DEFAULT_PRIOR_VARIANCE: f64 = 1e6;

/// Search range for `ln(d2)` in [`select_smoothing`].
pub const LN_DELTA2_RANGE: (f64, f64) = (-20.0, 5.0);
const GRID_STEP: f64 = 0.5;

/// Fallback variance ratio when the likelihood is flat.
pub const FALLBACK_DELTA2: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Fixed,
    MaxLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    /// `d2`: slope-innovation variance relative to the observation variance.
    pub variance_ratio: f64,
    pub selection: Selection,
    /// Observation variance; `None` concentrates it out of the likelihood.
    pub sigma_u2: Option<f64>,
    pub prior_variance: f64,
    /// Use `x_{t-l} - mean(x)` as regressors. Off by default; with it the
    /// slope paths are exactly invariant to shifting the series.
    pub center_regressors: bool,
}

impl SmoothingConfig {
    pub fn fixed(variance_ratio: f64) -> Self {
        Self {
            variance_ratio,
            selection: Selection::Fixed,
            sigma_u2: None,
            prior_variance: DEFAULT_PRIOR_VARIANCE,
            center_regressors: false,
        }
    }

    /// Per-slope innovation variance `d2 * s2`, once `s2` is known.
    pub fn sigma_v2(&self) -> Option<f64> {
        self.sigma_u2.map(|s2| s2 * self.variance_ratio)
    }

    fn validate(&self) -> Result<()> {
        if !(self.variance_ratio > 0.0) || !self.variance_ratio.is_finite() {
            return Err(invalid("variance ratio must be positive and finite"));
        }
        if !(self.prior_variance > 0.0) {
            return Err(invalid("prior variance must be positive"));
        }
        if let Some(s2) = self.sigma_u2 {
            if !(s2 > 0.0) {
                return Err(invalid("sigma_u2 must be positive"));
            }
        }
        Ok(())
    }
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self::fixed(FALLBACK_DELTA2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvarBackend {
    Stacked,
    Kalman,
}

/// Responses and regressors shared by both solvers.
#[derive(Debug, Clone)]
pub struct TvarDesign {
    pub q: usize,
    /// `x_t`, `t = q..T`.
    pub y: Vec<f64>,
    /// Row `i` holds `(x_{t-1}, ..., x_{t-q})` for response `i` (centred if requested).
    pub z: Matrix,
    pub center: f64,
}

impl TvarDesign {
    pub fn new(x: &[f64], q: usize, center_regressors: bool) -> Result<Self> {
        if q == 0 {
            return Err(invalid("TV-AR order must be at least 1"));
        }
        if x.len() <= 5 * q {
            return Err(Error::TooShort {
                needed: 5 * q + 1,
                got: x.len(),
            });
        }
        if let Some(index) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let first = x[0];
        if x.iter().all(|v| *v == first) {
            return Err(Error::Singular("constant returns"));
        }
        let center = if center_regressors {
            x.iter().sum::<f64>() / x.len() as f64
        } else {
            0.0
        };
        let n = x.len() - q;
        let z = Matrix::from_fn(n, q, |i, l| x[q + i - 1 - l] - center);
        Ok(Self {
            q,
            y: x[q..].to_vec(),
            z,
            center,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }
}

#[derive(Debug, Clone)]
pub struct TVARPath {
    pub order: usize,
    /// Labels of the periods with a coefficient estimate (`dates[q..]`).
    pub dates: Vec<alloc::string::String>,
    pub intercept: f64,
    pub intercept_var: f64,
    /// `n x q`, row `t` = `(alpha_{1,t}, ..., alpha_{q,t})`.
    pub coeff_paths: Matrix,
    /// Posterior covariance of each row of `coeff_paths`.
    pub cov_blocks: Vec<Matrix>,
    /// `x_t - alpha_0 - z_t' alpha_t` at the smoothed estimates.
    pub residuals: Vec<f64>,
    /// Regressors `z_t` as used in the fit.
    pub regressors: Matrix,
    /// Observation variance used to scale `cov_blocks`.
    pub sigma_u2: f64,
    pub loglik: f64,
    /// Regressor centre (0 unless centring was requested).
    pub center: f64,
    pub config: SmoothingConfig,
    pub backend: TvarBackend,
}

impl TVARPath {
    pub fn n(&self) -> usize {
        self.coeff_paths.rows()
    }

    pub fn coeffs_at(&self, t: usize) -> &[f64] {
        self.coeff_paths.row(t)
    }

    pub fn se(&self, t: usize, l: usize) -> f64 {
        libm::sqrt(self.cov_blocks[t][(l, l)].max(0.0))
    }

    /// Per-slope ratio of the Bartlett long-run variance of the observation
    /// scores `z_{l,t} e_t` to their plain sum of squares.
    pub fn hac_factors(&self, bandwidth: Option<usize>) -> Vec<f64> {
        let n = self.n();
        let bw = bandwidth.unwrap_or_else(|| nw_auto_bandwidth(n));
        (0..self.order)
            .map(|l| {
                let scores =
                    Matrix::from_fn(n, 1, |t, _| self.regressors[(t, l)] * self.residuals[t]);
                let long_run = bartlett_long_run(&scores, bw)[(0, 0)];
                let short_run: f64 = (0..n).map(|t| scores[(t, 0)] * scores[(t, 0)]).sum();
                if short_run > 0.0 {
                    long_run.max(0.0) / short_run
                } else {
                    1.0
                }
            })
            .collect()
    }
}

fn check_config(design: &TvarDesign, cfg: &SmoothingConfig) -> Result<()> {
    cfg.validate()?;
    if design.n() <= design.q + 1 {
        return Err(Error::TooShort {
            needed: 2 * design.q + 2,
            got: design.n() + design.q,
        });
    }
    Ok(())
}

/// `-(1/2)[(n-d)(ln 2 pi s2 + S/((n-d) s2)) + ln det]` with `d = q + 1`
/// diffuse elements and `ln det` the prior-free log determinant.
fn diffuse_loglik(n: usize, d: usize, ssr: f64, log_det: f64, sigma_u2: Option<f64>) -> (f64, f64) {
    let m = (n - d) as f64;
    let s2 = sigma_u2.unwrap_or(ssr / m);
    let ll = -0.5 * (m * libm::log(2.0 * core::f64::consts::PI * s2) + ssr / s2 + log_det);
    (ll, s2)
}

fn residuals(design: &TvarDesign, intercept: f64, paths: &Matrix) -> Vec<f64> {
    (0..design.n())
        .map(|t| design.y[t] - intercept - dot(design.z.row(t), paths.row(t)))
        .collect()
}

/// Penalised criterion evaluated at `(intercept, paths)`, in units of `s2`.
pub fn stacked_objective(
    design: &TvarDesign,
    cfg: &SmoothingConfig,
    intercept: f64,
    paths: &Matrix,
) -> f64 {
    let w = 1.0 / cfg.variance_ratio;
    let p = 1.0 / cfg.prior_variance;
    let e = residuals(design, intercept, paths);
    let mut obj: f64 = e.iter().map(|v| v * v).sum();
    for t in 1..design.n() {
        for l in 0..design.q {
            let d = paths[(t, l)] - paths[(t - 1, l)];
            obj += w * d * d;
        }
    }
    obj += p * paths.row(0).iter().map(|a| a * a).sum::<f64>();
    obj
}

pub fn estimate_tvar(
    r: &ReturnSeries,
    q: usize,
    cfg: &SmoothingConfig,
    backend: TvarBackend,
) -> Result<TVARPath> {
    match backend {
        TvarBackend::Stacked => estimate_tvar_stacked(r, q, cfg),
        TvarBackend::Kalman => estimate_tvar_kalman(r, q, cfg),
    }
}

fn finish(
    r_dates: &[alloc::string::String],
    design: &TvarDesign,
    cfg: &SmoothingConfig,
    backend: TvarBackend,
    intercept: f64,
    intercept_var_unit: f64,
    paths: Matrix,
    mut cov_unit: Vec<Matrix>,
    ssr: f64,
    log_det: f64,
) -> Result<TVARPath> {
    if !paths.is_finite() || !intercept.is_finite() {
        return Err(Error::Singular("time-varying AR system"));
    }
    let (loglik, s2) = diffuse_loglik(design.n(), design.q + 1, ssr, log_det, cfg.sigma_u2);
    for c in cov_unit.iter_mut() {
        c.scale(s2);
        c.symmetrize();
    }
    let mut config = *cfg;
    config.sigma_u2 = Some(s2);
    Ok(TVARPath {
        order: design.q,
        dates: r_dates[design.q..].to_vec(),
        intercept,
        intercept_var: intercept_var_unit * s2,
        residuals: residuals(design, intercept, &paths),
        regressors: design.z.clone(),
        coeff_paths: paths,
        cov_blocks: cov_unit,
        sigma_u2: s2,
        loglik,
        center: design.center,
        config,
        backend,
    })
}

// ---------------------------------------------------------------------------
// Stacked penalised least squares

struct BlockFactor {
    /// Cholesky of the Schur-complemented diagonal block `G_t G_t'`.
    g: Vec<Cholesky>,
    /// Subdiagonal factor blocks `B_t = -w G_{t-1}^{-T}` (entry 0 unused).
    b: Vec<Matrix>,
}

impl BlockFactor {
    fn new(design: &TvarDesign, w: f64, p: f64) -> Result<Self> {
        let (n, q) = (design.n(), design.q);
        let mut g: Vec<Cholesky> = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for t in 0..n {
            let zt = design.z.row(t);
            let links = usize::from(t > 0) + usize::from(t + 1 < n);
            let mut d = Matrix::zeros(q, q);
            d.add_outer(1.0, zt, zt);
            for l in 0..q {
                d[(l, l)] += w * links as f64 + if t == 0 { p } else { 0.0 };
            }
            if t == 0 {
                b.push(Matrix::zeros(q, q));
            } else {
                // B_t = -w G_{t-1}^{-T};  G_t G_t' = D_t - B_t B_t'.
                let ginv = g[t - 1].factor_inverse();
                let bt = ginv.transpose().scaled(-w);
                let bbt = bt.matmul(&bt.transpose());
                d.sub_assign(&bbt);
                b.push(bt);
            }
            g.push(Cholesky::new(&d, "stacked TV-AR normal equations")?);
        }
        Ok(Self { g, b })
    }

    /// Solves the block-tridiagonal system for a right-hand side given as an
    /// `n x q` matrix, in place.
    fn solve(&self, rhs: &mut Matrix) {
        let n = self.g.len();
        let q = rhs.cols();
        let mut prev = vec![0.0; q];
        for t in 0..n {
            let mut v: Vec<f64> = rhs.row(t).to_vec();
            if t > 0 {
                let bp = self.b[t].matvec(&prev);
                v.iter_mut().zip(&bp).for_each(|(a, c)| *a -= c);
            }
            self.g[t].forward(&mut v);
            for l in 0..q {
                rhs[(t, l)] = v[l];
            }
            prev = v;
        }
        let mut next = vec![0.0; q];
        for t in (0..n).rev() {
            let mut v: Vec<f64> = rhs.row(t).to_vec();
            if t + 1 < n {
                let btn = self.b[t + 1].transpose().matvec(&next);
                v.iter_mut().zip(&btn).for_each(|(a, c)| *a -= c);
            }
            self.g[t].backward(&mut v);
            for l in 0..q {
                rhs[(t, l)] = v[l];
            }
            next = v;
        }
    }

    /// Diagonal blocks of the inverse by selected inversion.
    fn inverse_diagonal(&self) -> Vec<Matrix> {
        let n = self.g.len();
        let mut out: Vec<Matrix> = Vec::with_capacity(n);
        let ginv: Vec<Matrix> = self.g.iter().map(Cholesky::factor_inverse).collect();
        let gg: Vec<Matrix> = ginv.iter().map(|gi| gi.transpose().matmul(gi)).collect();
        out.resize(n, Matrix::zeros(0, 0));
        out[n - 1] = gg[n - 1].clone();
        for t in (0..n - 1).rev() {
            // S_{t+1,t} = -S_{t+1,t+1} B_{t+1} G_t^{-1}
            let s_next_t = out[t + 1]
                .matmul(&self.b[t + 1])
                .matmul(&ginv[t])
                .scaled(-1.0);
            // S_tt = G_t^{-T} G_t^{-1} - S_{t,t+1} B_{t+1} G_t^{-1}
            let corr = s_next_t.transpose().matmul(&self.b[t + 1]).matmul(&ginv[t]);
            let mut stt = gg[t].clone();
            stt.sub_assign(&corr);
            stt.symmetrize();
            out[t] = stt;
        }
        out
    }

    fn log_det(&self) -> f64 {
        self.g.iter().map(Cholesky::log_det).sum()
    }
}

/// Residual of the stacked normal equations at `(c, paths)`: the intercept
/// row, then one row per period.
fn normal_residual(design: &TvarDesign, w: f64, p: f64, c: f64, paths: &Matrix) -> (f64, Matrix) {
    let (n, q) = (design.n(), design.q);
    let e = residuals(design, c, paths);
    let res = Matrix::from_fn(n, q, |t, l| {
        let mut g = design.z[(t, l)] * e[t];
        if t > 0 {
            g -= w * (paths[(t, l)] - paths[(t - 1, l)]);
        }
        if t + 1 < n {
            g += w * (paths[(t + 1, l)] - paths[(t, l)]);
        }
        if t == 0 {
            g -= p * paths[(t, l)];
        }
        g
    });
    (e.iter().sum(), res)
}

/// Penalised least-squares solve of the stacked observation and smoothness
/// equations.
pub fn estimate_tvar_stacked(
    r: &ReturnSeries,
    q: usize,
    cfg: &SmoothingConfig,
) -> Result<TVARPath> {
    let design = TvarDesign::new(r.values(), q, cfg.center_regressors)?;
    check_config(&design, cfg)?;
    let (n, q) = (design.n(), design.q);
    let w = 1.0 / cfg.variance_ratio;
    let p = 1.0 / cfg.prior_variance;

    let factor = BlockFactor::new(&design, w, p)?;

    // Border column z_t, then the data right-hand side z_t y_t.
    let mut sol_b = design.z.clone();
    factor.solve(&mut sol_b);
    let corner = n as f64;
    let b_dot_b: f64 = (0..n).map(|t| dot(design.z.row(t), sol_b.row(t))).sum();
    let schur = corner - b_dot_b;
    if !(schur > corner * 1e-14) {
        return Err(Error::Singular("stacked TV-AR intercept"));
    }
    let bordered = |mut rhs: Matrix, rhs_c: f64| -> (f64, Matrix) {
        factor.solve(&mut rhs);
        let b_dot: f64 = (0..n).map(|t| dot(design.z.row(t), rhs.row(t))).sum();
        let c = (rhs_c - b_dot) / schur;
        (
            c,
            Matrix::from_fn(n, q, |t, l| rhs[(t, l)] - sol_b[(t, l)] * c),
        )
    };

    let rhs = Matrix::from_fn(n, q, |t, l| design.z[(t, l)] * design.y[t]);
    let (mut intercept, mut paths) = bordered(rhs, design.y.iter().sum());
    // Small variance ratios make the system stiff; two rounds of iterative
    // refinement recover the digits lost in the factorisation.
    for _ in 0..2 {
        let (rc, rp) = normal_residual(&design, w, p, intercept, &paths);
        let (dc, dp) = bordered(rp, rc);
        intercept += dc;
        paths.add_assign(&dp);
    }

    let mut cov = factor.inverse_diagonal();
    for (t, c) in cov.iter_mut().enumerate() {
        c.add_outer(1.0 / schur, sol_b.row(t), sol_b.row(t));
    }

    let ssr = stacked_objective(&design, cfg, intercept, &paths);
    let log_det_gram = factor.log_det() + libm::log(schur);
    let log_det = log_det_gram + (q * (n - 1)) as f64 * libm::log(cfg.variance_ratio);
    finish(
        r.dates(),
        &design,
        cfg,
        TvarBackend::Stacked,
        intercept,
        1.0 / schur,
        paths,
        cov,
        ssr,
        log_det,
    )
}

// ---------------------------------------------------------------------------
// Kalman filter and smoother

struct FilterOutput {
    /// Filtered slope means for the data and for a column of ones.
    a_y: Vec<Vec<f64>>,
    a_1: Vec<Vec<f64>>,
    p_filt: Vec<Matrix>,
    p_pred: Vec<Matrix>,
    intercept: f64,
    /// `sum v_1^2 / F`, the intercept's precision in units of `s2`.
    intercept_precision: f64,
    ssr: f64,
    log_det: f64,
}

/// Filters the slopes for the data and, through the same gains, for a column
/// of ones. The flat-prior intercept is then the GLS coefficient of the data
/// innovations on the ones innovations.
fn kalman_filter(design: &TvarDesign, cfg: &SmoothingConfig, keep: bool) -> Result<FilterOutput> {
    let (n, q) = (design.n(), design.q);
    let kappa = cfg.prior_variance;
    let mut a_y = vec![0.0; q];
    let mut a_1 = vec![0.0; q];
    let mut p = Matrix::identity(q).scaled(kappa);
    let cap = if keep { n } else { 0 };
    let mut out = FilterOutput {
        a_y: Vec::with_capacity(cap),
        a_1: Vec::with_capacity(cap),
        p_filt: Vec::with_capacity(cap),
        p_pred: Vec::with_capacity(cap),
        intercept: 0.0,
        intercept_precision: 0.0,
        ssr: 0.0,
        log_det: -(q as f64) * libm::log(kappa),
    };
    let (mut syy, mut s1y, mut s11) = (0.0, 0.0, 0.0);

    for t in 0..n {
        let z = design.z.row(t);
        let pz = p.matvec(z);
        let f = dot(z, &pz) + 1.0;
        if !(f > 0.0) || !f.is_finite() {
            return Err(Error::Singular("Kalman prediction-error variance"));
        }
        let vy = design.y[t] - dot(z, &a_y);
        let v1 = 1.0 - dot(z, &a_1);
        syy += vy * vy / f;
        s1y += v1 * vy / f;
        s11 += v1 * v1 / f;
        out.log_det += libm::log(f);
        if keep {
            out.p_pred.push(p.clone());
        }
        for i in 0..q {
            a_y[i] += pz[i] * vy / f;
            a_1[i] += pz[i] * v1 / f;
        }
        p.add_outer(-1.0 / f, &pz, &pz);
        p.symmetrize();
        if keep {
            out.a_y.push(a_y.clone());
            out.a_1.push(a_1.clone());
            out.p_filt.push(p.clone());
        }
        for l in 0..q {
            p[(l, l)] += cfg.variance_ratio;
        }
    }
    if !(s11 > 1e-14 * n as f64) {
        return Err(Error::Singular("Kalman intercept"));
    }
    out.intercept = s1y / s11;
    out.intercept_precision = s11;
    out.ssr = (syy - s1y * s1y / s11).max(0.0);
    out.log_det += libm::log(s11);
    Ok(out)
}

/// Kalman filter and fixed-interval smoother on the slopes, with the
/// time-invariant intercept concentrated out exactly.
pub fn estimate_tvar_kalman(r: &ReturnSeries, q: usize, cfg: &SmoothingConfig) -> Result<TVARPath> {
    let design = TvarDesign::new(r.values(), q, cfg.center_regressors)?;
    check_config(&design, cfg)?;
    let (n, q) = (design.n(), design.q);
    let filt = kalman_filter(&design, cfg, true)?;

    // The smoother is linear with data-independent gains, so the ones column
    // is smoothed alongside the data.
    let mut m_y = filt.a_y[n - 1].clone();
    let mut m_1 = filt.a_1[n - 1].clone();
    let mut p_s = filt.p_filt[n - 1].clone();
    let mut means_y = vec![Vec::new(); n];
    let mut means_1 = vec![Vec::new(); n];
    let mut covs = vec![Matrix::zeros(0, 0); n];
    means_y[n - 1] = m_y.clone();
    means_1[n - 1] = m_1.clone();
    covs[n - 1] = p_s.clone();
    for t in (0..n - 1).rev() {
        let p_next = &filt.p_pred[t + 1];
        let chol = Cholesky::new(p_next, "Kalman predicted state covariance")?;
        // J = P_{t|t} P_{t+1}^{-1}; P_{t+1} symmetric, so J' = P_{t+1}^{-1} P_{t|t}.
        let jt = chol.solve_matrix(&filt.p_filt[t]);
        let j = jt.transpose();
        let step = |m: &[f64], a: &[f64]| -> Vec<f64> {
            let diff: Vec<f64> = (0..q).map(|i| m[i] - a[i]).collect();
            let shift = j.matvec(&diff);
            (0..q).map(|i| a[i] + shift[i]).collect()
        };
        m_y = step(&m_y, &filt.a_y[t]);
        m_1 = step(&m_1, &filt.a_1[t]);
        let mut dp = p_s.clone();
        dp.sub_assign(p_next);
        let mut p_new = filt.p_filt[t].clone();
        p_new.add_assign(&j.matmul(&dp).matmul(&jt));
        p_new.symmetrize();
        p_s = p_new;
        means_y[t] = m_y.clone();
        means_1[t] = m_1.clone();
        covs[t] = p_s.clone();
    }

    let c = filt.intercept;
    let paths = Matrix::from_fn(n, q, |t, l| means_y[t][l] - c * means_1[t][l]);
    for (t, cov) in covs.iter_mut().enumerate() {
        cov.add_outer(1.0 / filt.intercept_precision, &means_1[t], &means_1[t]);
    }
    finish(
        r.dates(),
        &design,
        cfg,
        TvarBackend::Kalman,
        c,
        1.0 / filt.intercept_precision,
        paths,
        covs,
        filt.ssr,
        filt.log_det,
    )
}

/// Diffuse log-likelihood at variance ratio `d2` with `s2` concentrated out
/// (or fixed if `cfg.sigma_u2` is set), from the prediction-error
/// decomposition.
pub fn profile_loglik(design: &TvarDesign, cfg: &SmoothingConfig) -> Result<f64> {
    cfg.validate()?;
    let filt = kalman_filter(design, cfg, false)?;
    Ok(diffuse_loglik(
        design.n(),
        design.q + 1,
        filt.ssr,
        filt.log_det,
        cfg.sigma_u2,
    )
    .0)
}

// ---------------------------------------------------------------------------
// Smoothness selection

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingWarning {
    /// The likelihood is numerically flat; the fallback ratio was used.
    FlatLikelihood,
    /// The maximiser sits at the lower end of the search range.
    AtLowerBound,
    /// The maximiser sits at the upper end of the search range.
    AtUpperBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingSelection {
    pub config: SmoothingConfig,
    pub loglik: f64,
    /// `(ln d2, loglik)` over the ascending grid.
    pub profile: Vec<(f64, f64)>,
    pub warnings: Vec<SmoothingWarning>,
}

/// Maximum-likelihood choice of `d2`: ascending grid over `ln d2` (first
/// argmax kept), then golden-section refinement inside the neighbouring
/// grid cells.
pub fn select_smoothing(r: &ReturnSeries, q: usize) -> Result<SmoothingSelection> {
    select_smoothing_with(r.values(), q, &SmoothingConfig::default())
}

/// As [`select_smoothing`], taking prior and centring settings from `base`.
pub fn select_smoothing_with(
    x: &[f64],
    q: usize,
    base: &SmoothingConfig,
) -> Result<SmoothingSelection> {
    let design = TvarDesign::new(x, q, base.center_regressors)?;
    let eval = |ln_d2: f64| -> Result<f64> {
        let cfg = SmoothingConfig {
            variance_ratio: libm::exp(ln_d2),
            sigma_u2: None,
            ..*base
        };
        profile_loglik(&design, &cfg)
    };

    let (lo, hi) = LN_DELTA2_RANGE;
    let steps = libm::round((hi - lo) / GRID_STEP) as usize;
    let mut profile = Vec::with_capacity(steps + 1);
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..=steps {
        let g = lo + i as f64 * GRID_STEP;
        let ll = eval(g)?;
        profile.push((g, ll));
        if ll > best.1 {
            best = (i, ll);
        }
    }
    let min_ll = profile.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let mut warnings = Vec::new();

    if !(best.1 - min_ll > 1e-9 * (1.0 + best.1.abs())) {
        warnings.push(SmoothingWarning::FlatLikelihood);
        let cfg = SmoothingConfig {
            variance_ratio: FALLBACK_DELTA2,
            selection: Selection::MaxLikelihood,
            sigma_u2: None,
            ..*base
        };
        let ll = eval(libm::log(FALLBACK_DELTA2))?;
        return Ok(SmoothingSelection {
            config: with_sigma(&design, cfg)?,
            loglik: ll,
            profile,
            warnings,
        });
    }

    let (mut arg, mut val) = (profile[best.0].0, best.1);
    if best.0 == 0 {
        warnings.push(SmoothingWarning::AtLowerBound);
    } else if best.0 == steps {
        warnings.push(SmoothingWarning::AtUpperBound);
    }
    let a = (arg - GRID_STEP).max(lo);
    let b = (arg + GRID_STEP).min(hi);
    let (g_arg, g_val) = golden_max(&eval, a, b, 1e-7)?;
    if g_val > val {
        arg = g_arg;
        val = g_val;
    }

    let cfg = SmoothingConfig {
        variance_ratio: libm::exp(arg),
        selection: Selection::MaxLikelihood,
        sigma_u2: None,
        ..*base
    };
    Ok(SmoothingSelection {
        config: with_sigma(&design, cfg)?,
        loglik: val,
        profile,
        warnings,
    })
}

fn with_sigma(design: &TvarDesign, mut cfg: SmoothingConfig) -> Result<SmoothingConfig> {
    let filt = kalman_filter(design, &cfg, false)?;
    cfg.sigma_u2 = Some(filt.ssr / (design.n() - design.q - 1) as f64);
    Ok(cfg)
}

fn golden_max(
    f: &impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let ratio = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc >= fd { (c, fc) } else { (d, fd) })
}

// ---------------------------------------------------------------------------
// Bands

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandKind {
    /// From the posterior covariance blocks.
    ModelImplied,
    /// Model-implied standard errors rescaled by a Bartlett long-run factor.
    Hac,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientBands {
    pub level: f64,
    pub z: f64,
    pub kind: BandKind,
    /// `n x q` standard errors.
    pub se: Matrix,
    pub lower: Matrix,
    pub upper: Matrix,
}

/// Pointwise normal bands `alpha_{l,t} +/- z se_{l,t}`.
pub fn coefficient_bands(path: &TVARPath, level: f64, kind: BandKind) -> Result<CoefficientBands> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::UnsupportedLevel(level));
    }
    let z = two_sided_z(level);
    let (n, q) = (path.n(), path.order);
    let factors = match kind {
        BandKind::ModelImplied => vec![1.0; q],
        BandKind::Hac => path.hac_factors(None),
    };
    let se = Matrix::from_fn(n, q, |t, l| path.se(t, l) * libm::sqrt(factors[l]));
    let lower = Matrix::from_fn(n, q, |t, l| path.coeff_paths[(t, l)] - z * se[(t, l)]);
    let upper = Matrix::from_fn(n, q, |t, l| path.coeff_paths[(t, l)] + z * se[(t, l)]);
    Ok(CoefficientBands {
        level,
        z,
        kind,
        se,
        lower,
        upper,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::armodel::{fit_ar_values, ArOptions};
    use crate::random::{std_normal, stream_rng};

    fn ar_series(n: usize, alpha: &[f64], sd: f64, seed: u64) -> ReturnSeries {
        let mut rng = stream_rng(seed, 0);
        let mut x = vec![0.0; n + 100];
        for t in 0..x.len() {
            let mut v = 0.003 + sd * std_normal(&mut rng);
            for (l, a) in alpha.iter().enumerate() {
                if t > l {
                    v += a * x[t - l - 1];
                }
            }
            x[t] = v;
        }
        ReturnSeries::from_values(x.split_off(100)).unwrap()
    }

    fn max_diff(a: &Matrix, b: &Matrix) -> f64 {
        let mut d = a.clone();
        d.sub_assign(b);
        d.max_abs()
    }

    /// Builds and solves the full `(1 + n q)` normal equations densely.
    fn dense_oracle(x: &[f64], q: usize, d2: f64, kappa: f64) -> (f64, Matrix) {
        let design = TvarDesign::new(x, q, false).unwrap();
        let n = design.n();
        let k = 1 + n * q;
        let mut a = Matrix::zeros(k, k);
        let mut rhs = vec![0.0; k];
        let idx = |t: usize, l: usize| 1 + t * q + l;
        for t in 0..n {
            let mut row = vec![0.0; k];
            row[0] = 1.0;
            for l in 0..q {
                row[idx(t, l)] = design.z[(t, l)];
            }
            a.add_outer(1.0, &row, &row);
            for i in 0..k {
                rhs[i] += row[i] * design.y[t];
            }
        }
        for t in 1..n {
            for l in 0..q {
                let mut row = vec![0.0; k];
                row[idx(t, l)] = 1.0;
                row[idx(t - 1, l)] = -1.0;
                a.add_outer(1.0 / d2, &row, &row);
            }
        }
        for i in 1..=q {
            a[(i, i)] += 1.0 / kappa;
        }
        let sol = Cholesky::new(&a, "dense").unwrap().solve(&rhs);
        (sol[0], Matrix::from_fn(n, q, |t, l| sol[idx(t, l)]))
    }

    #[test]
    fn stacked_matches_dense_oracle() {
        let r = ar_series(50, &[0.3], 0.05, 1);
        let path = estimate_tvar_stacked(&r, 1, &SmoothingConfig::fixed(1.0)).unwrap();
        let (c, paths) = dense_oracle(r.values(), 1, 1.0, DEFAULT_PRIOR_VARIANCE);
        assert!((path.intercept - c).abs() < 1e-10);
        assert!(max_diff(&path.coeff_paths, &paths) < 1e-10);
    }

    #[test]
    fn stacked_matches_dense_oracle_q3() {
        let r = ar_series(60, &[0.3, -0.1, 0.05], 1.0, 2);
        let path = estimate_tvar_stacked(&r, 3, &SmoothingConfig::fixed(0.05)).unwrap();
        let (c, paths) = dense_oracle(r.values(), 3, 0.05, DEFAULT_PRIOR_VARIANCE);
        assert!((path.intercept - c).abs() < 1e-9);
        assert!(max_diff(&path.coeff_paths, &paths) < 1e-9);
    }

    #[test]
    fn backends_agree() {
        for (seed, q, d2) in [(3, 1, 1.0), (4, 2, 0.01), (5, 3, 1e-4), (6, 2, 0.3)] {
            let r = ar_series(300, &[0.2, 0.1, -0.05][..q], 0.04, seed);
            let cfg = SmoothingConfig::fixed(d2);
            let a = estimate_tvar_stacked(&r, q, &cfg).unwrap();
            let b = estimate_tvar_kalman(&r, q, &cfg).unwrap();
            assert!(
                max_diff(&a.coeff_paths, &b.coeff_paths) < 1e-8,
                "seed {seed}"
            );
            assert!((a.intercept - b.intercept).abs() < 1e-8);
            assert!(
                (a.loglik - b.loglik).abs() < 1e-6 * a.loglik.abs().max(1.0),
                "{} {}",
                a.loglik,
                b.loglik
            );
            assert!((a.sigma_u2 / b.sigma_u2 - 1.0).abs() < 1e-8);
            for t in 0..a.n() {
                let scale = b.cov_blocks[t].max_abs();
                assert!(
                    max_diff(&a.cov_blocks[t], &b.cov_blocks[t]) < 1e-6 * scale,
                    "t = {t}"
                );
            }
        }
    }

    #[test]
    fn penalty_collapse_to_ols() {
        let r = ar_series(400, &[0.4], 0.04, 7);
        let ols = fit_ar_values(r.values(), 1, ArOptions::default()).unwrap();
        let path = estimate_tvar_stacked(&r, 1, &SmoothingConfig::fixed(1e-8)).unwrap();
        for t in 0..path.n() {
            assert!((path.coeff_paths[(t, 0)] - ols.coeffs[0]).abs() < 1e-3);
        }
        // large ratio: observation rows dominate
        let loose = estimate_tvar_stacked(&r, 1, &SmoothingConfig::fixed(1e4)).unwrap();
        let ssr = |e: &[f64]| e.iter().map(|v| v * v).sum::<f64>();
        assert!(ssr(&loose.residuals) < 0.5 * ssr(&ols.residuals));
    }

    #[test]
    fn tiny_ratio_gives_constant_path() {
        let r = ar_series(300, &[0.2, 0.1], 0.04, 8);
        let path = estimate_tvar_kalman(&r, 2, &SmoothingConfig::fixed(1e-12)).unwrap();
        for l in 0..2 {
            let first = path.coeff_paths[(0, l)];
            for t in 0..path.n() {
                assert!((path.coeff_paths[(t, l)] - first).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn stacked_normal_equations_hold() {
        let r = ar_series(200, &[0.2, 0.1], 0.04, 9);
        let cfg = SmoothingConfig::fixed(0.02);
        let path = estimate_tvar_stacked(&r, 2, &cfg).unwrap();
        let design = TvarDesign::new(r.values(), 2, false).unwrap();
        let (n, q) = (design.n(), 2);
        let (w, p) = (1.0 / cfg.variance_ratio, 1.0 / cfg.prior_variance);
        let e = &path.residuals;
        let scale = design.y.iter().map(|v| v.abs()).sum::<f64>();
        // intercept equation
        let g0 = e.iter().sum::<f64>();
        assert!(g0.abs() < 1e-10 * scale);
        for t in 0..n {
            for l in 0..q {
                let a = &path.coeff_paths;
                let mut g = design.z[(t, l)] * e[t];
                if t > 0 {
                    g -= w * (a[(t, l)] - a[(t - 1, l)]);
                }
                if t + 1 < n {
                    g += w * (a[(t + 1, l)] - a[(t, l)]);
                }
                if t == 0 {
                    g -= p * a[(t, l)];
                }
                assert!(g.abs() < 1e-10 * scale, "t {t} l {l}: {g}");
            }
        }
    }

    #[test]
    fn prior_variance_sensitivity() {
        let r = ar_series(300, &[0.2], 0.04, 10);
        let lo = estimate_tvar_kalman(
            &r,
            1,
            &SmoothingConfig {
                prior_variance: 1e4,
                ..SmoothingConfig::fixed(0.01)
            },
        )
        .unwrap();
        let hi = estimate_tvar_kalman(
            &r,
            1,
            &SmoothingConfig {
                prior_variance: 1e8,
                ..SmoothingConfig::fixed(0.01)
            },
        )
        .unwrap();
        for t in 24..lo.n() {
            assert!((lo.coeff_paths[(t, 0)] - hi.coeff_paths[(t, 0)]).abs() < 1e-4);
        }
    }

    #[test]
    fn centred_paths_ignore_level_shifts() {
        let r = ar_series(250, &[0.3, -0.1], 0.04, 11);
        let shifted = r.map(|v| v + 0.37).unwrap();
        let cfg = SmoothingConfig {
            center_regressors: true,
            ..SmoothingConfig::fixed(0.05)
        };
        let a = estimate_tvar_stacked(&r, 2, &cfg).unwrap();
        let b = estimate_tvar_stacked(&shifted, 2, &cfg).unwrap();
        assert!(max_diff(&a.coeff_paths, &b.coeff_paths) < 1e-8);
        assert!((b.intercept - a.intercept - 0.37).abs() < 1e-8);
    }

    #[test]
    fn likelihood_peaks_at_selection() {
        let mut rng = stream_rng(12, 0);
        let mut alpha = 0.2f64;
        let mut x = vec![0.0; 600];
        for t in 1..600 {
            alpha = (alpha + 0.05 * std_normal(&mut rng)).clamp(-0.9, 0.9);
            x[t] = alpha * x[t - 1] + std_normal(&mut rng);
        }
        let sel = select_smoothing_with(&x, 1, &SmoothingConfig::default()).unwrap();
        assert!(sel.warnings.is_empty());
        let design = TvarDesign::new(&x, 1, false).unwrap();
        let best = sel.config.variance_ratio;
        for factor in [0.5, 2.0, 0.1, 10.0] {
            let ll = profile_loglik(&design, &SmoothingConfig::fixed(best * factor)).unwrap();
            assert!(ll < sel.loglik, "factor {factor}");
        }
        assert_eq!(sel.profile.len(), 51);
        assert!(sel.profile.windows(2).all(|w| w[1].0 > w[0].0));
    }

    #[test]
    fn white_noise_hits_lower_bound() {
        // The ML ratio has a point mass at zero, so only most draws land on the
        // bound; the rest sit at a tiny interior maximum.
        let mut at_bound = 0;
        for seed in 0..20 {
            let mut rng = stream_rng(seed, 0);
            let x: Vec<f64> = (0..400).map(|_| std_normal(&mut rng)).collect();
            let sel = select_smoothing_with(&x, 1, &SmoothingConfig::default()).unwrap();
            let again = select_smoothing_with(&x, 1, &SmoothingConfig::default()).unwrap();
            assert_eq!(sel, again);
            if sel.warnings.contains(&SmoothingWarning::AtLowerBound) {
                at_bound += 1;
                assert!(sel.config.variance_ratio < 1e-8);
            }
            assert!(sel.config.variance_ratio < 0.01);
            assert!(sel.loglik - sel.profile[0].1 < 1.92);
        }
        assert!(at_bound >= 10, "{at_bound}");
    }

    #[test]
    fn bands_nest_and_use_normal_quantile() {
        let r = ar_series(200, &[0.2], 0.04, 14);
        let path = estimate_tvar_kalman(&r, 1, &SmoothingConfig::fixed(0.01)).unwrap();
        let b95 = coefficient_bands(&path, 0.95, BandKind::ModelImplied).unwrap();
        let b99 = coefficient_bands(&path, 0.99, BandKind::ModelImplied).unwrap();
        assert!((b95.z - 1.959964).abs() < 1e-6);
        for t in 0..path.n() {
            assert!(
                b99.lower[(t, 0)] <= b95.lower[(t, 0)] && b95.upper[(t, 0)] <= b99.upper[(t, 0)]
            );
        }
        let hac = coefficient_bands(&path, 0.95, BandKind::Hac).unwrap();
        assert!(hac.se.is_finite());
        assert!(matches!(
            coefficient_bands(&path, 1.0, BandKind::ModelImplied),
            Err(Error::UnsupportedLevel(_))
        ));
    }

    #[test]
    fn input_errors() {
        let flat = ReturnSeries::from_values(vec![0.01; 50]).unwrap();
        assert!(matches!(
            estimate_tvar_stacked(&flat, 1, &SmoothingConfig::default()),
            Err(Error::Singular(_))
        ));
        let short = ReturnSeries::from_values(vec![0.01, 0.02, 0.03]).unwrap();
        assert!(matches!(
            estimate_tvar_kalman(&short, 1, &SmoothingConfig::default()),
            Err(Error::TooShort { .. })
        ));
        let r = ar_series(100, &[0.2], 0.04, 15);
        assert!(estimate_tvar_kalman(&r, 1, &SmoothingConfig::fixed(-1.0)).is_err());
    }
}
