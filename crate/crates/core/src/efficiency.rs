//! Impulse responses and long-run multipliers of the period-by-period AR
//! polynomial, and the bootstrap test that every slope path is zero.
//!
//! At each period the smoothed coefficients are frozen and treated as a
//! stationary AR(q). Its MA(infinity) weights follow
//!
//! ```text
//! beta_0 = 1,   beta_k = sum_{j=1..min(k,q)} beta_{k-j} alpha_j
//! ```
//!
//! and their sum is the long-run multiplier `phi = 1 / (1 - sum_j alpha_j)`.
//! An efficient market has every `beta_k = 0` for `k >= 1`, so `phi = 1`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::dist::two_sided_z;
use crate::error::{invalid, Error, Result};
use crate::linalg::{hessenberg_eigenvalues, Eigenvalue, Matrix};
use crate::random::stream_rng;
use crate::series::ReturnSeries;
use crate::tvar::{estimate_tvar, SmoothingConfig, TVARPath, TvarBackend};

/// Default number of impulse-response horizons.
pub const DEFAULT_HORIZONS: usize = 60;

/// Companion matrix with `alpha` in the first row and ones on the
/// subdiagonal.
pub fn companion_matrix(alpha: &[f64]) -> Matrix {
    let q = alpha.len();
    Matrix::from_fn(q, q, |i, j| {
        if i == 0 {
            alpha[j]
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    })
}

pub fn companion_eigenvalues(alpha: &[f64]) -> Result<Vec<Eigenvalue>> {
    hessenberg_eigenvalues(&companion_matrix(alpha)).ok_or(Error::NoConvergence)
}

/// Largest eigenvalue modulus of the companion matrix.
pub fn spectral_radius(alpha: &[f64]) -> Result<f64> {
    Ok(companion_eigenvalues(alpha)?
        .iter()
        .map(Eigenvalue::modulus)
        .fold(0.0, f64::max))
}

pub fn is_stationary(alpha: &[f64]) -> bool {
    spectral_radius(alpha).is_ok_and(|r| r < 1.0)
}

/// Per-period flag: all companion eigenvalues strictly inside the unit
/// circle.
pub fn local_stationarity(path: &TVARPath) -> Vec<bool> {
    (0..path.n())
        .map(|t| is_stationary(path.coeffs_at(t)))
        .collect()
}

/// MA weights `beta_0..=beta_horizons` of a fixed AR polynomial.
pub fn ma_weights(alpha: &[f64], horizons: usize) -> Vec<f64> {
    let q = alpha.len();
    let mut beta = vec![0.0; horizons + 1];
    beta[0] = 1.0;
    for k in 1..=horizons {
        beta[k] = (1..=k.min(q)).map(|j| beta[k - j] * alpha[j - 1]).sum();
    }
    beta
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSurface {
    pub horizons: usize,
    /// `n x (horizons + 1)`; column 0 is identically 1.
    pub values: Matrix,
}

pub fn impulse_surface(path: &TVARPath, horizons: usize) -> Result<ImpulseSurface> {
    if horizons == 0 {
        return Err(invalid("at least one horizon is required"));
    }
    let n = path.n();
    let mut values = Matrix::zeros(n, horizons + 1);
    for t in 0..n {
        for (k, b) in ma_weights(path.coeffs_at(t), horizons)
            .into_iter()
            .enumerate()
        {
            values[(t, k)] = b;
        }
    }
    Ok(ImpulseSurface { horizons, values })
}

/// `1 / (1 - sum alpha)`.
pub fn long_run_multiplier(alpha: &[f64]) -> f64 {
    1.0 / (1.0 - alpha.iter().sum::<f64>())
}

/// Gradient of [`long_run_multiplier`]: every component equals `phi^2`.
pub fn long_run_gradient(alpha: &[f64]) -> Vec<f64> {
    let phi = long_run_multiplier(alpha);
    vec![phi * phi; alpha.len()]
}

/// Delta-method standard error `sqrt(g' C g)` of the long-run multiplier.
pub fn delta_method_se(alpha: &[f64], cov: &Matrix) -> Result<f64> {
    if cov.rows() != alpha.len() || cov.cols() != alpha.len() {
        return Err(invalid(
            "covariance block does not match coefficient vector",
        ));
    }
    if !is_stationary(alpha) {
        return Err(invalid("period is not locally stationary"));
    }
    let g = long_run_gradient(alpha);
    Ok(libm::sqrt(cov.quad_form(&g).max(0.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierBand {
    pub level: f64,
    /// `None` where the period is not locally stationary.
    pub lower: Vec<Option<f64>>,
    pub upper: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyPath {
    /// Long-run multiplier, `None` for periods that are not locally stationary.
    pub phi_inf: Vec<Option<f64>>,
    pub se: Vec<Option<f64>>,
    pub bands: Vec<MultiplierBand>,
    pub locally_stationary: Vec<bool>,
    /// `|phi - 1|`, the distance from the efficient benchmark.
    pub deviation: Vec<Option<f64>>,
    pub spectral_radius: Vec<f64>,
}

pub fn long_run_multipliers(path: &TVARPath) -> EfficiencyPath {
    long_run_multipliers_with_levels(path, &[0.95])
}

pub fn long_run_multipliers_with_levels(path: &TVARPath, levels: &[f64]) -> EfficiencyPath {
    let n = path.n();
    let mut phi_inf = Vec::with_capacity(n);
    let mut se = Vec::with_capacity(n);
    let mut stationary = Vec::with_capacity(n);
    let mut radius = Vec::with_capacity(n);
    for t in 0..n {
        let alpha = path.coeffs_at(t);
        let rho = spectral_radius(alpha).unwrap_or(f64::INFINITY);
        radius.push(rho);
        let ok = rho < 1.0;
        stationary.push(ok);
        if ok {
            phi_inf.push(Some(long_run_multiplier(alpha)));
            se.push(delta_method_se(alpha, &path.cov_blocks[t]).ok());
        } else {
            phi_inf.push(None);
            se.push(None);
        }
    }
    let bands = levels
        .iter()
        .map(|&level| {
            let z = two_sided_z(level);
            let (lower, upper) = phi_inf
                .iter()
                .zip(&se)
                .map(|(p, s)| match (p, s) {
                    (Some(p), Some(s)) => (Some(p - z * s), Some(p + z * s)),
                    _ => (None, None),
                })
                .unzip();
            MultiplierBand {
                level,
                lower,
                upper,
            }
        })
        .collect();
    let deviation = phi_inf.iter().map(|p| p.map(|v| (v - 1.0).abs())).collect();
    EfficiencyPath {
        phi_inf,
        se,
        bands,
        locally_stationary: stationary,
        deviation,
        spectral_radius: radius,
    }
}

// ---------------------------------------------------------------------------
// Bootstrap joint-zero test

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapStatistic {
    /// `sup_t ||alpha_t||`.
    SupNorm,
    /// `mean_t ||alpha_t||`.
    MeanNorm,
}

/// `(sup_t ||alpha_t||, mean_t ||alpha_t||)`.
pub fn path_norms(path: &TVARPath) -> (f64, f64) {
    let n = path.n();
    let mut sup = 0.0f64;
    let mut sum = 0.0;
    for t in 0..n {
        let norm = libm::sqrt(path.coeffs_at(t).iter().map(|a| a * a).sum::<f64>());
        sup = sup.max(norm);
        sum += norm;
    }
    (sup, sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapOptions {
    pub reps: usize,
    pub seed: u64,
    pub statistic: BootstrapStatistic,
    pub backend: TvarBackend,
}

impl BootstrapOptions {
    pub fn new(reps: usize, seed: u64) -> Self {
        Self {
            reps,
            seed,
            statistic: BootstrapStatistic::SupNorm,
            backend: TvarBackend::Kalman,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult {
    /// p-value of the selected statistic.
    pub p_value: f64,
    pub p_value_sup: f64,
    pub p_value_mean: f64,
    pub observed_sup: f64,
    pub observed_mean: f64,
    pub reps: usize,
    pub failed: usize,
    pub statistic: BootstrapStatistic,
}

/// One bootstrap replicate under the i.i.d. null: demeaned returns are
/// resampled with replacement, the mean is added back, and the TV-AR is
/// re-estimated. Returns `(sup norm, mean norm)`. Replicate `index` draws
/// from its own random stream, so replicates can run in any order.
pub fn bootstrap_replicate(
    r: &ReturnSeries,
    q: usize,
    cfg: &SmoothingConfig,
    backend: TvarBackend,
    seed: u64,
    index: u64,
) -> Result<(f64, f64)> {
    let x = r.values();
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let mut rng = stream_rng(seed, index);
    let values: Vec<f64> = (0..n)
        .map(|_| mean + centred[rng.random_range(0..n)])
        .collect();
    let boot = ReturnSeries::new(r.dates().to_vec(), values)?;
    let path = estimate_tvar(&boot, q, &fixed_for_bootstrap(cfg), backend)?;
    Ok(path_norms(&path))
}

fn fixed_for_bootstrap(cfg: &SmoothingConfig) -> SmoothingConfig {
    SmoothingConfig {
        sigma_u2: None,
        ..*cfg
    }
}

/// Combines observed and replicate statistics into the test result.
/// Replicates that failed are passed as `Err` and counted; more than 5%
/// failures aborts.
pub fn bootstrap_p_values(
    observed: (f64, f64),
    replicates: &[Result<(f64, f64)>],
    statistic: BootstrapStatistic,
) -> Result<BootstrapResult> {
    let reps = replicates.len();
    let failed = replicates.iter().filter(|r| r.is_err()).count();
    if failed * 20 > reps {
        return Err(Error::BootstrapFailures { failed, reps });
    }
    let ok: Vec<(f64, f64)> = replicates
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    let used = ok.len();
    let exceed_sup = ok.iter().filter(|s| s.0 >= observed.0).count();
    let exceed_mean = ok.iter().filter(|s| s.1 >= observed.1).count();
    let p_sup = (1 + exceed_sup) as f64 / (used + 1) as f64;
    let p_mean = (1 + exceed_mean) as f64 / (used + 1) as f64;
    Ok(BootstrapResult {
        p_value: match statistic {
            BootstrapStatistic::SupNorm => p_sup,
            BootstrapStatistic::MeanNorm => p_mean,
        },
        p_value_sup: p_sup,
        p_value_mean: p_mean,
        observed_sup: observed.0,
        observed_mean: observed.1,
        reps,
        failed,
        statistic,
    })
}

/// Residual bootstrap of the null that every slope path is zero. `cfg` is
/// held fixed across replicates.
pub fn bootstrap_joint_zero_test(
    r: &ReturnSeries,
    q: usize,
    cfg: &SmoothingConfig,
    opts: &BootstrapOptions,
) -> Result<BootstrapResult> {
    if opts.reps < 99 {
        return Err(invalid("at least 99 bootstrap replicates are required"));
    }
    let observed = path_norms(&estimate_tvar(
        r,
        q,
        &fixed_for_bootstrap(cfg),
        opts.backend,
    )?);
    let replicates: Vec<Result<(f64, f64)>> = (0..opts.reps as u64)
        .map(|i| bootstrap_replicate(r, q, cfg, opts.backend, opts.seed, i))
        .collect();
    bootstrap_p_values(observed, &replicates, opts.statistic)
}
