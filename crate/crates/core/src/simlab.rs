//! Synthetic TV-AR data and the Monte Carlo recovery harness.
//!
//! Series follow
//!
//! ```text
//! x_t = alpha_0 + sum_l alpha_{l,t} x_{t-l} + u_t,     u_t ~ N(0, sigma_u^2)
//! ```
//!
//! with slope paths drawn from one of a few shapes. A burn-in of
//! [`BURN_IN`] periods is simulated and discarded. Every replicate draws from
//! its own random stream, so replicates can run in parallel and aggregate in
//! any order.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;

use crate::armodel::{fit_ar_values, ArOptions};
use crate::critical::quantile;
use crate::efficiency::is_stationary;
use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::random::{std_normal, stream_rng};
use crate::series::ReturnSeries;
use crate::tvar::{
    coefficient_bands, estimate_tvar, select_smoothing_with, BandKind, SmoothingConfig, TvarBackend,
};

pub const BURN_IN: usize = 200;

/// Redraws allowed per period before a random-walk path gives up.
pub const MAX_RETRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    Constant {
        levels: Vec<f64>,
    },
    /// Starts at `start` at the beginning of the burn-in.
    RandomWalk {
        start: Vec<f64>,
    },
    /// `center + amplitude * sin(2 pi t / period)` for every lag.
    Sinusoidal {
        center: Vec<f64>,
        amplitude: Vec<f64>,
        period: f64,
    },
    /// Jumps from `before` to `after` at kept-sample index `at`.
    SingleBreak {
        before: Vec<f64>,
        after: Vec<f64>,
        at: usize,
    },
}

impl PathKind {
    fn width(&self) -> usize {
        match self {
            PathKind::Constant { levels } => levels.len(),
            PathKind::RandomWalk { start } => start.len(),
            PathKind::Sinusoidal { center, .. } => center.len(),
            PathKind::SingleBreak { before, .. } => before.len(),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            PathKind::Constant { .. } => "constant",
            PathKind::RandomWalk { .. } => "random_walk",
            PathKind::Sinusoidal { .. } => "sinusoidal",
            PathKind::SingleBreak { .. } => "single_break",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    /// Length of the kept sample.
    pub t_len: usize,
    pub q: usize,
    pub path: PathKind,
    pub intercept: f64,
    pub sigma_u: f64,
    /// Standard deviation of random-walk increments (ignored by other kinds).
    pub sigma_v: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.path.width() != self.q {
            return Err(invalid("path parameters must have one entry per lag"));
        }
        if self.t_len <= self.q {
            return Err(Error::TooShort {
                needed: self.q + 1,
                got: self.t_len,
            });
        }
        if !(self.sigma_u >= 0.0 && self.sigma_v >= 0.0 && self.intercept.is_finite()) {
            return Err(invalid("noise scales must be non-negative"));
        }
        match &self.path {
            PathKind::Sinusoidal {
                amplitude, period, ..
            } if amplitude.len() != self.q || *period <= 0.0 => Err(invalid(
                "sinusoidal path needs one amplitude per lag and a positive period",
            )),
            PathKind::SingleBreak { after, .. } if after.len() != self.q => {
                Err(invalid("break path needs one post-break level per lag"))
            }
            _ => Ok(()),
        }
    }

    /// Variance ratio `sigma_v^2 / sigma_u^2` of the generating process.
    pub fn true_variance_ratio(&self) -> f64 {
        match self.path {
            PathKind::RandomWalk { .. } if self.sigma_u > 0.0 => {
                (self.sigma_v / self.sigma_u) * (self.sigma_v / self.sigma_u)
            }
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSeries {
    pub returns: ReturnSeries,
    /// True slopes, `t_len x q`; row `t` drives observation `t`.
    pub paths: Matrix,
    pub intercept: f64,
}

impl SyntheticSeries {
    /// True slopes aligned with an estimated path (which starts at
    /// observation `q`).
    pub fn aligned_paths(&self) -> Matrix {
        let q = self.paths.cols();
        let n = self.paths.rows() - q;
        Matrix::from_fn(n, q, |t, l| self.paths[(t + q, l)])
    }
}

pub fn simulate_tvar(spec: &SyntheticSpec) -> Result<SyntheticSeries> {
    simulate_with(spec, &mut stream_rng(spec.seed, 0))
}

fn stable(alpha: &[f64]) -> bool {
    alpha.iter().sum::<f64>().abs() < 1.0 && is_stationary(alpha)
}

fn coefficient_paths(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<Matrix> {
    let q = spec.q;
    let total = BURN_IN + spec.t_len;
    let mut paths = Matrix::zeros(total, q);
    let mut row = vec![0.0; q];
    for s in 0..total {
        // kept-sample index; negative during burn-in
        let t = s as f64 - BURN_IN as f64;
        match &spec.path {
            PathKind::Constant { levels } => row.copy_from_slice(levels),
            PathKind::RandomWalk { start } => {
                if s == 0 {
                    row.copy_from_slice(start);
                } else {
                    let prev: Vec<f64> = paths.row(s - 1).to_vec();
                    let mut tries = 0;
                    loop {
                        for l in 0..q {
                            row[l] = prev[l] + spec.sigma_v * std_normal(rng);
                        }
                        if stable(&row) {
                            break;
                        }
                        tries += 1;
                        if tries == MAX_RETRIES {
                            return Err(Error::StationarityExhausted { period: s });
                        }
                    }
                }
            }
            PathKind::Sinusoidal {
                center,
                amplitude,
                period,
            } => {
                let w = libm::sin(2.0 * core::f64::consts::PI * t / period);
                for l in 0..q {
                    row[l] = center[l] + amplitude[l] * w;
                }
            }
            PathKind::SingleBreak { before, after, at } => {
                row.copy_from_slice(if t >= *at as f64 { after } else { before });
            }
        }
        if !stable(&row) {
            return Err(Error::StationarityExhausted { period: s });
        }
        for l in 0..q {
            paths[(s, l)] = row[l];
        }
    }
    Ok(paths)
}

fn simulate_with(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Result<SyntheticSeries> {
    spec.validate()?;
    let q = spec.q;
    let total = BURN_IN + spec.t_len;
    let paths = coefficient_paths(spec, rng)?;
    let mut x = vec![0.0; total];
    for t in 0..total {
        let mut v = spec.intercept + spec.sigma_u * std_normal(rng);
        for l in 1..=q.min(t) {
            v += paths[(t, l - 1)] * x[t - l];
        }
        x[t] = v;
    }
    let kept = Matrix::from_fn(spec.t_len, q, |t, l| paths[(t + BURN_IN, l)]);
    Ok(SyntheticSeries {
        returns: ReturnSeries::from_values(x.split_off(BURN_IN))?,
        paths: kept,
        intercept: spec.intercept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    /// `None` selects the variance ratio by maximum likelihood.
    pub variance_ratio: Option<f64>,
    pub level: f64,
    pub backend: TvarBackend,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        Self {
            variance_ratio: None,
            level: 0.95,
            backend: TvarBackend::Kalman,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateMetrics {
    pub index: u64,
    /// Root mean squared error of the smoothed slopes over all periods and lags.
    pub rmse: f64,
    /// Same for the full-sample OLS slopes held constant.
    pub ols_rmse: f64,
    /// Share of period-lag cells whose band covers the true slope.
    pub coverage: f64,
    pub variance_ratio: f64,
}

/// One recovery replicate on random stream `index` of `spec.seed`.
pub fn recovery_replicate(
    spec: &SyntheticSpec,
    index: u64,
    opts: &RecoveryOptions,
) -> Result<ReplicateMetrics> {
    let sim = simulate_with(spec, &mut stream_rng(spec.seed, index))?;
    let q = spec.q;
    let x = sim.returns.values();
    let cfg = match opts.variance_ratio {
        Some(d2) => SmoothingConfig::fixed(d2),
        None => select_smoothing_with(x, q, &SmoothingConfig::default())?.config,
    };
    let cfg = SmoothingConfig {
        sigma_u2: None,
        ..cfg
    };
    let path = estimate_tvar(&sim.returns, q, &cfg, opts.backend)?;
    let bands = coefficient_bands(&path, opts.level, BandKind::ModelImplied)?;
    let truth = sim.aligned_paths();
    let ols = fit_ar_values(x, q, ArOptions::default())?;

    let n = path.n();
    let cells = (n * q) as f64;
    let mut sse = 0.0;
    let mut ols_sse = 0.0;
    let mut covered = 0usize;
    for t in 0..n {
        for l in 0..q {
            let a = truth[(t, l)];
            sse += (path.coeff_paths[(t, l)] - a) * (path.coeff_paths[(t, l)] - a);
            ols_sse += (ols.coeffs[l] - a) * (ols.coeffs[l] - a);
            if bands.lower[(t, l)] <= a && a <= bands.upper[(t, l)] {
                covered += 1;
            }
        }
    }
    Ok(ReplicateMetrics {
        index,
        rmse: libm::sqrt(sse / cells),
        ols_rmse: libm::sqrt(ols_sse / cells),
        coverage: covered as f64 / cells,
        variance_ratio: cfg.variance_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Quartiles {
        let mut v = values.to_vec();
        if v.is_empty() {
            return Quartiles {
                q1: f64::NAN,
                median: f64::NAN,
                q3: f64::NAN,
            };
        }
        Quartiles {
            q1: quantile(&mut v, 0.25),
            median: quantile(&mut v, 0.5),
            q3: quantile(&mut v, 0.75),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryReport {
    pub reps: usize,
    pub failures: usize,
    pub rmse: Quartiles,
    pub ols_rmse: Quartiles,
    pub coverage: Quartiles,
    pub mean_coverage: f64,
    pub variance_ratio: Quartiles,
    pub true_variance_ratio: f64,
    /// Successful replicates, sorted by index.
    pub replicates: Vec<ReplicateMetrics>,
}

/// Aggregates replicate outcomes; the result does not depend on their order.
pub fn summarize_recovery(
    spec: &SyntheticSpec,
    outcomes: &[Result<ReplicateMetrics>],
) -> RecoveryReport {
    let mut replicates: Vec<ReplicateMetrics> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok().copied())
        .collect();
    replicates.sort_by_key(|m| m.index);
    let pick = |f: fn(&ReplicateMetrics) -> f64| replicates.iter().map(f).collect::<Vec<f64>>();
    let coverage = pick(|m| m.coverage);
    let mean_coverage = if coverage.is_empty() {
        f64::NAN
    } else {
        coverage.iter().sum::<f64>() / coverage.len() as f64
    };
    RecoveryReport {
        reps: outcomes.len(),
        failures: outcomes.len() - replicates.len(),
        rmse: Quartiles::of(&pick(|m| m.rmse)),
        ols_rmse: Quartiles::of(&pick(|m| m.ols_rmse)),
        coverage: Quartiles::of(&coverage),
        mean_coverage,
        variance_ratio: Quartiles::of(&pick(|m| m.variance_ratio)),
        true_variance_ratio: spec.true_variance_ratio(),
        replicates,
    }
}

pub fn monte_carlo_recovery(
    spec: &SyntheticSpec,
    reps: usize,
    opts: &RecoveryOptions,
) -> Result<RecoveryReport> {
    if reps < 20 {
        return Err(invalid("at least 20 replications are required"));
    }
    spec.validate()?;
    let outcomes: Vec<Result<ReplicateMetrics>> = (0..reps as u64)
        .map(|i| recovery_replicate(spec, i, opts))
        .collect();
    Ok(summarize_recovery(spec, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(path: PathKind, t_len: usize, sigma_u: f64, sigma_v: f64) -> SyntheticSpec {
        let q = path.width();
        SyntheticSpec {
            t_len,
            q,
            path,
            intercept: 0.001,
            sigma_u,
            sigma_v,
            seed: 11,
        }
    }

    #[test]
    fn constant_path_ols_is_consistent() {
        let s = spec(PathKind::Constant { levels: vec![0.4] }, 10_000, 0.04, 0.0);
        let sim = simulate_tvar(&s).unwrap();
        let fit = fit_ar_values(sim.returns.values(), 1, ArOptions::default()).unwrap();
        assert!((fit.coeffs[0] - 0.4).abs() < 0.02, "{}", fit.coeffs[0]);
    }

    #[test]
    fn noise_free_white_noise_is_constant() {
        let s = spec(
            PathKind::Constant {
                levels: vec![0.0, 0.0],
            },
            50,
            0.0,
            0.0,
        );
        let sim = simulate_tvar(&s).unwrap();
        assert!(sim.returns.values().iter().all(|v| *v == 0.001));
    }

    #[test]
    fn deterministic_for_a_seed() {
        let s = spec(
            PathKind::RandomWalk {
                start: vec![0.2, 0.1],
            },
            300,
            0.04,
            0.01,
        );
        let a = simulate_tvar(&s).unwrap();
        let b = simulate_tvar(&s).unwrap();
        assert_eq!(a, b);
        let c = simulate_tvar(&SyntheticSpec { seed: 12, ..s }).unwrap();
        assert_ne!(a.returns.values(), c.returns.values());
    }

    #[test]
    fn random_walk_paths_stay_stationary() {
        let s = spec(
            PathKind::RandomWalk {
                start: vec![0.5, 0.3],
            },
            2000,
            1.0,
            0.08,
        );
        let sim = simulate_tvar(&s).unwrap();
        for t in 0..sim.paths.rows() {
            assert!(stable(sim.paths.row(t)));
        }
    }

    #[test]
    fn shapes_and_breaks() {
        let s = spec(
            PathKind::SingleBreak {
                before: vec![0.1],
                after: vec![0.6],
                at: 100,
            },
            200,
            1.0,
            0.0,
        );
        let sim = simulate_tvar(&s).unwrap();
        assert_eq!(sim.paths[(99, 0)], 0.1);
        assert_eq!(sim.paths[(100, 0)], 0.6);
        assert_eq!(sim.aligned_paths().rows(), 199);

        let s = spec(
            PathKind::Sinusoidal {
                center: vec![0.2],
                amplitude: vec![0.3],
                period: 120.0,
            },
            240,
            1.0,
            0.0,
        );
        let sim = simulate_tvar(&s).unwrap();
        assert!((sim.paths[(30, 0)] - 0.5).abs() < 1e-12);

        let bad = spec(PathKind::Constant { levels: vec![1.2] }, 100, 1.0, 0.0);
        assert!(matches!(
            simulate_tvar(&bad),
            Err(Error::StationarityExhausted { .. })
        ));
        let mismatch = SyntheticSpec {
            q: 2,
            ..spec(PathKind::Constant { levels: vec![0.1] }, 100, 1.0, 0.0)
        };
        assert!(simulate_tvar(&mismatch).is_err());
    }

    #[test]
    fn constant_paths_do_not_overfit() {
        let s = spec(PathKind::Constant { levels: vec![0.3] }, 600, 1.0, 0.0);
        let report = monte_carlo_recovery(&s, 20, &RecoveryOptions::default()).unwrap();
        assert_eq!(report.failures, 0);
        assert!(
            report.rmse.median <= 2.0 * report.ols_rmse.median,
            "{report:?}"
        );
    }

    #[test]
    fn summary_is_order_independent() {
        let s = spec(PathKind::Constant { levels: vec![0.3] }, 300, 1.0, 0.0);
        let opts = RecoveryOptions {
            variance_ratio: Some(1e-4),
            ..Default::default()
        };
        let mut outcomes: Vec<Result<ReplicateMetrics>> =
            (0..20).map(|i| recovery_replicate(&s, i, &opts)).collect();
        let a = summarize_recovery(&s, &outcomes);
        outcomes.reverse();
        outcomes.push(Err(Error::NoConvergence));
        let b = summarize_recovery(&s, &outcomes);
        assert_eq!(a.rmse, b.rmse);
        assert_eq!(a.replicates, b.replicates);
        assert_eq!(b.failures, 1);
    }
}
