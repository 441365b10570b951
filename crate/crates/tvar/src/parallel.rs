//! Parallel drivers for the replicate-based procedures. Every replicate draws
//! from its own random stream and results are collected in index order, so
//! output does not depend on the number of threads.

use rayon::prelude::*;
use tvar_core::efficiency::{
    bootstrap_p_values, bootstrap_replicate, path_norms, BootstrapOptions, BootstrapResult,
};
use tvar_core::simlab::{
    recovery_replicate, summarize_recovery, RecoveryOptions, RecoveryReport, SyntheticSpec,
};
use tvar_core::tvar::{estimate_tvar, SmoothingConfig};
use tvar_core::{Result, ReturnSeries};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "TVAR_THREADS";

pub fn thread_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs `f` inside a pool sized by [`thread_count`].
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
    {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn bootstrap_joint_zero_test(
    r: &ReturnSeries,
    q: usize,
    cfg: &SmoothingConfig,
    opts: &BootstrapOptions,
) -> Result<BootstrapResult> {
    if opts.reps < 99 {
        return Err(tvar_core::Error::InvalidArgument(
            "at least 99 bootstrap replicates are required".into(),
        ));
    }
    let cfg = SmoothingConfig {
        sigma_u2: None,
        ..*cfg
    };
    let observed = path_norms(&estimate_tvar(r, q, &cfg, opts.backend)?);
    let replicates: Vec<Result<(f64, f64)>> = with_pool(|| {
        (0..opts.reps as u64)
            .into_par_iter()
            .map(|i| bootstrap_replicate(r, q, &cfg, opts.backend, opts.seed, i))
            .collect()
    });
    bootstrap_p_values(observed, &replicates, opts.statistic)
}

pub fn monte_carlo_recovery(
    spec: &SyntheticSpec,
    reps: usize,
    opts: &RecoveryOptions,
) -> Result<RecoveryReport> {
    if reps < 20 {
        return Err(tvar_core::Error::InvalidArgument(
            "at least 20 replications are required".into(),
        ));
    }
    spec.validate()?;
    let outcomes: Vec<_> = with_pool(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|i| recovery_replicate(spec, i, opts))
            .collect()
    });
    Ok(summarize_recovery(spec, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tvar_core::efficiency;
    use tvar_core::random::{std_normal, stream_rng};

    #[test]
    fn parallel_bootstrap_matches_serial() {
        let mut rng = stream_rng(5, 0);
        let x: Vec<f64> = (0..120).map(|_| 0.04 * std_normal(&mut rng)).collect();
        let r = ReturnSeries::from_values(x).unwrap();
        let cfg = SmoothingConfig::fixed(0.01);
        let opts = BootstrapOptions::new(99, 7);
        let par = bootstrap_joint_zero_test(&r, 1, &cfg, &opts).unwrap();
        let ser = efficiency::bootstrap_joint_zero_test(&r, 1, &cfg, &opts).unwrap();
        assert_eq!(par, ser);
    }
}
