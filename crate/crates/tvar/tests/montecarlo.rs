use std::time::Instant;

use tvar::parallel::monte_carlo_recovery;
use tvar_core::simlab::{PathKind, RecoveryOptions, SyntheticSpec};

fn rw_spec(t_len: usize, variance_ratio: f64, seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        t_len,
        q: 1,
        path: PathKind::RandomWalk { start: vec![0.3] },
        intercept: 0.002,
        sigma_u: 0.04,
        sigma_v: 0.04 * variance_ratio.sqrt(),
        seed,
    }
}

#[test]
fn rmse_does_not_grow_with_sample_length() {
    let opts = RecoveryOptions::default();
    let medians: Vec<(usize, f64)> = [200, 600, 2000]
        .into_iter()
        .map(|t| (t, monte_carlo_recovery(&rw_spec(t, 0.0025, 31), 50, &opts).unwrap().rmse.median))
        .collect();
    for w in medians.windows(2) {
        assert!(w[1].1 <= 1.1 * w[0].1, "{medians:?}");
    }
}

#[test]
fn selected_ratio_tracks_the_truth() {
    let report = monte_carlo_recovery(&rw_spec(600, 0.05, 32), 100, &RecoveryOptions::default()).unwrap();
    let median = report.variance_ratio.median;
    assert!((0.01..=0.25).contains(&median), "median selected ratio {median}");
    assert_eq!(report.failures, 0);
}

#[test]
fn smoke_run_fits_the_budget() {
    let start = Instant::now();
    let report = monte_carlo_recovery(&rw_spec(600, 0.0025, 33), 20, &RecoveryOptions::default()).unwrap();
    assert_eq!(report.replicates.len(), 20);
    assert!(start.elapsed().as_secs_f64() < 60.0);
}
