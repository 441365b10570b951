use proptest::prelude::*;

use tvar_core::efficiency::{
    companion_matrix, delta_method_se, impulse_surface, is_stationary, long_run_gradient,
    long_run_multiplier, long_run_multipliers, ma_weights, spectral_radius,
};
use tvar_core::linalg::Matrix;
use tvar_core::random::{std_normal, stream_rng};
use tvar_core::simlab::{simulate_tvar, PathKind, SyntheticSpec};
use tvar_core::tvar::{estimate_tvar_kalman, estimate_tvar_stacked, SmoothingConfig};
use tvar_core::ReturnSeries;

fn noise_series(n: usize, seed: u64, scale: f64) -> ReturnSeries {
    let mut rng = stream_rng(seed, 0);
    let mut x = vec![0.0; n];
    for t in 0..n {
        x[t] = scale * std_normal(&mut rng) + if t > 0 { 0.25 * x[t - 1] } else { 0.0 };
    }
    ReturnSeries::from_values(x).unwrap()
}

fn stationary_alpha() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.6f64..0.6, 1..=4).prop_filter("stationary", |a| {
        spectral_radius(a).is_ok_and(|r| r < 0.95) && (1.0 - a.iter().sum::<f64>()).abs() > 0.05
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn stacked_equals_kalman(n in 60usize..300, q in 1usize..=3, ln_d2 in -9.2f64..0.0, seed in 0u64..1000) {
        let r = noise_series(n, seed, 0.05);
        let cfg = SmoothingConfig::fixed(ln_d2.exp());
        let a = estimate_tvar_stacked(&r, q, &cfg).unwrap();
        let b = estimate_tvar_kalman(&r, q, &cfg).unwrap();
        for t in 0..a.n() {
            for l in 0..q {
                prop_assert!((a.coeff_paths[(t, l)] - b.coeff_paths[(t, l)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn centred_multipliers_ignore_shifts(seed in 0u64..1000, c in -1.0f64..1.0) {
        let r = noise_series(150, seed, 0.05);
        let shifted = r.map(|v| v + c).unwrap();
        let cfg = SmoothingConfig { center_regressors: true, ..SmoothingConfig::fixed(0.05) };
        let a = long_run_multipliers(&estimate_tvar_stacked(&r, 2, &cfg).unwrap());
        let b = long_run_multipliers(&estimate_tvar_stacked(&shifted, 2, &cfg).unwrap());
        for (u, v) in a.phi_inf.iter().zip(&b.phi_inf) {
            match (u, v) {
                (Some(u), Some(v)) => prop_assert!((u - v).abs() < 1e-8),
                (None, None) => {}
                _ => prop_assert!(false, "stationarity flag changed"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn impulse_matches_companion_powers(alpha in stationary_alpha()) {
        let c = companion_matrix(&alpha);
        let beta = ma_weights(&alpha, 40);
        let mut power = Matrix::identity(alpha.len());
        for b in beta {
            prop_assert!((b - power[(0, 0)]).abs() < 1e-10);
            power = power.matmul(&c);
        }
    }

    #[test]
    fn multiplier_is_series_sum(alpha in stationary_alpha()) {
        let rho = spectral_radius(&alpha).unwrap();
        prop_assume!(rho < 0.9);
        let sum: f64 = ma_weights(&alpha, 200).iter().sum();
        prop_assert!((sum - long_run_multiplier(&alpha)).abs() < 1e-6);
    }

    #[test]
    fn partial_sums_converge(alpha in stationary_alpha()) {
        // Complex roots make the error oscillate, so compare its envelope
        // over windows starting at K = 50, 100, 200.
        let phi = long_run_multiplier(&alpha);
        let beta = ma_weights(&alpha, 250);
        let mut partial = 0.0;
        let err: Vec<f64> = beta.iter().map(|b| { partial += b; (partial - phi).abs() }).collect();
        let envelope = |k: usize| err[k..k + 50].iter().cloned().fold(0.0, f64::max);
        prop_assert!(envelope(200) <= envelope(100) + 1e-12);
        prop_assert!(envelope(100) <= envelope(50) + 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences(alpha in stationary_alpha()) {
        let g = long_run_gradient(&alpha);
        let h = 1e-6;
        for j in 0..alpha.len() {
            let mut up = alpha.clone();
            let mut down = alpha.clone();
            up[j] += h;
            down[j] -= h;
            let fd = (long_run_multiplier(&up) - long_run_multiplier(&down)) / (2.0 * h);
            prop_assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs());
        }
    }

    #[test]
    fn delta_se_vanishes_without_uncertainty(alpha in stationary_alpha()) {
        let q = alpha.len();
        prop_assert_eq!(delta_method_se(&alpha, &Matrix::zeros(q, q)).unwrap(), 0.0);
        prop_assert!(delta_method_se(&alpha, &Matrix::identity(q)).unwrap() > 0.0);
    }
}

#[test]
fn nonstationary_partial_sums_diverge() {
    let alpha = [0.6, 0.5];
    assert!(!is_stationary(&alpha));
    let beta = ma_weights(&alpha, 200);
    let sum = |k: usize| beta[..=k].iter().sum::<f64>();
    assert!(sum(200) > 100.0 * sum(100).abs());
}

#[test]
fn surface_on_estimated_paths() {
    let r = noise_series(300, 3, 0.05);
    let path = estimate_tvar_kalman(&r, 2, &SmoothingConfig::fixed(0.01)).unwrap();
    let surface = impulse_surface(&path, 200).unwrap();
    let eff = long_run_multipliers(&path);
    for t in 0..path.n() {
        assert_eq!(surface.values[(t, 0)], 1.0);
        let alpha = path.coeffs_at(t);
        assert_eq!(eff.locally_stationary[t], is_stationary(alpha));
        if spectral_radius(alpha).unwrap() < 0.9 {
            let sum: f64 = surface.values.row(t).iter().sum();
            assert!((sum - eff.phi_inf[t].unwrap()).abs() < 1e-6);
            assert!(eff.se[t].unwrap() >= 0.0);
        }
    }
}

#[test]
fn constant_spec_passes_constancy_at_nominal_size() {
    use tvar_core::armodel::{fit_ar_values, ArOptions};
    use tvar_core::constancy::hansen_lc;
    let mut rejections = 0;
    let reps = 200;
    for seed in 0..reps {
        let spec = SyntheticSpec {
            t_len: 400,
            q: 1,
            path: PathKind::Constant { levels: vec![0.3] },
            intercept: 0.0,
            sigma_u: 1.0,
            sigma_v: 0.0,
            seed,
        };
        let sim = simulate_tvar(&spec).unwrap();
        let res = hansen_lc(&fit_ar_values(sim.returns.values(), 1, ArOptions::default()).unwrap())
            .unwrap();
        if res.reject.iter().any(|(l, r)| *l == 0.05 && *r) {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    assert!((0.01..=0.10).contains(&rate), "rejection rate {rate}");
}
