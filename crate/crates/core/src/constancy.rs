//! Hansen's L_c test of parameter constancy against martingale parameter
//! variation, computed from the cumulative first-order-condition scores of
//! an OLS AR fit.
//!
//! Scores are `f_it = x_it e_t` for each regression coefficient and
//! `e_t^2 - sigma^2` (with `sigma^2 = RSS / n`) for the error variance. With
//! `S_t = sum_{j<=t} f_j` and `V = sum_t f_t f_t'`,
//!
//! ```text
//! L_c = (1/n) sum_t S_t' V^{-1} S_t,       L_i = (1/(n V_ii)) sum_t S_it^2.
//! ```

use alloc::vec::Vec;

use crate::armodel::{bartlett_long_run, ArFit};
use crate::critical::{self, LEVELS};
use crate::error::{invalid, Error, Result};
use crate::linalg::{Cholesky, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreCovariance {
    /// `V = sum_t f_t f_t'`.
    OuterProduct,
    /// Bartlett-weighted long-run version of `V`.
    Bartlett { bandwidth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstancyOptions {
    /// Include the error-variance score in the joint statistic.
    pub include_variance: bool,
    pub covariance: ScoreCovariance,
}

impl Default for ConstancyOptions {
    fn default() -> Self {
        Self {
            include_variance: true,
            covariance: ScoreCovariance::OuterProduct,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstancyResult {
    pub lc_joint: f64,
    /// Coefficients `alpha_0..alpha_q`, then the variance if included.
    pub lc_individual: Vec<f64>,
    pub m: usize,
    pub include_variance: bool,
    pub critical_values: Vec<(f64, f64)>,
    pub reject: Vec<(f64, bool)>,
}

/// Score matrix `n x m`, one row per observation.
pub fn constancy_scores(fit: &ArFit, include_variance: bool) -> Matrix {
    let n = fit.n_used;
    let k = fit.design.cols();
    let sigma2 = fit.residuals.iter().map(|e| e * e).sum::<f64>() / n as f64;
    let m = k + usize::from(include_variance);
    Matrix::from_fn(n, m, |t, i| {
        let e = fit.residuals[t];
        if i < k {
            fit.design[(t, i)] * e
        } else {
            e * e - sigma2
        }
    })
}

pub fn hansen_lc(fit: &ArFit) -> Result<ConstancyResult> {
    hansen_lc_with(fit, &ConstancyOptions::default())
}

pub fn hansen_lc_with(fit: &ArFit, opts: &ConstancyOptions) -> Result<ConstancyResult> {
    let n = fit.n_used;
    let q = fit.order;
    if n < 10 * (q + 2) {
        return Err(Error::TooShort {
            needed: 10 * (q + 2),
            got: n,
        });
    }
    let f = constancy_scores(fit, opts.include_variance);
    let m = f.cols();

    let mut cum = Matrix::zeros(n, m);
    let mut running = alloc::vec![0.0; m];
    for t in 0..n {
        for i in 0..m {
            running[i] += f[(t, i)];
            cum[(t, i)] = running[i];
        }
    }

    // OLS orthogonality: full-sample coefficient scores must vanish.
    for i in 0..fit.design.cols() {
        let scale: f64 = (0..n)
            .map(|t| f[(t, i)].abs())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        if running[i].abs() > 1e-8 * scale {
            return Err(invalid("residuals are not OLS residuals of the design"));
        }
    }

    let v = match opts.covariance {
        ScoreCovariance::OuterProduct => f.transpose().matmul(&f),
        ScoreCovariance::Bartlett { bandwidth } => bartlett_long_run(&f, bandwidth),
    };
    let chol = Cholesky::new(&v, "score covariance V")?;

    let mut joint = 0.0;
    let mut st = alloc::vec![0.0; m];
    for t in 0..n {
        st.copy_from_slice(cum.row(t));
        chol.forward(&mut st);
        joint += st.iter().map(|x| x * x).sum::<f64>();
    }
    let lc_joint = joint / n as f64;
    let lc_individual = (0..m)
        .map(|i| (0..n).map(|t| cum[(t, i)] * cum[(t, i)]).sum::<f64>() / (n as f64 * v[(i, i)]))
        .collect();

    let mut critical_values = Vec::new();
    let mut reject = Vec::new();
    for level in LEVELS {
        let cv = lc_critical_value(m, level)?;
        critical_values.push((level, cv));
        reject.push((level, lc_joint > cv));
    }

    Ok(ConstancyResult {
        lc_joint,
        lc_individual,
        m,
        include_variance: opts.include_variance,
        critical_values,
        reject,
    })
}

/// Asymptotic upper-tail critical value for `m` jointly tested parameters.
pub fn lc_critical_value(m: usize, level: f64) -> Result<f64> {
    if m == 0 || m > critical::LC_MAX_M {
        return Err(Error::UnsupportedM(m));
    }
    critical::lc_table()?.lookup(m, level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::armodel::{fit_ar_values, ArOptions};
    use crate::random::{std_normal, stream_rng};
    use alloc::vec;
    use approx::assert_relative_eq;

    fn ar1(n: usize, a: f64, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        let mut x = vec![0.0; n];
        for t in 1..n {
            x[t] = 0.002 + a * x[t - 1] + 0.04 * std_normal(&mut rng);
        }
        x
    }

    #[test]
    fn matches_explicit_double_loop() {
        let x = [
            0.3, -0.1, 0.5, 0.2, -0.4, 0.1, 0.6, -0.2, 0.0, 0.35, -0.15, 0.25, 0.05, -0.3, 0.4,
            0.1, -0.05, 0.2, 0.15, -0.25, 0.3, 0.0, 0.1, -0.1, 0.2, 0.45, -0.35, 0.05, 0.12, -0.08,
            0.22, 0.3,
        ];
        let fit = fit_ar_values(&x, 1, ArOptions::default()).unwrap();
        let res = hansen_lc(&fit).unwrap();

        // Oracle: build scores, V and its inverse by hand, then loop.
        let n = fit.n_used;
        let s2: f64 = fit.residuals.iter().map(|e| e * e).sum::<f64>() / n as f64;
        let mut f = vec![[0.0f64; 3]; n];
        for t in 0..n {
            let e = fit.residuals[t];
            f[t] = [e, x[t] * e, e * e - s2];
        }
        let mut v = [[0.0f64; 3]; 3];
        for row in &f {
            for i in 0..3 {
                for j in 0..3 {
                    v[i][j] += row[i] * row[j];
                }
            }
        }
        let inv = invert3(v);
        let mut s = [0.0f64; 3];
        let mut total = 0.0;
        for row in &f {
            for i in 0..3 {
                s[i] += row[i];
            }
            for i in 0..3 {
                for j in 0..3 {
                    total += s[i] * inv[i][j] * s[j];
                }
            }
        }
        assert_relative_eq!(res.lc_joint, total / n as f64, max_relative = 1e-12);
        assert_eq!(res.m, 3);
    }

    fn invert3(a: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        let mut inv = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let (r0, r1) = match j {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let (c0, c1) = match i {
                    0 => (1, 2),
                    1 => (0, 2),
                    _ => (0, 1),
                };
                let minor = a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                inv[i][j] = sign * minor / det;
            }
        }
        inv
    }

    #[test]
    fn scale_invariance() {
        let x = ar1(400, 0.3, 4);
        let scaled: Vec<f64> = x.iter().map(|v| -37.0 * v).collect();
        let a = hansen_lc(&fit_ar_values(&x, 2, ArOptions::default()).unwrap()).unwrap();
        let b = hansen_lc(&fit_ar_values(&scaled, 2, ArOptions::default()).unwrap()).unwrap();
        assert!((a.lc_joint - b.lc_joint).abs() < 1e-8);
        for (u, v) in a.lc_individual.iter().zip(&b.lc_individual) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn coefficient_only_variant_and_robust_v() {
        let x = ar1(300, 0.3, 8);
        let fit = fit_ar_values(&x, 1, ArOptions::default()).unwrap();
        let coef_only = hansen_lc_with(
            &fit,
            &ConstancyOptions {
                include_variance: false,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(coef_only.m, 2);
        assert_eq!(coef_only.lc_individual.len(), 2);
        let robust = hansen_lc_with(
            &fit,
            &ConstancyOptions {
                covariance: ScoreCovariance::Bartlett { bandwidth: 4 },
                ..Default::default()
            },
        )
        .unwrap();
        assert!(robust.lc_joint >= 0.0 && robust.lc_individual.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn detects_a_break() {
        let mut x = ar1(600, 0.0, 2);
        let mut rng = stream_rng(99, 0);
        for t in 300..600 {
            x[t] = 0.002 + 0.8 * x[t - 1] + 0.04 * std_normal(&mut rng);
        }
        let res = hansen_lc(&fit_ar_values(&x, 1, ArOptions::default()).unwrap()).unwrap();
        assert!(
            res.reject.iter().find(|r| r.0 == 0.01).unwrap().1,
            "L_c = {}",
            res.lc_joint
        );
    }

    #[test]
    fn foreign_residuals_are_refused() {
        let x = ar1(200, 0.3, 3);
        let mut fit = fit_ar_values(&x, 1, ArOptions::default()).unwrap();
        fit.residuals.iter_mut().for_each(|e| *e += 0.01);
        assert!(hansen_lc(&fit).is_err());
    }

    #[test]
    fn critical_value_contract() {
        let v = lc_critical_value(1, 0.05).unwrap();
        assert!(v > 0.4 && v < 0.5);
        assert!(matches!(
            lc_critical_value(25, 0.05),
            Err(Error::UnsupportedM(25))
        ));
        assert!(matches!(
            lc_critical_value(3, 0.2),
            Err(Error::UnsupportedLevel(_))
        ));
    }
}
