//! Regenerates `crates/tvar/data/fixture_prices.csv`, a synthetic monthly
//! price index whose log returns have a prescribed mean, SD, min, max and
//! length.
//!
//! ```text
//! cargo run --release -p tvar --example make_fixture
//! ```
//!
//! Returns come from a TV-AR(1) whose slope follows a slow sinusoid. The smallest
//! and largest draws are then set to the target extremes and the remaining
//! returns are mapped affinely so that the sample mean and SD hit their
//! targets exactly.

use std::fmt::Write as _;
use std::path::PathBuf;

use tvar_core::series::{cumulate_returns, describe_values};
use tvar_core::simlab::{simulate_tvar, PathKind, SyntheticSpec};

const N: usize = 608;
const MEAN: f64 = 0.0033;
const SD: f64 = 0.0439;
const MIN: f64 = -0.2439;
const MAX: f64 = 0.1336;
const FIRST_YEAR: usize = 1961;
const FIRST_MONTH: usize = 10;

fn calibrate(x: &mut [f64]) {
    let n = x.len() as f64;
    let imin = (0..x.len()).min_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
    let imax = (0..x.len()).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap();
    let others: Vec<usize> = (0..x.len()).filter(|&i| i != imin && i != imax).collect();
    let k = others.len() as f64;
    let zbar = others.iter().map(|&i| x[i]).sum::<f64>() / k;
    let szz: f64 = others.iter().map(|&i| (x[i] - zbar) * (x[i] - zbar)).sum();

    let sum = n * MEAN - MIN - MAX;
    let sumsq = (n - 1.0) * SD * SD + n * MEAN * MEAN - MIN * MIN - MAX * MAX;
    let a = sum / k;
    let b = ((sumsq - k * a * a) / szz).sqrt();
    for &i in &others {
        x[i] = a + b * (x[i] - zbar);
        assert!(
            x[i] > MIN && x[i] < MAX,
            "rescaled return escapes the target range"
        );
    }
    x[imin] = MIN;
    x[imax] = MAX;
}

fn month_label(i: usize) -> String {
    let m = FIRST_MONTH - 1 + i;
    format!("{}:{:02}", FIRST_YEAR + m / 12, m % 12 + 1)
}

fn main() {
    let spec = SyntheticSpec {
        t_len: N,
        q: 1,
        path: PathKind::Sinusoidal {
            center: vec![0.3],
            amplitude: vec![0.2],
            period: 300.0,
        },
        intercept: 0.0022,
        sigma_u: 0.04,
        sigma_v: 0.0,
        seed: 1962,
    };
    let sim = simulate_tvar(&spec).expect("fixture simulation");
    let mut x = sim.returns.values().to_vec();
    calibrate(&mut x);

    let prices = cumulate_returns(100.0, &x);
    let mut out = String::from("date,close\n");
    for (i, p) in prices.iter().enumerate() {
        writeln!(out, "{},{p}", month_label(i)).unwrap();
    }
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixture_prices.csv");
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(&path, out).unwrap();

    let d = describe_values(&x).unwrap();
    println!(
        "{}: {} prices, returns mean {:.4} sd {:.4} min {:.4} max {:.4} n {}",
        path.display(),
        prices.len(),
        d.mean,
        d.sd,
        d.min,
        d.max,
        d.n
    );
}
