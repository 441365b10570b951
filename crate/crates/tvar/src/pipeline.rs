//! End-to-end analysis: load, describe, unit-root test, fixed AR fit and
//! constancy test, TV-AR estimation, multipliers, bootstrap, then write
//! `report.json` and the four CSV tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;
use tvar_core::armodel::{fit_ar_ols, select_order_sbic};
use tvar_core::constancy::hansen_lc;
use tvar_core::critical::quantile;
use tvar_core::efficiency::{
    impulse_surface, long_run_multipliers_with_levels, BootstrapOptions, EfficiencyPath,
    ImpulseSurface,
};
use tvar_core::series::{describe, to_log_returns};
use tvar_core::stationarity::adf_gls;
use tvar_core::tvar::{
    coefficient_bands, estimate_tvar, select_smoothing_with, BandKind, CoefficientBands, Selection,
    SmoothingConfig, TVARPath, TvarBackend,
};
use tvar_core::ReturnSeries;

use crate::annotations::{bundled_events, events_in_range};
use crate::config::{BackendChoice, ConfigError, Delta2, PipelineConfig};
use crate::io::{load_csv, ColumnSpec, LoadError, Loaded};
use crate::parallel;
use crate::report::*;

/// Backends must agree this closely when both run.
pub const BACKEND_TOLERANCE: f64 = 1e-6;

/// Significance level at which a unit-root non-rejection stops the run.
pub const UNIT_ROOT_LEVEL: f64 = 0.05;

pub const OUTPUT_FILES: [&str; 5] = [
    "report.json",
    "descriptive.csv",
    "tvar_coefficients.csv",
    "impulse_surface.csv",
    "efficiency.csv",
];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("ingest: {0}")]
    Load(#[from] LoadError),
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        source: tvar_core::Error,
    },
    #[error(
        "stationarity: ADF-GLS statistic {statistic:.4} does not reject a unit root at 5% \
         (critical value {critical:.4}); rerun with --force to analyse the series anyway"
    )]
    UnitRoot { statistic: f64, critical: f64 },
    #[error("tvar: stacked and Kalman paths differ by {0:e}")]
    BackendMismatch(f64),
    #[error("output: {0}")]
    Io(#[from] std::io::Error),
    #[error("output: {0}")]
    Json(#[from] serde_json::Error),
}

fn stage<T>(name: &'static str, r: tvar_core::Result<T>) -> Result<T, PipelineError> {
    r.map_err(|source| PipelineError::Stage {
        stage: name,
        source,
    })
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Everything computed before writing.
pub struct Analysis {
    pub returns: ReturnSeries,
    pub report: Report,
    pub path: TVARPath,
    pub bands: CoefficientBands,
    pub hac_bands: CoefficientBands,
    pub surface: ImpulseSurface,
    pub efficiency: EfficiencyPath,
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutput, PipelineError> {
    let analysis = analyse(cfg)?;
    let files = write_outputs(&cfg.out, &analysis)?;
    Ok(RunOutput {
        report: analysis.report,
        files,
    })
}

fn max_abs_diff(a: &TVARPath, b: &TVARPath) -> f64 {
    let mut d = a.coeff_paths.clone();
    d.sub_assign(&b.coeff_paths);
    d.max_abs()
}

fn dispersion(path: &TVARPath) -> Dispersion {
    let n = path.n() as f64;
    let mut out = Dispersion {
        path_sd: vec![],
        mean_se: vec![],
        ratio: vec![],
    };
    for l in 0..path.order {
        let col: Vec<f64> = (0..path.n()).map(|t| path.coeff_paths[(t, l)]).collect();
        let mean = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        let se = (0..path.n()).map(|t| path.se(t, l)).sum::<f64>() / n;
        out.path_sd.push(sd);
        out.mean_se.push(se);
        out.ratio.push(sd / se);
    }
    out
}

pub fn analyse(cfg: &PipelineConfig) -> Result<Analysis, PipelineError> {
    cfg.validate()?;
    let columns = ColumnSpec {
        date: cfg.date_col.clone(),
        value: cfg.value_col.clone(),
    };
    let loaded = load_csv(&cfg.input, &columns, cfg.value_kind)?;
    let rows = match &loaded {
        Loaded::Prices(p) => p.len(),
        Loaded::Returns(r) => r.len(),
    };
    let returns = match loaded {
        Loaded::Prices(p) => stage("ingest", to_log_returns(&p))?,
        Loaded::Returns(r) => r,
    };
    let mut warnings = Vec::new();

    let stats = stage("describe", describe(&returns))?;
    let ur = stage(
        "stationarity",
        adf_gls(&returns, cfg.max_lag, cfg.trend.model()),
    )?;
    let rejected = ur
        .reject
        .iter()
        .any(|(l, r)| (*l - UNIT_ROOT_LEVEL).abs() < 1e-12 && *r);
    if !rejected {
        let critical = ur
            .critical_values
            .iter()
            .find(|(l, _)| (*l - UNIT_ROOT_LEVEL).abs() < 1e-12)
            .map_or(f64::NAN, |c| c.1);
        if !cfg.force {
            return Err(PipelineError::UnitRoot {
                statistic: ur.statistic,
                critical,
            });
        }
        warnings.push(format!(
            "WARNING: ADF-GLS does not reject a unit root at 5% (statistic {:.4}, critical value {critical:.4}); \
             results assume stationary returns",
            ur.statistic
        ));
    }

    let order = stage("armodel", select_order_sbic(&returns, cfg.qmax))?;
    let q = order.order;
    let fit = stage("armodel", fit_ar_ols(&returns, q))?;
    let lc = stage("constancy", hansen_lc(&fit))?;

    let base = SmoothingConfig {
        center_regressors: cfg.center_regressors,
        ..SmoothingConfig::default()
    };
    let (smooth_cfg, smoothing) = match cfg.delta2 {
        Delta2::Auto => {
            let sel = stage(
                "smoothing",
                select_smoothing_with(returns.values(), q, &base),
            )?;
            warnings.extend(sel.warnings.iter().map(|w| format!("smoothing: {w:?}")));
            (sel.config, SmoothingBlock::from_selection(&sel))
        }
        Delta2::Fixed(d2) => {
            let c = SmoothingConfig {
                variance_ratio: d2,
                selection: Selection::Fixed,
                ..base
            };
            (
                c,
                SmoothingBlock {
                    mode: "fixed",
                    variance_ratio: d2,
                    sigma_u2: f64::NAN,
                    loglik: f64::NAN,
                    prior_variance: c.prior_variance,
                    warnings: vec![],
                    profile: vec![],
                },
            )
        }
    };
    let est_cfg = SmoothingConfig {
        sigma_u2: None,
        ..smooth_cfg
    };

    let (path, gap) = match cfg.backend {
        BackendChoice::Stacked => (
            stage(
                "tvar",
                estimate_tvar(&returns, q, &est_cfg, TvarBackend::Stacked),
            )?,
            None,
        ),
        BackendChoice::Kalman => (
            stage(
                "tvar",
                estimate_tvar(&returns, q, &est_cfg, TvarBackend::Kalman),
            )?,
            None,
        ),
        BackendChoice::Both => {
            let s = stage(
                "tvar",
                estimate_tvar(&returns, q, &est_cfg, TvarBackend::Stacked),
            )?;
            let k = stage(
                "tvar",
                estimate_tvar(&returns, q, &est_cfg, TvarBackend::Kalman),
            )?;
            let gap = max_abs_diff(&s, &k);
            if !(gap <= BACKEND_TOLERANCE) {
                return Err(PipelineError::BackendMismatch(gap));
            }
            (s, Some(gap))
        }
    };
    let mut smoothing = smoothing;
    if smoothing.mode == "fixed" {
        smoothing.sigma_u2 = path.sigma_u2;
        smoothing.loglik = path.loglik;
    }

    let bands = stage(
        "tvar",
        coefficient_bands(&path, cfg.level, BandKind::ModelImplied),
    )?;
    let hac_bands = stage("tvar", coefficient_bands(&path, cfg.level, BandKind::Hac))?;
    let surface = stage("efficiency", impulse_surface(&path, cfg.horizons))?;
    let efficiency = long_run_multipliers_with_levels(&path, &[cfg.level]);
    let nonstationary = efficiency
        .locally_stationary
        .iter()
        .filter(|s| !**s)
        .count();
    if nonstationary > 0 {
        warnings.push(format!(
            "efficiency: {nonstationary} period(s) not locally stationary; phi left empty there"
        ));
    }

    let bootstrap = if cfg.boot_reps > 0 {
        let opts = BootstrapOptions {
            backend: if cfg.backend == BackendChoice::Stacked {
                TvarBackend::Stacked
            } else {
                TvarBackend::Kalman
            },
            ..BootstrapOptions::new(cfg.boot_reps, cfg.seed)
        };
        let b = stage(
            "bootstrap",
            parallel::bootstrap_joint_zero_test(&returns, q, &est_cfg, &opts),
        )?;
        Some(BootstrapBlock::new(&b, cfg.seed))
    } else {
        None
    };

    let phis: Vec<f64> = efficiency.phi_inf.iter().flatten().copied().collect();
    let devs: Vec<f64> = efficiency.deviation.iter().flatten().copied().collect();
    let summary = |p: f64| (!phis.is_empty()).then(|| quantile(&mut phis.clone(), p));
    let dates = returns.dates();
    let report = Report {
        tool: Tool::current(),
        config: cfg.clone(),
        input: InputSummary {
            rows,
            returns: returns.len(),
            first_date: dates[0].clone(),
            last_date: dates[dates.len() - 1].clone(),
        },
        warnings,
        descriptive: (&stats).into(),
        unit_root: (&ur).into(),
        order_selection: OrderBlock::new(&order, cfg.qmax),
        ar_fit: (&fit).into(),
        constancy: (&lc).into(),
        smoothing,
        tvar: TvarBlock {
            backend: match cfg.backend {
                BackendChoice::Stacked => "stacked",
                BackendChoice::Kalman => "kalman",
                BackendChoice::Both => "both",
            },
            order: q,
            periods: path.n(),
            intercept: path.intercept,
            intercept_se: path.intercept_var.max(0.0).sqrt(),
            sigma_u2: path.sigma_u2,
            loglik: path.loglik,
            center_regressors: cfg.center_regressors,
            backend_max_abs_diff: gap,
            hac_factors: path.hac_factors(None),
            dispersion: dispersion(&path),
        },
        efficiency: EfficiencyBlock {
            horizons: cfg.horizons,
            level: cfg.level,
            stationary_periods: path.n() - nonstationary,
            nonstationary_periods: nonstationary,
            phi_min: phis.iter().copied().reduce(f64::min),
            phi_median: summary(0.5),
            phi_max: phis.iter().copied().reduce(f64::max),
            mean_deviation: (!devs.is_empty())
                .then(|| devs.iter().sum::<f64>() / devs.len() as f64),
        },
        bootstrap,
        annotations: events_in_range(&bundled_events(), &dates[0], &dates[dates.len() - 1]),
        outputs: OUTPUT_FILES.iter().map(|s| (*s).to_owned()).collect(),
    };
    Ok(Analysis {
        returns,
        report,
        path,
        bands,
        hac_bands,
        surface,
        efficiency,
    })
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "NA".to_owned()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_owned(), num)
}

fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), PipelineError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| std::io::Error::other(e.to_string()))?;
    let io = |e: csv::Error| std::io::Error::other(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_outputs(out: &Path, a: &Analysis) -> Result<Vec<PathBuf>, PipelineError> {
    fs::create_dir_all(out)?;
    let r = &a.report;
    let path = &a.path;
    let q = path.order;
    let files: Vec<PathBuf> = OUTPUT_FILES.iter().map(|f| out.join(f)).collect();

    let mut json = serde_json::to_string_pretty(r)?;
    json.push('\n');
    fs::File::create(&files[0])?.write_all(json.as_bytes())?;

    let d = &r.descriptive;
    let u = &r.unit_root;
    write_csv(
        &files[1],
        &[
            "n",
            "mean",
            "sd",
            "min",
            "max",
            "adf_gls",
            "lag",
            "phi_hat",
            "critical_1pct",
            "reject_1pct",
        ]
        .map(String::from),
        std::iter::once(vec![
            d.n.to_string(),
            num(d.mean),
            num(d.sd),
            num(d.min),
            num(d.max),
            num(u.statistic),
            u.lag.to_string(),
            num(u.phi_hat),
            num(u.critical_values["0.01"]),
            u.reject["0.01"].to_string(),
        ]),
    )?;

    let mut header = vec!["date".to_owned()];
    header.extend((1..=q).map(|l| format!("alpha_{l}")));
    header.extend((1..=q).map(|l| format!("se_{l}")));
    header.extend((1..=q).map(|l| format!("hac_se_{l}")));
    write_csv(
        &files[2],
        &header,
        (0..path.n()).map(|t| {
            let mut row = vec![path.dates[t].clone()];
            row.extend((0..q).map(|l| num(path.coeff_paths[(t, l)])));
            row.extend((0..q).map(|l| num(a.bands.se[(t, l)])));
            row.extend((0..q).map(|l| num(a.hac_bands.se[(t, l)])));
            row
        }),
    )?;

    let k = a.surface.horizons;
    write_csv(
        &files[3],
        &["date", "horizon", "beta"].map(String::from),
        (0..path.n()).flat_map(|t| {
            (0..=k).map(move |h| {
                vec![
                    path.dates[t].clone(),
                    h.to_string(),
                    num(a.surface.values[(t, h)]),
                ]
            })
        }),
    )?;

    let e = &a.efficiency;
    let band = &e.bands[0];
    write_csv(
        &files[4],
        &[
            "date",
            "phi",
            "se",
            "lo",
            "hi",
            "stationary_flag",
            "deviation",
        ]
        .map(String::from),
        (0..path.n()).map(|t| {
            vec![
                path.dates[t].clone(),
                opt(e.phi_inf[t]),
                opt(e.se[t]),
                opt(band.lower[t]),
                opt(band.upper[t]),
                u8::from(e.locally_stationary[t]).to_string(),
                opt(e.deviation[t]),
            ]
        }),
    )?;
    Ok(files)
}
