//! `report.json` document. The shape is pinned by `schema/report.schema.json`.

use std::collections::BTreeMap;

use serde::Serialize;
use tvar_core::armodel::{ArFit, OrderSelection};
use tvar_core::constancy::ConstancyResult;
use tvar_core::efficiency::BootstrapResult;
use tvar_core::stationarity::UnitRootResult;
use tvar_core::tvar::SmoothingSelection;
use tvar_core::DescriptiveStats;

use crate::annotations::Event;
use crate::config::PipelineConfig;

pub const SCHEMA: &str = include_str!("../schema/report.schema.json");

/// `"0.01"`-style keys.
pub fn level_map<T: Copy>(pairs: &[(f64, T)]) -> BTreeMap<String, T> {
    pairs.iter().map(|(l, v)| (format!("{l:.2}"), *v)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: Tool,
    pub config: PipelineConfig,
    pub input: InputSummary,
    pub warnings: Vec<String>,
    pub descriptive: Descriptive,
    pub unit_root: UnitRoot,
    pub order_selection: OrderBlock,
    pub ar_fit: ArBlock,
    pub constancy: ConstancyBlock,
    pub smoothing: SmoothingBlock,
    pub tvar: TvarBlock,
    pub efficiency: EfficiencyBlock,
    pub bootstrap: Option<BootstrapBlock>,
    pub annotations: Vec<Event>,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

impl Tool {
    pub fn current() -> Self {
        Self {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputSummary {
    pub rows: usize,
    pub returns: usize,
    pub first_date: String,
    pub last_date: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Descriptive {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl From<&DescriptiveStats> for Descriptive {
    fn from(d: &DescriptiveStats) -> Self {
        Self {
            mean: d.mean,
            sd: d.sd,
            min: d.min,
            max: d.max,
            n: d.n,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitRoot {
    pub statistic: f64,
    pub lag: usize,
    pub max_lag: usize,
    pub phi_hat: f64,
    pub df_slope: f64,
    pub trend: &'static str,
    pub criterion: &'static str,
    pub c_bar: f64,
    pub n_obs: usize,
    pub critical_values: BTreeMap<String, f64>,
    pub reject: BTreeMap<String, bool>,
}

impl From<&UnitRootResult> for UnitRoot {
    fn from(u: &UnitRootResult) -> Self {
        Self {
            statistic: u.statistic,
            lag: u.lag,
            max_lag: u.max_lag,
            phi_hat: u.phi_hat,
            df_slope: u.df_slope,
            trend: u.trend_model.code(),
            criterion: match u.criterion {
                tvar_core::stationarity::LagCriterion::Mbic => "mbic",
                tvar_core::stationarity::LagCriterion::Maic => "maic",
            },
            c_bar: u.c_bar,
            n_obs: u.n_obs,
            critical_values: level_map(&u.critical_values),
            reject: level_map(&u.reject),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderBlock {
    pub selected: usize,
    pub qmax: usize,
    pub n_common: usize,
    pub sbic: Vec<(usize, f64)>,
}

impl OrderBlock {
    pub fn new(sel: &OrderSelection, qmax: usize) -> Self {
        Self {
            selected: sel.order,
            qmax,
            n_common: sel.n_common,
            sbic: sel.criteria.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArBlock {
    pub order: usize,
    pub intercept: f64,
    pub coeffs: Vec<f64>,
    /// Intercept first, then the slopes.
    pub ols_se: Vec<f64>,
    pub hac_se: Vec<f64>,
    pub bandwidth: usize,
    pub sigma2: f64,
    pub r2: f64,
    pub r2_adj: f64,
    pub sbic: f64,
    pub n_used: usize,
}

impl From<&ArFit> for ArBlock {
    fn from(f: &ArFit) -> Self {
        Self {
            order: f.order,
            intercept: f.intercept,
            coeffs: f.coeffs.clone(),
            ols_se: f.ols_se(),
            hac_se: f.hac_se.clone(),
            bandwidth: f.bandwidth,
            sigma2: f.sigma2,
            r2: f.r2,
            r2_adj: f.r2_adj,
            sbic: f.sbic,
            n_used: f.n_used,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstancyBlock {
    pub lc_joint: f64,
    pub lc_individual: Vec<f64>,
    pub m: usize,
    pub include_variance: bool,
    pub critical_values: BTreeMap<String, f64>,
    pub reject: BTreeMap<String, bool>,
}

impl From<&ConstancyResult> for ConstancyBlock {
    fn from(c: &ConstancyResult) -> Self {
        Self {
            lc_joint: c.lc_joint,
            lc_individual: c.lc_individual.clone(),
            m: c.m,
            include_variance: c.include_variance,
            critical_values: level_map(&c.critical_values),
            reject: level_map(&c.reject),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfilePoint {
    pub ln_delta2: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothingBlock {
    pub mode: &'static str,
    pub variance_ratio: f64,
    pub sigma_u2: f64,
    pub loglik: f64,
    pub prior_variance: f64,
    pub warnings: Vec<String>,
    pub profile: Vec<ProfilePoint>,
}

impl SmoothingBlock {
    pub fn from_selection(sel: &SmoothingSelection) -> Self {
        Self {
            mode: "max_likelihood",
            variance_ratio: sel.config.variance_ratio,
            sigma_u2: sel.config.sigma_u2.unwrap_or(f64::NAN),
            loglik: sel.loglik,
            prior_variance: sel.config.prior_variance,
            warnings: sel.warnings.iter().map(|w| format!("{w:?}")).collect(),
            profile: sel
                .profile
                .iter()
                .map(|(g, l)| ProfilePoint {
                    ln_delta2: *g,
                    loglik: *l,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Dispersion {
    /// Standard deviation of the path across periods, per lag.
    pub path_sd: Vec<f64>,
    /// Mean per-period standard error, per lag.
    pub mean_se: Vec<f64>,
    /// `path_sd / mean_se`; above 3 the path moves well beyond its own noise.
    pub ratio: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TvarBlock {
    pub backend: &'static str,
    pub order: usize,
    pub periods: usize,
    pub intercept: f64,
    pub intercept_se: f64,
    pub sigma_u2: f64,
    pub loglik: f64,
    pub center_regressors: bool,
    /// Largest elementwise gap between the two backends, when both ran.
    pub backend_max_abs_diff: Option<f64>,
    pub hac_factors: Vec<f64>,
    pub dispersion: Dispersion,
}

#[derive(Debug, Clone, Serialize)]
pub struct EfficiencyBlock {
    pub horizons: usize,
    pub level: f64,
    pub stationary_periods: usize,
    pub nonstationary_periods: usize,
    pub phi_min: Option<f64>,
    pub phi_median: Option<f64>,
    pub phi_max: Option<f64>,
    pub mean_deviation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapBlock {
    pub statistic: &'static str,
    pub reps: usize,
    pub failed: usize,
    pub seed: u64,
    pub p_value: f64,
    pub p_value_sup: f64,
    pub p_value_mean: f64,
    pub observed_sup: f64,
    pub observed_mean: f64,
}

impl BootstrapBlock {
    pub fn new(b: &BootstrapResult, seed: u64) -> Self {
        Self {
            statistic: match b.statistic {
                tvar_core::efficiency::BootstrapStatistic::SupNorm => "sup_norm",
                tvar_core::efficiency::BootstrapStatistic::MeanNorm => "mean_norm",
            },
            reps: b.reps,
            failed: b.failed,
            seed,
            p_value: b.p_value,
            p_value_sup: b.p_value_sup,
            p_value_mean: b.p_value_mean,
            observed_sup: b.observed_sup,
            observed_mean: b.observed_mean,
        }
    }
}
