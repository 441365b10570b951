use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tvar::config::{ConfigError, PipelineConfig};
use tvar::pipeline::run_pipeline;

/// Measure time-varying market efficiency from a price or return series.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    /// Flat `key = value` config file; flags override its settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    date_col: Option<String>,
    #[arg(long)]
    value_col: Option<String>,
    /// Values are price levels (converted to log returns).
    #[arg(long, conflicts_with = "returns")]
    prices: bool,
    /// Values are already returns.
    #[arg(long)]
    returns: bool,
    /// Deterministics for the unit-root test: c or ct.
    #[arg(long)]
    trend: Option<String>,
    /// Maximum ADF-GLS augmentation, or "auto".
    #[arg(long)]
    max_lag: Option<String>,
    #[arg(long)]
    qmax: Option<String>,
    /// Smoothness ratio, or "auto" for maximum likelihood.
    #[arg(long)]
    delta2: Option<String>,
    #[arg(long)]
    horizons: Option<String>,
    /// Bootstrap replications; 0 skips the test.
    #[arg(long)]
    boot_reps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// stacked, kalman or both.
    #[arg(long)]
    backend: Option<String>,
    /// Centre the lagged regressors on the sample mean.
    #[arg(long)]
    center_regressors: bool,
    /// Continue even if the unit-root test does not reject.
    #[arg(long)]
    force: bool,
}

fn resolve(cli: Cli) -> Result<PipelineConfig, ConfigError> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    let text = [
        ("date_col", cli.date_col),
        ("value_col", cli.value_col),
        ("trend", cli.trend),
        ("max_lag", cli.max_lag),
        ("qmax", cli.qmax),
        ("delta2", cli.delta2),
        ("horizons", cli.horizons),
        ("boot_reps", cli.boot_reps),
        ("seed", cli.seed),
        ("level", cli.level),
        ("backend", cli.backend),
    ];
    for (key, value) in text {
        if let Some(v) = value {
            cfg.set(key, &v, None)?;
        }
    }
    if let Some(p) = cli.input {
        cfg.input = p;
    }
    if let Some(p) = cli.out {
        cfg.out = p;
    }
    if cli.prices {
        cfg.set("value_kind", "prices", None)?;
    }
    if cli.returns {
        cfg.set("value_kind", "returns", None)?;
    }
    if cli.center_regressors {
        cfg.center_regressors = true;
    }
    if cli.force {
        cfg.force = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cfg = match resolve(Cli::parse()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: config: {e}");
            return ExitCode::from(2);
        }
    };
    match run_pipeline(&cfg) {
        Ok(out) => {
            for w in &out.report.warnings {
                eprintln!("{w}");
            }
            for f in &out.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
