//! Pipeline configuration: defaults, then a flat `key = value` file, then
//! command-line flags. Later sources win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use tvar_core::stationarity::TrendModel;

use crate::io::ValueKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum Delta2 {
    Auto,
    Fixed(f64),
}

impl FromStr for Delta2 {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(Self::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Self::Fixed(v)),
            _ => Err(format!(
                "delta2 must be \"auto\" or a positive number, got {s:?}"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    Stacked,
    Kalman,
    Both,
}

impl FromStr for BackendChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "stacked" => Ok(Self::Stacked),
            "kalman" => Ok(Self::Kalman),
            "both" => Ok(Self::Both),
            _ => Err(format!(
                "backend must be stacked, kalman or both, got {s:?}"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    C,
    Ct,
}

impl Trend {
    pub fn model(self) -> TrendModel {
        match self {
            Trend::C => TrendModel::Constant,
            Trend::Ct => TrendModel::ConstantTrend,
        }
    }
}

impl FromStr for Trend {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "c" => Ok(Self::C),
            "ct" => Ok(Self::Ct),
            _ => Err(format!("trend must be c or ct, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub date_col: String,
    pub value_col: String,
    pub value_kind: ValueKind,
    pub trend: Trend,
    /// ADF-GLS maximum augmentation; `None` uses the Schwert rule.
    pub max_lag: Option<usize>,
    pub qmax: usize,
    pub delta2: Delta2,
    pub horizons: usize,
    /// 0 skips the bootstrap test.
    pub boot_reps: usize,
    pub seed: u64,
    pub level: f64,
    pub out: PathBuf,
    pub backend: BackendChoice,
    pub center_regressors: bool,
    pub force: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::new(),
            date_col: "date".into(),
            value_col: "close".into(),
            value_kind: ValueKind::Prices,
            trend: Trend::Ct,
            max_lag: None,
            qmax: 6,
            delta2: Delta2::Auto,
            horizons: 60,
            boot_reps: 999,
            seed: 42,
            level: 0.95,
            out: PathBuf::from("tvar-out"),
            backend: BackendChoice::Both,
            center_regressors: false,
            force: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError(format!("invalid value {v:?} for {key}")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError(format!("invalid boolean {v:?} for {key}"))),
    }
}

/// Parses `key = value` lines. `#` starts a comment; keys accept `-` or `_`.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if map.insert(key.clone(), v.trim().to_owned()).is_some() {
            return Err(ConfigError(format!("line {}: duplicate key {key}", i + 1)));
        }
    }
    Ok(map)
}

impl PipelineConfig {
    /// Applies one setting. Relative paths are resolved against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), ConfigError> {
        let path = |v: &str| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        };
        match key {
            "input" => self.input = path(value),
            "date_col" => self.date_col = value.to_owned(),
            "value_col" => self.value_col = value.to_owned(),
            "value_kind" => {
                self.value_kind = ValueKind::parse(value).ok_or_else(|| {
                    ConfigError(format!(
                        "value_kind must be prices or returns, got {value:?}"
                    ))
                })?
            }
            "trend" => self.trend = value.parse().map_err(ConfigError)?,
            "max_lag" => {
                self.max_lag = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "qmax" => self.qmax = parse(key, value)?,
            "delta2" => self.delta2 = value.parse().map_err(ConfigError)?,
            "horizons" => self.horizons = parse(key, value)?,
            "boot_reps" => self.boot_reps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "level" => self.level = parse(key, value)?,
            "out" => self.out = path(value),
            "backend" => self.backend = value.parse().map_err(ConfigError)?,
            "center_regressors" => self.center_regressors = parse_bool(key, value)?,
            "force" => self.force = parse_bool(key, value)?,
            _ => return Err(ConfigError(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty());
        for (k, v) in parse_flat(&text)? {
            self.set(&k, &v, base)?;
        }
        Ok(())
    }

    /// Checks everything that can be checked before touching the data.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.input.as_os_str().is_empty() {
            return Err(ConfigError("no input file given".into()));
        }
        if !self.input.is_file() {
            return Err(ConfigError(format!(
                "input file {} does not exist",
                self.input.display()
            )));
        }
        if self.qmax == 0 {
            return Err(ConfigError("qmax must be at least 1".into()));
        }
        if self.horizons == 0 {
            return Err(ConfigError("horizons must be at least 1".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(ConfigError(format!(
                "level must lie in (0, 1), got {}",
                self.level
            )));
        }
        if self.boot_reps != 0 && self.boot_reps < 99 {
            return Err(ConfigError(
                "boot_reps must be 0 (skip) or at least 99".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_file_round() {
        let map =
            parse_flat("# comment\ninput = a.csv\nboot-reps = 199  # trailing\n\nbackend=kalman\n")
                .unwrap();
        assert_eq!(map["input"], "a.csv");
        assert_eq!(map["boot_reps"], "199");
        let mut cfg = PipelineConfig::default();
        for (k, v) in &map {
            cfg.set(k, v, Some(Path::new("/data"))).unwrap();
        }
        assert_eq!(cfg.input, PathBuf::from("/data/a.csv"));
        assert_eq!(cfg.boot_reps, 199);
        assert_eq!(cfg.backend, BackendChoice::Kalman);
    }

    #[test]
    fn bad_settings() {
        assert!(parse_flat("input a.csv").is_err());
        assert!(parse_flat("a=1\na=2").is_err());
        let mut cfg = PipelineConfig::default();
        assert!(cfg.set("colour", "red", None).is_err());
        assert!(cfg.set("delta2", "-1", None).is_err());
        assert!(cfg.set("trend", "t", None).is_err());
        cfg.set("delta2", "0.05", None).unwrap();
        assert_eq!(cfg.delta2, Delta2::Fixed(0.05));
        cfg.set("max_lag", "auto", None).unwrap();
        assert_eq!(cfg.max_lag, None);
    }

    #[test]
    fn validation_runs_before_data() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let mut cfg = PipelineConfig {
            input: file.path().to_owned(),
            ..Default::default()
        };
        cfg.validate().unwrap();
        cfg.qmax = 0;
        assert!(cfg.validate().unwrap_err().0.contains("qmax"));
        cfg.qmax = 2;
        cfg.level = 1.0;
        assert!(cfg.validate().is_err());
        cfg.level = 0.9;
        cfg.boot_reps = 50;
        assert!(cfg.validate().is_err());
    }
}
