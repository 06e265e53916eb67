use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FRACITO_OUT_DIR";

/// Experiments whose verdicts are Monte Carlo statistics and need `paths ≥ 100`.
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub hurst: f64,
    pub horizon: f64,
    /// Resolution ladder `n, 2n, …`; single-resolution experiments use the last entry.
    pub grid: Vec<usize>,
    pub paths: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<String>,
    /// Numeric parameters of the functional and of the experiment (caps, driver coefficients, …).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn param_or(&self, key: &str, default: f64) -> f64 {
        self.param(key).unwrap_or(default)
    }

    /// Finest resolution of the ladder.
    pub fn resolution(&self) -> usize {
        self.grid.last().copied().unwrap_or(0)
    }

    /// `--out`, else `$FRACITO_OUT_DIR/<experiment>.<ext>`, else none (stdout).
    pub fn output_path(&self) -> Option<PathBuf> {
        if let Some(p) = &self.out {
            return Some(p.clone());
        }
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{}.{}", self.experiment, self.format.extension())))
    }

    pub fn validate(&self, statistical: bool) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if self.grid.is_empty() || self.grid.contains(&0) {
            return Err(Error::Config("grid must list positive resolutions".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!("grid {:?} must be increasing", self.grid)));
        }
        if statistical && self.paths < MIN_PATHS {
            return Err(Error::Config(format!(
                "paths = {} is below the minimum of {MIN_PATHS} for a statistical experiment",
                self.paths
            )));
        }
        if let Some((k, v)) = self.params.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("parameter {k} = {v} is not finite")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_field_is_named() {
        let err = ExperimentConfig::from_json(r#"{"experiment":"covariance_check","horizon":1,"grid":[8],"paths":100,"seed":1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("hurst"), "{err}");
    }

    #[test]
    fn round_trip() {
        let mut c = ExperimentConfig {
            experiment: "theorem50".into(),
            hurst: 0.7,
            horizon: 1.0,
            grid: vec![64, 128],
            paths: 100,
            seed: 3,
            functional: Some("square".into()),
            params: BTreeMap::new(),
            out: None,
            format: Format::Csv,
        };
        c.params.insert("rms_cap".into(), 0.1);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn validation() {
        let c = ExperimentConfig {
            experiment: "x".into(),
            hurst: 0.7,
            horizon: 1.0,
            grid: vec![64, 32],
            paths: 10,
            seed: 3,
            functional: None,
            params: BTreeMap::new(),
            out: None,
            format: Format::Json,
        };
        assert!(c.validate(false).is_err());
        let c = ExperimentConfig { grid: vec![32], ..c };
        assert!(c.validate(false).is_ok());
        assert!(c.validate(true).is_err());
    }
}
