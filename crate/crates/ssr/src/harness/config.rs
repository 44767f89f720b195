//! Experiment configuration: JSON files with strict field checking.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chime::ChimeConfig;
use crate::util;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("invalid config JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Enhance,
    Sparsity,
    Gap,
    Irrelevant,
    Measures,
}

impl ExperimentKind {
    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::Enhance => "enhance",
            ExperimentKind::Sparsity => "sparsity",
            ExperimentKind::Gap => "gap",
            ExperimentKind::Irrelevant => "irrelevant",
            ExperimentKind::Measures => "measures",
        }
    }
}

/// One experiment run. Unknown JSON fields are rejected to guard against
/// silent typos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub dim: usize,
    /// Noise scale; `None` selects the experiment's default rule (e.g. the
    /// per-ε vanishing-ratio rule for `enhance`).
    #[serde(default)]
    pub sigma: Option<f64>,
    pub epsilon_grid: Vec<f64>,
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_seeds: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub chime: Option<ChimeConfig>,
    pub output_dir: PathBuf,
    /// Orthogonal-shift scale for the `irrelevant` experiment (default 1).
    #[serde(default)]
    pub a: Option<f64>,
    /// Multiplier on the recovery-threshold gap in the `sparsity`
    /// experiment (default 1; 0.1 is the negative control).
    #[serde(default)]
    pub gap_scale: Option<f64>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dim == 0 {
            return Err(ConfigError::Invalid("dim must be >= 1".into()));
        }
        if self.epsilon_grid.is_empty() {
            return Err(ConfigError::Invalid("epsilon_grid must be nonempty".into()));
        }
        if self.epsilon_grid.iter().any(|&e| e < 0.0) {
            return Err(ConfigError::Invalid("epsilon_grid must be nonnegative".into()));
        }
        if self.epsilon_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ConfigError::Invalid("epsilon_grid must be strictly increasing".into()));
        }
        if self.n_seeds == 0 {
            return Err(ConfigError::Invalid("n_seeds must be >= 1".into()));
        }
        if let Some(s) = self.sigma {
            if s <= 0.0 {
                return Err(ConfigError::Invalid("sigma must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(path.to_path_buf(), e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Content hash of the config (canonical JSON serialization). The output
    /// directory is excluded so the same run written to different places
    /// carries the same digest.
    pub fn digest(&self) -> String {
        let mut canon = self.clone();
        canon.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canon).expect("config serializes");
        util::digest_hex(json.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            experiment: ExperimentKind::Enhance,
            dim: 10,
            sigma: None,
            epsilon_grid: vec![0.05, 0.1],
            n_labeled: 20,
            n_unlabeled: 100,
            n_seeds: 3,
            master_seed: 1,
            chime: None,
            output_dir: PathBuf::from("out"),
            a: None,
            gap_scale: None,
        }
    }

    #[test]
    fn parses_minimal_json() {
        let json = r#"{
            "experiment": "gap",
            "dim": 100,
            "epsilon_grid": [0.5],
            "n_labeled": 1,
            "n_unlabeled": 1000,
            "n_seeds": 5,
            "master_seed": 42,
            "output_dir": "results"
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Gap);
        assert!(cfg.sigma.is_none());
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_fields() {
        let json = r#"{
            "experiment": "gap",
            "dim": 100,
            "epsilon_grid": [0.5],
            "n_labeled": 1,
            "n_unlabeled": 1000,
            "n_seeds": 5,
            "master_seed": 42,
            "output_dir": "results",
            "n_labled": 7
        }"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
    }

    #[test]
    fn rejects_invalid_grids_and_counts() {
        let mut c = base();
        c.epsilon_grid = vec![];
        assert!(c.validate().is_err());
        let mut c = base();
        c.epsilon_grid = vec![0.2, 0.1];
        assert!(c.validate().is_err());
        let mut c = base();
        c.epsilon_grid = vec![-0.1, 0.1];
        assert!(c.validate().is_err());
        let mut c = base();
        c.n_seeds = 0;
        assert!(c.validate().is_err());
        let mut c = base();
        c.sigma = Some(0.0);
        assert!(c.validate().is_err());
        base().validate().unwrap();
    }

    #[test]
    fn digest_tracks_content() {
        let a = base();
        let mut b = base();
        assert_eq!(a.digest(), b.digest());
        b.master_seed = 2;
        assert_ne!(a.digest(), b.digest());
        let mut c = base();
        c.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.digest(), c.digest());
    }
}
