use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::detection::{uniform_grid, KMeansOptions};
use crate::error::{Error, Result};
use crate::simulator::EnergySource;
use crate::solvers::{RegularizerKind, SolverOptions};
use crate::sysmodel::SystemConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// A detector family; regularized kinds are evaluated at every lambda of
/// `lambdas` (or the experiment-wide grid when absent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub kind: RegularizerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    /// Per-group (GLASSO) or per-user (TV) weights; unit when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

impl MethodSpec {
    pub fn new(kind: RegularizerKind) -> Self {
        MethodSpec {
            kind,
            lambdas: None,
            weights: None,
        }
    }

    pub fn with_lambdas(kind: RegularizerKind, lambdas: &[f64]) -> Self {
        MethodSpec {
            kind,
            lambdas: Some(lambdas.to_vec()),
            weights: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodSpec>,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    #[serde(default = "default_mode")]
    pub antennas_mode: EnergySource,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub kmeans: KMeansOptions,
    /// Worker threads; 0 uses every available core.
    #[serde(default)]
    pub workers: usize,
}

fn default_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::new(RegularizerKind::None),
        MethodSpec::new(RegularizerKind::Tv),
        MethodSpec::new(RegularizerKind::Glasso),
    ]
}

/// 50 thresholds on `[0, 1.2]`, in units of normalized activity.
fn default_thresholds() -> Vec<f64> {
    uniform_grid(0.0, 1.2, 50)
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0, 0.01, 0.03, 0.06, 0.1, 0.2]
}

fn default_trials() -> usize {
    200
}

fn default_seed() -> u64 {
    1
}

fn default_mode() -> EnergySource {
    EnergySource::MonteCarlo
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            system: SystemConfig::paper(),
            methods: default_methods(),
            thresholds: default_thresholds(),
            lambdas: default_lambdas(),
            n_trials: default_trials(),
            master_seed: default_seed(),
            antennas_mode: default_mode(),
            output_dir: default_output_dir(),
            solver: SolverOptions::default(),
            kmeans: KMeansOptions::default(),
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    /// Reduced preset: 18x18 grid, 6 pilots, 6 intervals, 50 trials.
    pub fn quick() -> Self {
        ExperimentConfig {
            system: SystemConfig::quick(),
            n_trials: 50,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<Vec<String>> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        if self.thresholds.is_empty() {
            return Err(Error::Config("thresholds must not be empty".into()));
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::Config("thresholds must be finite".into()));
        }
        if self.thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Config("thresholds must be sorted ascending".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            let grid = m.lambdas.as_ref().unwrap_or(&self.lambdas);
            if m.kind != RegularizerKind::None && grid.is_empty() {
                return Err(Error::Config(format!("methods[{i}]: lambda grid is empty")));
            }
            if let Some(l) = grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
                return Err(Error::Config(format!("methods[{i}]: invalid lambda {l}")));
            }
        }
        if self.lambdas.is_empty() {
            return Err(Error::Config("lambdas must not be empty".into()));
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iters == 0 {
            return Err(Error::Config("kmeans restarts and max_iters must be at least 1".into()));
        }
        self.solver.validate()?;
        self.system.validate()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Parses and validates a JSON configuration. Unknown keys are rejected;
/// omitted keys take the paper-scenario defaults.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    if text.trim().is_empty() {
        return Err(Error::Config(
            "empty configuration: missing required field `schema_version`".into(),
        ));
    }
    let cfg: ExperimentConfig =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_names_missing_field() {
        let err = parse_config_str("").unwrap_err().to_string();
        assert!(err.contains("schema_version"), "{err}");
        let err = parse_config_str("{}").unwrap_err().to_string();
        assert!(err.contains("schema_version"), "{err}");
    }

    #[test]
    fn minimal_file_gives_paper_defaults() {
        let cfg = parse_config_str(r#"{"schema_version": 1}"#).unwrap();
        let s = &cfg.system;
        assert_eq!(s.num_users, 1296);
        assert_eq!(s.num_bs, 4);
        assert_eq!(s.antennas_per_bs, 32);
        assert_eq!(s.num_pilots, 10);
        assert_eq!(s.seq_len, 10);
        assert_eq!(s.num_events, 3);
        assert_eq!(s.event_variance, 0.001);
        assert_eq!(s.neighbor_radius, 0.05);
        assert_eq!(s.snr_db, 10.0);
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn default_round_trips() {
        let cfg = ExperimentConfig::default();
        let back = parse_config_str(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let q = ExperimentConfig::quick();
        assert_eq!(parse_config_str(&q.to_json().unwrap()).unwrap(), q);
    }

    #[test]
    fn unknown_keys_rejected_with_location() {
        let err = parse_config_str("{\n  \"schema_version\": 1,\n  \"bogus\": 3\n}")
            .unwrap_err()
            .to_string();
        assert!(err.contains("bogus") && err.contains("line 3"), "{err}");
        let err = parse_config_str(r#"{"schema_version": 1, "system": {"num_userz": 4}}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("num_userz"), "{err}");
    }

    #[test]
    fn semantic_errors() {
        assert!(parse_config_str(r#"{"schema_version": 2}"#).is_err());
        assert!(parse_config_str(r#"{"schema_version": 1, "n_trials": 0}"#).is_err());
        assert!(parse_config_str(r#"{"schema_version": 1, "thresholds": [0.5, 0.1]}"#).is_err());
        assert!(parse_config_str(r#"{"schema_version": 1, "methods": []}"#).is_err());
    }
}
