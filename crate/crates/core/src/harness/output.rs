use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{Experiment, MethodInstance, TrialResult};
use crate::error::{Error, Result};
use crate::jsonfmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocRow {
    pub method: String,
    pub lambda: f64,
    pub threshold: f64,
    pub p_fa_mean: f64,
    pub p_m_mean: f64,
    pub n_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmsdRow {
    pub method: String,
    pub lambda: f64,
    pub threshold: f64,
    pub rmsd_mean: f64,
    pub rmsd_stderr: f64,
    pub n_trials: usize,
    /// Fraction of trials with an empty detection set.
    pub zero_detection_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Tables {
    pub roc: Vec<RocRow>,
    pub rmsd: Vec<RmsdRow>,
}

impl Tables {
    /// Rows of one method instance, in threshold order.
    pub fn roc_for(&self, method: &str, lambda: f64) -> Vec<&RocRow> {
        self.roc
            .iter()
            .filter(|r| r.method == method && r.lambda == lambda)
            .collect()
    }

    pub fn rmsd_for(&self, method: &str, lambda: f64) -> Vec<&RmsdRow> {
        self.rmsd
            .iter()
            .filter(|r| r.method == method && r.lambda == lambda)
            .collect()
    }

    pub fn roc_csv(&self) -> String {
        to_csv(&self.roc)
    }

    pub fn rmsd_csv(&self) -> String {
        to_csv(&self.rmsd)
    }
}

/// Header row from the field names, LF line endings, shortest round-trip
/// floats (`NaN` for undefined averages).
fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config: ExperimentConfig,
    pub methods: Vec<MethodInstance>,
    pub num_users: usize,
    pub num_measurements: usize,
    pub energy_scale: f64,
    pub warnings: Vec<String>,
    /// Trials where a method stopped at the iteration cap.
    pub nonconverged: BTreeMap<String, usize>,
}

impl Manifest {
    pub fn new(exp: &Experiment, nonconverged: BTreeMap<String, usize>) -> Self {
        Manifest {
            version: format!("v{}", env!("CARGO_PKG_VERSION")),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            config: exp.config.clone(),
            methods: exp.instances.clone(),
            num_users: exp.system.config.num_users,
            num_measurements: exp.system.matrix.nrows(),
            energy_scale: exp.scale,
            warnings: exp.warnings.clone(),
            nonconverged,
        }
    }
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Writes `roc.csv`, `rmsd.csv` and `manifest.json` into `dir`.
pub fn emit_results(tables: &Tables, manifest: &Manifest, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir.join("roc.csv"), &tables.roc_csv())?;
    write(dir.join("rmsd.csv"), &tables.rmsd_csv())?;
    jsonfmt::write_file(&dir.join("manifest.json"), manifest)
}

/// Writes `trials/trial_NNNNN.json` under `dir`: seed, events, alpha, y and
/// source, enough to replay the solvers without regenerating.
pub fn write_trial_dump(trial: &TrialResult, dir: &Path) -> Result<PathBuf> {
    let sub = dir.join("trials");
    fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
    let path = sub.join(format!("trial_{:05}.json", trial.trial_index));
    jsonfmt::write_file(&path, &trial.realization)?;
    Ok(path)
}
