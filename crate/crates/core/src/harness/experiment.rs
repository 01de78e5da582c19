use std::collections::hash_map::Entry;
use std::collections::HashMap;

use nalgebra::DVector;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::output::{Manifest, RmsdRow, RocRow, Tables};
use crate::detection::{
    kmeans_cluster_with, match_events, roc_sweep, threshold_detect, EventEstimate, RocAccumulator, RocPoint,
};
use crate::error::{Error, Result};
use crate::rng::{hash64, stream_seed, trial_seed, SimRng, Stream};
use crate::simulator::{simulate_trial, TrialRealization};
use crate::solvers::{NnlsSolver, RegularizedSolver, RegularizerKind, RegularizerSpec, SolverResult};
use crate::sysmodel::System;
use crate::Point;

/// One evaluated detector: a family at a fixed lambda.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodInstance {
    pub method: String,
    pub kind: RegularizerKind,
    pub lambda: f64,
    /// `lambda == 0` regularized instances coincide with NNLS.
    pub nnls_equivalent: bool,
    #[serde(skip)]
    weights: Option<Vec<f64>>,
}

impl MethodInstance {
    pub fn key(&self) -> String {
        format!("{}@{}", self.method, self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: String,
    pub lambda: f64,
    pub alpha_hat: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub roc: Vec<RocPoint>,
    /// Localization per threshold.
    pub events: Vec<EventEstimate>,
    /// Whether nothing was detected at each threshold.
    pub zero_detections: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial_index: u64,
    pub realization: TrialRealization,
    pub methods: Vec<MethodOutcome>,
}

/// Trial-invariant state of a campaign: the system and solver factorizations.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub system: System,
    pub instances: Vec<MethodInstance>,
    /// `tau_p p beta_min`; measurements are divided by it before solving.
    pub scale: f64,
    pub warnings: Vec<String>,
    nnls: NnlsSolver,
    regularized: HashMap<String, RegularizedSolver>,
}

fn family_key(kind: RegularizerKind, weights: &Option<Vec<f64>>) -> String {
    format!("{}:{:?}", kind.label(), weights)
}

impl Experiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        Self::with_lambda_override(config, false)
    }

    fn with_lambda_override(config: &ExperimentConfig, global_grid: bool) -> Result<Self> {
        let warnings = config.validate()?;
        let system = System::build(&config.system, config.master_seed)?;
        let scale = system.energy_scale();
        let normalized = system.matrix.scaled(scale).a;
        let nnls = NnlsSolver::new(&normalized, &config.solver)?;
        let neighbors = system.topology.neighbor_sets(config.system.neighbor_radius);

        let mut instances = Vec::new();
        let mut regularized = HashMap::new();
        for spec in &config.methods {
            if spec.kind == RegularizerKind::None {
                if !instances.iter().any(|i: &MethodInstance| i.kind == RegularizerKind::None) {
                    instances.push(MethodInstance {
                        method: "NNLS".into(),
                        kind: RegularizerKind::None,
                        lambda: 0.0,
                        nnls_equivalent: true,
                        weights: None,
                    });
                }
                continue;
            }
            let mut reg = match spec.kind {
                RegularizerKind::Tv => RegularizerSpec::tv(neighbors.clone(), 0.0),
                _ => RegularizerSpec::glasso(neighbors.clone(), 0.0),
            };
            if let Some(w) = &spec.weights {
                reg.weights = w.clone();
            }
            reg.validate(config.system.num_users)
                .map_err(|e| Error::Config(format!("{} method: {e}", spec.kind.label())))?;
            let key = family_key(spec.kind, &spec.weights);
            if let Entry::Vacant(slot) = regularized.entry(key) {
                slot.insert(RegularizedSolver::new(&normalized, &reg, &config.solver)?);
            }
            let grid = if global_grid {
                &config.lambdas
            } else {
                spec.lambdas.as_ref().unwrap_or(&config.lambdas)
            };
            for &lambda in grid {
                instances.push(MethodInstance {
                    method: spec.kind.label().into(),
                    kind: spec.kind,
                    lambda,
                    nnls_equivalent: lambda == 0.0,
                    weights: spec.weights.clone(),
                });
            }
        }
        Ok(Experiment {
            config: config.clone(),
            system,
            instances,
            scale,
            warnings,
            nnls,
            regularized,
        })
    }

    fn solve(&self, inst: &MethodInstance, y: &DVector<f64>, nnls: &mut Option<SolverResult>) -> Result<SolverResult> {
        if inst.kind == RegularizerKind::None || inst.lambda == 0.0 {
            if nnls.is_none() {
                *nnls = Some(self.nnls.solve(y, &self.config.solver)?);
            }
            return Ok(nnls.clone().expect("just solved"));
        }
        let solver = &self.regularized[&family_key(inst.kind, &inst.weights)];
        solver.solve(y, inst.lambda, &self.config.solver)
    }

    /// Runs every method on a given realization.
    pub fn evaluate(&self, realization: &TrialRealization) -> Result<Vec<MethodOutcome>> {
        let cfg = &self.config;
        if realization.energy.y.len() != self.system.matrix.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "energy vector has {} entries, expected {}",
                realization.energy.y.len(),
                self.system.matrix.nrows()
            )));
        }
        let y = DVector::from_iterator(
            realization.energy.y.len(),
            realization.energy.y.iter().map(|v| v / self.scale),
        );
        let truth = &realization.alpha.alpha;
        let positions = &self.system.topology.user_positions;
        let num_events = realization.events.len();
        let kmeans_base = stream_seed(realization.seed, Stream::KMeans);

        // Identical detection sets share one clustering, across methods too:
        // the K-means seed depends only on the trial and the detected set.
        let mut cache: HashMap<Vec<usize>, EventEstimate> = HashMap::new();
        let mut nnls = None;
        let mut outcomes = Vec::with_capacity(self.instances.len());
        for inst in &self.instances {
            let res = self.solve(inst, &y, &mut nnls)?;
            let roc = roc_sweep(&res.alpha_hat, truth, &cfg.thresholds)?;
            let mut events = Vec::with_capacity(cfg.thresholds.len());
            let mut zero_detections = Vec::with_capacity(cfg.thresholds.len());
            for &thr in &cfg.thresholds {
                let support = threshold_detect(&res.alpha_hat, thr).support();
                zero_detections.push(support.is_empty());
                let est = match cache.get(&support) {
                    Some(e) => e.clone(),
                    None => {
                        let seed = support.iter().fold(kmeans_base, |h, &k| hash64(h, k as u64));
                        let pts: Vec<Point> = support.iter().map(|&k| positions[k]).collect();
                        let mut rng = SimRng::seed_from_u64(seed);
                        let centroids = kmeans_cluster_with(&pts, num_events, &cfg.kmeans, &mut rng);
                        let e = match_events(&realization.events.positions, &centroids)?;
                        cache.insert(support, e.clone());
                        e
                    }
                };
                events.push(est);
            }
            outcomes.push(MethodOutcome {
                method: inst.method.clone(),
                lambda: inst.lambda,
                alpha_hat: res.alpha_hat,
                objective: res.objective,
                iterations: res.iterations,
                converged: res.converged,
                roc,
                events,
                zero_detections,
            });
        }
        Ok(outcomes)
    }

    /// Deterministic in `(master_seed, trial_index)`; every method sees the
    /// same realization.
    pub fn run_trial(&self, trial_index: u64) -> Result<TrialResult> {
        let seed = trial_seed(self.config.master_seed, trial_index);
        let realization = simulate_trial(&self.system, seed, self.config.antennas_mode)?;
        let methods = self.evaluate(&realization)?;
        Ok(TrialResult {
            trial_index,
            realization,
            methods,
        })
    }

    /// Runs all trials on a bounded pool; results come back in index order.
    pub fn run_trials(&self) -> Result<Vec<TrialResult>> {
        let n = self.config.n_trials as u64;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| (0..n).into_par_iter().map(|i| self.run_trial(i)).collect())
    }

    /// Folds trial results in index order into the ROC and RMSD tables.
    pub fn aggregate(&self, trials: &[TrialResult]) -> Tables {
        let thresholds = &self.config.thresholds;
        let nt = thresholds.len();
        let mut roc = Vec::new();
        let mut rmsd = Vec::new();
        for (m, inst) in self.instances.iter().enumerate() {
            let mut acc = RocAccumulator::new(thresholds);
            let mut sum = vec![0.0; nt];
            let mut sum_sq = vec![0.0; nt];
            let mut zeros = vec![0usize; nt];
            for t in trials {
                let out = &t.methods[m];
                acc.add(&out.roc);
                for i in 0..nt {
                    let r = out.events[i].rmsd;
                    sum[i] += r;
                    sum_sq[i] += r * r;
                    zeros[i] += out.zero_detections[i] as usize;
                }
            }
            let n = trials.len();
            let nf = n as f64;
            for i in 0..nt {
                roc.push(RocRow {
                    method: inst.method.clone(),
                    lambda: inst.lambda,
                    threshold: thresholds[i],
                    p_fa_mean: acc.mean_p_fa(i).unwrap_or(f64::NAN),
                    p_m_mean: acc.mean_p_m(i).unwrap_or(f64::NAN),
                    n_trials: n,
                });
                let mean = sum[i] / nf;
                let var = if n > 1 {
                    ((sum_sq[i] - nf * mean * mean) / (nf - 1.0)).max(0.0)
                } else {
                    0.0
                };
                rmsd.push(RmsdRow {
                    method: inst.method.clone(),
                    lambda: inst.lambda,
                    threshold: thresholds[i],
                    rmsd_mean: mean,
                    rmsd_stderr: (var / nf).sqrt(),
                    n_trials: n,
                    zero_detection_rate: zeros[i] as f64 / nf,
                });
            }
        }
        Tables { roc, rmsd }
    }

    pub fn manifest(&self, trials: &[TrialResult]) -> Manifest {
        let nonconverged = self
            .instances
            .iter()
            .enumerate()
            .map(|(m, inst)| {
                let c = trials.iter().filter(|t| !t.methods[m].converged).count();
                (inst.key(), c)
            })
            .filter(|(_, c)| *c > 0)
            .collect();
        Manifest::new(self, nonconverged)
    }
}

/// Tables, manifest and (optionally kept) per-trial results.
pub struct ExperimentOutput {
    pub tables: Tables,
    pub manifest: Manifest,
    pub trials: Vec<TrialResult>,
}

fn run(exp: Experiment) -> Result<ExperimentOutput> {
    let trials = exp.run_trials()?;
    let tables = exp.aggregate(&trials);
    let manifest = exp.manifest(&trials);
    Ok(ExperimentOutput {
        tables,
        manifest,
        trials,
    })
}

/// Builds the system once and runs a single trial.
pub fn run_trial(config: &ExperimentConfig, trial_index: u64) -> Result<TrialResult> {
    Experiment::new(config)?.run_trial(trial_index)
}

/// Every configured method at its own lambda grid.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run(Experiment::new(config)?)
}

/// Every regularized method across the experiment-wide lambda grid; the
/// `lambda = 0` members are flagged as NNLS-equivalent.
pub fn sweep_lambda(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run(Experiment::with_lambda_override(config, true)?)
}
