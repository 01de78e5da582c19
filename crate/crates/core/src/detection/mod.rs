//! From relaxed solver outputs to decisions and scores: thresholding,
//! miss/false-alarm rates, ROC sweeps, K-means event localization and
//! optimal event pairing.

mod kmeans;
mod matching;
mod roc;

pub use kmeans::{kmeans_cluster, kmeans_cluster_with, kmeans_single, KMeansOptions, KMeansRun, PLANE_CENTER};
pub use matching::{match_events, EventEstimate, MAX_EXHAUSTIVE_EVENTS};
pub use roc::{roc_sweep, uniform_grid, RocAccumulator, RocPoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub detected: Vec<bool>,
    pub threshold: f64,
}

impl DetectionResult {
    pub fn support(&self) -> Vec<usize> {
        self.detected
            .iter()
            .enumerate()
            .filter_map(|(k, &d)| d.then_some(k))
            .collect()
    }
}

/// Declares user `k` active iff `alpha_hat[k] > threshold`.
pub fn threshold_detect(alpha_hat: &[f64], threshold: f64) -> DetectionResult {
    DetectionResult {
        detected: alpha_hat.iter().map(|&a| a > threshold).collect(),
        threshold,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub active: usize,
    pub inactive: usize,
    pub missed: usize,
    pub false_alarms: usize,
}

/// Miss and false-alarm probabilities; `None` when the denominator is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMetrics {
    pub p_m: Option<f64>,
    pub p_fa: Option<f64>,
    pub counts: ConfusionCounts,
}

impl ConfusionMetrics {
    pub fn from_counts(counts: ConfusionCounts) -> Self {
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        ConfusionMetrics {
            p_m: ratio(counts.missed, counts.active),
            p_fa: ratio(counts.false_alarms, counts.inactive),
            counts,
        }
    }
}

pub fn confusion_metrics(detected: &[bool], truth: &[bool]) -> Result<ConfusionMetrics> {
    if detected.len() != truth.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} detections for {} users",
            detected.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts {
        active: 0,
        inactive: 0,
        missed: 0,
        false_alarms: 0,
    };
    for (&d, &t) in detected.iter().zip(truth) {
        match (t, d) {
            (true, true) => c.active += 1,
            (true, false) => {
                c.active += 1;
                c.missed += 1;
            }
            (false, true) => {
                c.inactive += 1;
                c.false_alarms += 1;
            }
            (false, false) => c.inactive += 1,
        }
    }
    Ok(ConfusionMetrics::from_counts(c))
}
