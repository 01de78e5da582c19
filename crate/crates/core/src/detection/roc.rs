use serde::{Deserialize, Serialize};

use super::{confusion_metrics, threshold_detect};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub p_fa: Option<f64>,
    pub p_m: Option<f64>,
}

/// `n` points evenly spaced on `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// One confusion evaluation per threshold.
pub fn roc_sweep(alpha_hat: &[f64], truth: &[bool], thresholds: &[f64]) -> Result<Vec<RocPoint>> {
    thresholds
        .iter()
        .map(|&thr| {
            let d = threshold_detect(alpha_hat, thr);
            let m = confusion_metrics(&d.detected, truth)?;
            Ok(RocPoint {
                threshold: thr,
                p_fa: m.p_fa,
                p_m: m.p_m,
            })
        })
        .collect()
}

/// Threshold-indexed averaging of ROC points across trials. Undefined
/// entries are skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct RocAccumulator {
    pub thresholds: Vec<f64>,
    sum_fa: Vec<f64>,
    n_fa: Vec<usize>,
    sum_m: Vec<f64>,
    n_m: Vec<usize>,
    pub trials: usize,
}

impl RocAccumulator {
    pub fn new(thresholds: &[f64]) -> Self {
        let n = thresholds.len();
        RocAccumulator {
            thresholds: thresholds.to_vec(),
            sum_fa: vec![0.0; n],
            n_fa: vec![0; n],
            sum_m: vec![0.0; n],
            n_m: vec![0; n],
            trials: 0,
        }
    }

    pub fn add(&mut self, points: &[RocPoint]) {
        assert_eq!(points.len(), self.thresholds.len());
        for (i, p) in points.iter().enumerate() {
            if let Some(v) = p.p_fa {
                self.sum_fa[i] += v;
                self.n_fa[i] += 1;
            }
            if let Some(v) = p.p_m {
                self.sum_m[i] += v;
                self.n_m[i] += 1;
            }
        }
        self.trials += 1;
    }

    pub fn mean_p_fa(&self, i: usize) -> Option<f64> {
        (self.n_fa[i] > 0).then(|| self.sum_fa[i] / self.n_fa[i] as f64)
    }

    pub fn mean_p_m(&self, i: usize) -> Option<f64> {
        (self.n_m[i] > 0).then(|| self.sum_m[i] / self.n_m[i] as f64)
    }

    pub fn mean_curve(&self) -> Vec<RocPoint> {
        (0..self.thresholds.len())
            .map(|i| RocPoint {
                threshold: self.thresholds[i],
                p_fa: self.mean_p_fa(i),
                p_m: self.mean_p_m(i),
            })
            .collect()
    }
}
