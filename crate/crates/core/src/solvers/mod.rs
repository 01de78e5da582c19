//! NNLS and non-negative group-norm regularized least squares.
//!
//! All solvers minimize
//!
//! ```text
//! F(alpha) = ||A alpha - y||^2 + lambda * sum_j c_j ||B_j alpha||_2   s.t. alpha >= 0
//! ```
//!
//! where `B_j` selects the coordinates of group `j` (GLASSO) or forms the
//! differences `alpha_k - alpha_i, i in N(k) \ {k}` (TV). Plain NNLS uses an
//! accelerated projected gradient with support polishing; the regularized
//! problems use ADMM with a cached Woodbury factorization.

mod admm;
mod banded;
mod groups;
mod kkt;
mod linalg;
mod nnls;
mod oracle;

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use admm::{regularized_solve, RegularizedSolver};
pub use banded::{BandedCholesky, BandedMatrix};
pub use groups::GroupOperator;
pub use kkt::{kkt_residual, kkt_residual_with};
pub use linalg::SparseCols;
pub use nnls::{nnls_solve, NnlsSolver};
pub use oracle::subgradient_oracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RegularizerKind {
    None,
    Glasso,
    Tv,
}

impl RegularizerKind {
    pub fn label(self) -> &'static str {
        match self {
            RegularizerKind::None => "NNLS",
            RegularizerKind::Glasso => "GLASSO",
            RegularizerKind::Tv => "TV",
        }
    }
}

/// Group structure, weights and strength of the regularizer.
///
/// For `Tv`, `groups[k]` is the neighbor set `N(k)` of user `k` (it may
/// contain `k`, which is ignored). For `Glasso`, `groups[j]` is the
/// coordinate set `G_j`; groups may overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub kind: RegularizerKind,
    pub groups: Vec<Vec<usize>>,
    pub weights: Vec<f64>,
    pub lambda: f64,
}

impl RegularizerSpec {
    pub fn none() -> Self {
        RegularizerSpec {
            kind: RegularizerKind::None,
            groups: Vec::new(),
            weights: Vec::new(),
            lambda: 0.0,
        }
    }

    /// Unit-weight group LASSO.
    pub fn glasso(groups: Vec<Vec<usize>>, lambda: f64) -> Self {
        let weights = vec![1.0; groups.len()];
        RegularizerSpec {
            kind: RegularizerKind::Glasso,
            groups,
            weights,
            lambda,
        }
    }

    /// Unit-weight total variation over neighbor sets.
    pub fn tv(neighbors: Vec<Vec<usize>>, lambda: f64) -> Self {
        let weights = vec![1.0; neighbors.len()];
        RegularizerSpec {
            kind: RegularizerKind::Tv,
            groups: neighbors,
            weights,
            lambda,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        RegularizerSpec {
            lambda,
            ..self.clone()
        }
    }

    /// Effective strength: zero for `None`.
    pub fn effective_lambda(&self) -> f64 {
        match self.kind {
            RegularizerKind::None => 0.0,
            _ => self.lambda,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidRegularizer(format!(
                "lambda must be finite and non-negative, got {}",
                self.lambda
            )));
        }
        if self.kind == RegularizerKind::None {
            return Ok(());
        }
        if self.kind == RegularizerKind::Tv && self.groups.len() != dim {
            return Err(Error::InvalidRegularizer(format!(
                "TV needs one neighbor set per coordinate: {} sets for {} coordinates",
                self.groups.len(),
                dim
            )));
        }
        if self.weights.len() != self.groups.len() {
            return Err(Error::InvalidRegularizer(format!(
                "{} weights for {} groups",
                self.weights.len(),
                self.groups.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidRegularizer(format!("weights must be positive, got {w}")));
        }
        for (j, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidRegularizer(format!("group {j} is empty")));
            }
            if let Some(i) = g.iter().find(|&&i| i >= dim) {
                return Err(Error::InvalidRegularizer(format!(
                    "group {j} references coordinate {i} >= {dim}"
                )));
            }
        }
        Ok(())
    }

    /// `sum_j c_j ||B_j alpha||` (without lambda).
    pub fn value(&self, alpha: &[f64]) -> Result<f64> {
        if self.kind == RegularizerKind::None {
            return Ok(0.0);
        }
        let op = GroupOperator::new(self, alpha.len())?;
        Ok(op
            .group_norms(alpha)
            .iter()
            .zip(&self.weights)
            .map(|(n, c)| c * n)
            .sum())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Initial ADMM penalty; derived from the Lipschitz constant when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// ADMM over-relaxation factor in (0, 2).
    pub relaxation: f64,
    /// Power iterations used to estimate `||A||^2`.
    pub power_iters: usize,
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iters: 50_000,
            rel_tol: 1e-5,
            abs_tol: 1e-10,
            rho: None,
            relaxation: 1.6,
            power_iters: 20,
            record_history: false,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::Config("relaxation must lie in (0, 2)".into()));
        }
        if let Some(r) = self.rho {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Config("rho must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub objective: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// Relaxed activity estimate, entrywise `>= 0`.
    pub alpha_hat: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<IterRecord>,
}

impl SolverResult {
    /// Writes the per-iteration diagnostics as CSV.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,objective,residual")?;
        for r in &self.history {
            writeln!(out, "{},{:.16e},{:.16e}", r.iteration, r.objective, r.residual)?;
        }
        Ok(())
    }
}

/// `||A alpha - y||^2 + lambda * R(alpha)`.
pub fn objective(a: &DMatrix<f64>, y: &DVector<f64>, reg: &RegularizerSpec, alpha: &[f64]) -> Result<f64> {
    check_dims(a, y)?;
    let r = a * DVector::from_column_slice(alpha) - y;
    let lambda = reg.effective_lambda();
    let penalty = if lambda > 0.0 { lambda * reg.value(alpha)? } else { 0.0 };
    Ok(r.norm_squared() + penalty)
}

/// Block soft-threshold: `v * max(0, 1 - theta / ||v||)`.
pub fn prox_group_l2(v: &[f64], theta: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    prox_group_l2_in_place(&mut out, theta);
    out
}

#[inline]
pub(crate) fn prox_group_l2_in_place(v: &mut [f64], theta: f64) {
    let n = linalg::norm(v);
    let f = if n > theta { 1.0 - theta / n } else { 0.0 };
    v.iter_mut().for_each(|x| *x *= f);
}

pub(crate) fn check_dims(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if a.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{} but y has length {}",
            a.nrows(),
            a.ncols(),
            y.len()
        )));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("A"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("y"));
    }
    Ok(())
}
