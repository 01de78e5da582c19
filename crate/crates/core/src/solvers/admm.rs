//! ADMM for `min ||A a - y||^2 + lambda sum_j c_j ||B_j a|| s.t. a >= 0`.
//!
//! Splitting: `u = a` carries the orthant constraint and `z = B a` the group
//! norms. The `a`-update solves `(2 A^T A + rho (I + B^T B)) a = rhs`. With
//! `Q = I + B^T B` banded and `A` wide, the Woodbury identity gives
//!
//! ```text
//! M^-1 = Q^-1 / rho - W C^-1 A Q^-1 / rho^2,   W = Q^-1 A^T,   C = I/2 + A W / rho
//! ```
//!
//! so `Q` and `W` are factored once per group structure and only the small
//! `C` is refactored when the penalty adapts.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::banded::BandedCholesky;
use super::groups::GroupOperator;
use super::linalg::{dist, dot, norm};
use super::nnls::NnlsSolver;
use super::{check_dims, IterRecord, RegularizerKind, RegularizerSpec, SolverOptions, SolverResult};
use crate::error::{Error, Result};

const ADAPT_EVERY: usize = 25;
const ADAPT_FACTOR: f64 = 5.0;

/// Regularized solver bound to a matrix and a group structure. `lambda` and
/// `y` vary per call; all factorizations are reused.
#[derive(Debug, Clone)]
pub struct RegularizedSolver {
    spec: RegularizerSpec,
    op: GroupOperator,
    q: BandedCholesky,
    /// `Q^-1 A^T`, `n x m`.
    w: DMatrix<f64>,
    /// `A Q^-1 A^T`, `m x m`.
    g: DMatrix<f64>,
    nnls: NnlsSolver,
}

impl RegularizedSolver {
    pub fn new(a: &DMatrix<f64>, spec: &RegularizerSpec, options: &SolverOptions) -> Result<Self> {
        let n = a.ncols();
        let op = GroupOperator::new(spec, n)?;
        let nnls = NnlsSolver::new(a, options)?;
        let q = op.gram_plus_identity().cholesky()?;
        let mut w = DMatrix::zeros(n, a.nrows());
        let mut col = vec![0.0; n];
        for i in 0..a.nrows() {
            col.iter_mut().zip(a.row(i).iter()).for_each(|(c, v)| *c = *v);
            q.solve_in_place(&mut col);
            w.column_mut(i).copy_from_slice(&col);
        }
        let g = a * &w;
        Ok(RegularizedSolver {
            spec: spec.clone(),
            op,
            q,
            w,
            g,
            nnls,
        })
    }

    pub fn spec(&self) -> &RegularizerSpec {
        &self.spec
    }

    pub fn nnls(&self) -> &NnlsSolver {
        &self.nnls
    }

    fn factor_c(&self, rho: f64) -> Result<Cholesky<f64, Dyn>> {
        let m = self.g.nrows();
        let c = DMatrix::identity(m, m) * 0.5 + &self.g / rho;
        Cholesky::new(c).ok_or_else(|| Error::Numerical("Woodbury core not positive definite".into()))
    }

    /// Solves with the stored structure and weights at strength `lambda`.
    /// `lambda == 0` (or kind `None`) is plain NNLS.
    pub fn solve(&self, y: &DVector<f64>, lambda: f64, options: &SolverOptions) -> Result<SolverResult> {
        self.solve_from(y, lambda, options, None)
    }

    /// As [`solve`](Self::solve), started from `init` (duals start at zero).
    /// Useful along a lambda path.
    pub fn solve_from(
        &self,
        y: &DVector<f64>,
        lambda: f64,
        options: &SolverOptions,
        init: Option<&[f64]>,
    ) -> Result<SolverResult> {
        let a = self.nnls.matrix();
        check_dims(a, y)?;
        options.validate()?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidRegularizer(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        if lambda == 0.0 || self.spec.kind == RegularizerKind::None {
            return self.nnls.solve(y, options);
        }

        let sp = self.nnls.sparse();
        let (m, n, rows) = (a.nrows(), a.ncols(), self.op.num_rows());
        let ys = y.as_slice();
        let theta = options.relaxation;

        let mut aty2 = vec![0.0; n];
        sp.tmul(ys, &mut aty2);
        aty2.iter_mut().for_each(|v| *v *= 2.0);

        let mut rho = options
            .rho
            .unwrap_or_else(|| (0.1 * self.nnls.lipschitz()).max(1e-12));
        let mut chol = self.factor_c(rho)?;

        let mut u = vec![0.0; n];
        if let Some(init) = init {
            if init.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "initial point has {} entries, expected {n}",
                    init.len()
                )));
            }
            u.iter_mut().zip(init).for_each(|(ui, v)| *ui = v.max(0.0));
        }
        let mut alpha = u.clone();
        let mut u_old = vec![0.0; n];
        let mut wu = vec![0.0; n];
        let mut z = vec![0.0; rows];
        self.op.apply(&u, &mut z);
        let mut z_old = vec![0.0; rows];
        let mut wz = vec![0.0; rows];
        let mut balpha = vec![0.0; rows];
        let mut bhat = vec![0.0; rows];
        let mut ahat = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut tmp_rows = vec![0.0; rows];
        let mut tmp_n = vec![0.0; n];
        let mut s = DVector::zeros(m);
        let mut resid = vec![0.0; m];

        let thresholds: Vec<f64> = self.spec.weights.iter().map(|c| lambda * c).collect();
        let mut history = Vec::new();
        let mut converged = false;
        let mut iterations = 0;

        while iterations < options.max_iters {
            iterations += 1;

            // a-update
            for i in 0..rows {
                tmp_rows[i] = z[i] - wz[i];
            }
            for i in 0..n {
                rhs[i] = aty2[i] + rho * (u[i] - wu[i]);
            }
            self.op.apply_t_add(&tmp_rows, rho, &mut rhs);
            self.q.solve_in_place(&mut rhs);
            sp.mul(&rhs, s.as_mut_slice());
            chol.solve_mut(&mut s);
            let corr = &self.w * &s;
            for i in 0..n {
                alpha[i] = (rhs[i] - corr[i] / rho) / rho;
            }
            self.op.apply(&alpha, &mut balpha);

            // Over-relaxation, then u- and z-updates.
            for i in 0..n {
                ahat[i] = theta * alpha[i] + (1.0 - theta) * u[i];
            }
            for i in 0..rows {
                bhat[i] = theta * balpha[i] + (1.0 - theta) * z[i];
            }
            std::mem::swap(&mut u, &mut u_old);
            std::mem::swap(&mut z, &mut z_old);
            for i in 0..n {
                u[i] = (ahat[i] + wu[i]).max(0.0);
            }
            for i in 0..rows {
                z[i] = bhat[i] + wz[i];
            }
            for j in 0..self.op.num_groups() {
                let r = self.op.group_rows(j);
                super::prox_group_l2_in_place(&mut z[r], thresholds[j] / rho);
            }
            for i in 0..n {
                wu[i] += ahat[i] - u[i];
            }
            for i in 0..rows {
                wz[i] += bhat[i] - z[i];
            }

            // Residuals.
            let r_pri = (dist(&alpha, &u).powi(2) + dist(&balpha, &z).powi(2)).sqrt();
            for i in 0..rows {
                tmp_rows[i] = z[i] - z_old[i];
            }
            for i in 0..n {
                tmp_n[i] = u[i] - u_old[i];
            }
            self.op.apply_t_add(&tmp_rows, 1.0, &mut tmp_n);
            let r_dual = rho * norm(&tmp_n);
            let primal_scale = (dot(&alpha, &alpha) + dot(&balpha, &balpha))
                .sqrt()
                .max((dot(&u, &u) + dot(&z, &z)).sqrt());
            tmp_n.copy_from_slice(&wu);
            self.op.apply_t_add(&wz, 1.0, &mut tmp_n);
            let dual_scale = rho * norm(&tmp_n);
            let eps_pri = ((n + rows) as f64).sqrt() * options.abs_tol + options.rel_tol * primal_scale;
            let eps_dual = (n as f64).sqrt() * options.abs_tol + options.rel_tol * dual_scale;

            if options.record_history {
                sp.mul(&u, &mut resid);
                let fit: f64 = resid.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)).sum();
                let pen: f64 = self
                    .op
                    .group_norms(&u)
                    .iter()
                    .zip(&thresholds)
                    .map(|(v, t)| v * t)
                    .sum();
                history.push(IterRecord {
                    iteration: iterations,
                    objective: fit + pen,
                    residual: r_pri.max(r_dual),
                });
            }

            if r_pri <= eps_pri && r_dual <= eps_dual {
                converged = true;
                break;
            }

            if iterations % ADAPT_EVERY == 0 {
                let np = r_pri / primal_scale.max(1e-300);
                let nd = r_dual / dual_scale.max(1e-300);
                if np > 0.0 && nd > 0.0 {
                    let ratio = (np / nd).sqrt();
                    if !(1.0 / ADAPT_FACTOR..=ADAPT_FACTOR).contains(&ratio) {
                        let new_rho = (rho * ratio).clamp(1e-8 * self.nnls.lipschitz().max(1e-300), 1e8 * self.nnls.lipschitz().max(1e-300));
                        if new_rho != rho {
                            let f = rho / new_rho;
                            wu.iter_mut().for_each(|v| *v *= f);
                            wz.iter_mut().for_each(|v| *v *= f);
                            rho = new_rho;
                            chol = self.factor_c(rho)?;
                        }
                    }
                }
            }
        }

        sp.mul(&u, &mut resid);
        let fit: f64 = resid.iter().zip(ys).map(|(a, b)| (a - b) * (a - b)).sum();
        let pen: f64 = self
            .op
            .group_norms(&u)
            .iter()
            .zip(&thresholds)
            .map(|(v, t)| v * t)
            .sum();
        Ok(SolverResult {
            alpha_hat: u,
            objective: fit + pen,
            iterations,
            converged,
            history,
        })
    }
}

/// One-shot regularized solve; see [`RegularizedSolver`] for repeated use.
pub fn regularized_solve(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    reg: &RegularizerSpec,
    options: &SolverOptions,
) -> Result<SolverResult> {
    check_dims(a, y)?;
    reg.validate(a.ncols())?;
    RegularizedSolver::new(a, reg, options)?.solve(y, reg.effective_lambda(), options)
}
