//! Accelerated projected gradient for NNLS with support polishing.

use nalgebra::{DMatrix, DVector};

use super::linalg::{dot, norm, power_iteration, SparseCols};
use super::{check_dims, IterRecord, SolverOptions, SolverResult};
use crate::error::Result;

const CHECK_EVERY: usize = 10;

/// NNLS solver bound to one measurement matrix; reusable across `y`.
#[derive(Debug, Clone)]
pub struct NnlsSolver {
    a: DMatrix<f64>,
    sp: SparseCols,
    /// Lipschitz constant of the gradient of `||A x - y||^2`.
    lipschitz: f64,
}

/// Norm of the NNLS optimality violation for gradient `g` at `x`.
pub(crate) fn projected_gradient_norm(x: &[f64], g: &[f64]) -> f64 {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            let v = if xi > 0.0 { gi } else { gi.min(0.0) };
            v * v
        })
        .sum::<f64>()
        .sqrt()
}

impl NnlsSolver {
    pub fn new(a: &DMatrix<f64>, options: &SolverOptions) -> Result<Self> {
        if a.iter().any(|v| !v.is_finite()) {
            return Err(crate::Error::NonFinite("A"));
        }
        let sp = SparseCols::from_dense(a);
        // Power iteration approaches the top eigenvalue from below.
        let lipschitz = 2.0 * power_iteration(&sp, options.power_iters, 1e-6) * 1.05;
        Ok(NnlsSolver {
            a: a.clone(),
            sp,
            lipschitz,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub(crate) fn sparse(&self) -> &SparseCols {
        &self.sp
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Gradient `2 A^T (A x - y)`; returns `||A x - y||^2`.
    fn gradient(&self, x: &[f64], y: &[f64], r: &mut [f64], g: &mut [f64]) -> f64 {
        self.sp.mul(x, r);
        r.iter_mut().zip(y).for_each(|(ri, yi)| *ri -= yi);
        self.sp.tmul(r, g);
        g.iter_mut().for_each(|v| *v *= 2.0);
        dot(r, r)
    }

    /// Least squares restricted to the current support, clipped at zero.
    fn polish(&self, x: &[f64], y: &DVector<f64>) -> Option<Vec<f64>> {
        let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
        if support.is_empty() || support.len() > self.a.nrows() {
            return None;
        }
        let sub = self.a.select_columns(support.iter());
        let svd = sub.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return None;
        }
        let beta = svd.solve(y, 0.0).ok()?;
        let mut out = vec![0.0; x.len()];
        for (&i, &b) in support.iter().zip(beta.iter()) {
            out[i] = b.max(0.0);
        }
        Some(out)
    }

    pub fn solve(&self, y: &DVector<f64>, options: &SolverOptions) -> Result<SolverResult> {
        check_dims(&self.a, y)?;
        options.validate()?;
        let (m, n) = (self.a.nrows(), self.a.ncols());
        let ys = y.as_slice();
        let mut r = vec![0.0; m];
        let mut g = vec![0.0; n];

        let zero = vec![0.0; n];
        self.gradient(&zero, ys, &mut r, &mut g);
        let tol = options.abs_tol + options.rel_tol * norm(&g);
        let step = if self.lipschitz > 0.0 { 1.0 / self.lipschitz } else { 0.0 };

        let mut x = zero.clone();
        let mut z = zero;
        let mut x_new = vec![0.0; n];
        let mut t = 1.0f64;
        let mut history = Vec::new();
        let mut converged = false;
        let mut iterations = 0;

        // The zero vector may already be optimal (e.g. y <= 0 componentwise).
        if projected_gradient_norm(&x, &g) <= tol {
            converged = true;
        }

        while !converged && iterations < options.max_iters {
            iterations += 1;
            self.gradient(&z, ys, &mut r, &mut g);
            for i in 0..n {
                x_new[i] = (z[i] - step * g[i]).max(0.0);
            }
            let restart = (0..n).map(|i| (z[i] - x_new[i]) * (x_new[i] - x[i])).sum::<f64>() > 0.0;
            if restart {
                t = 1.0;
                z.copy_from_slice(&x_new);
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let beta = (t - 1.0) / t_next;
                for i in 0..n {
                    z[i] = x_new[i] + beta * (x_new[i] - x[i]);
                }
                t = t_next;
            }
            std::mem::swap(&mut x, &mut x_new);

            if iterations % CHECK_EVERY == 0 || iterations == options.max_iters {
                let f = self.gradient(&x, ys, &mut r, &mut g);
                let res = projected_gradient_norm(&x, &g);
                if options.record_history {
                    history.push(IterRecord {
                        iteration: iterations,
                        objective: f,
                        residual: res,
                    });
                }
                if res <= tol {
                    converged = true;
                    break;
                }
                if let Some(p) = self.polish(&x, y) {
                    let fp = self.gradient(&p, ys, &mut r, &mut g);
                    let rp = projected_gradient_norm(&p, &g);
                    if rp <= tol && fp <= f * (1.0 + 1e-12) + 1e-300 {
                        x = p;
                        converged = true;
                        break;
                    }
                }
            }
        }

        let objective = self.gradient(&x, ys, &mut r, &mut g);
        Ok(SolverResult {
            alpha_hat: x,
            objective,
            iterations,
            converged,
            history,
        })
    }
}

/// Solves `min ||A alpha - y||^2 s.t. alpha >= 0`.
pub fn nnls_solve(a: &DMatrix<f64>, y: &DVector<f64>, options: &SolverOptions) -> Result<SolverResult> {
    check_dims(a, y)?;
    NnlsSolver::new(a, options)?.solve(y, options)
}
