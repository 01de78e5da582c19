//! Projected subgradient descent: slow, simple and independent of the ADMM
//! path. Runs in epochs with a constant step that halves each epoch, each
//! epoch restarting from the best iterate so far. Used to cross-check the production solvers on small instances.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::groups::GroupOperator;
use super::linalg::{norm, power_iteration, SparseCols};
use super::{check_dims, RegularizerSpec, SolverResult};
use crate::error::Result;

pub fn subgradient_oracle<R: Rng + ?Sized>(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    reg: &RegularizerSpec,
    iters: usize,
    rng: &mut R,
) -> Result<SolverResult> {
    check_dims(a, y)?;
    let n = a.ncols();
    let lambda = reg.effective_lambda();
    let op = if lambda > 0.0 {
        Some(GroupOperator::new(reg, n)?)
    } else {
        None
    };
    let sp = SparseCols::from_dense(a);
    let lip = 2.0 * power_iteration(&sp, 200, 1e-12);
    let step0 = if lip > 0.0 { 1.0 / lip } else { 1.0 };

    let rows = op.as_ref().map_or(0, |o| o.num_rows());
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut resid = vec![0.0; a.nrows()];
    let mut g = vec![0.0; n];
    let mut bx = vec![0.0; rows];
    let mut dirs = vec![0.0; rows];

    let eval = |x: &[f64], resid: &mut [f64], bx: &mut [f64]| -> f64 {
        sp.mul(x, resid);
        let fit: f64 = resid.iter().zip(y.iter()).map(|(r, yi)| (r - yi) * (r - yi)).sum();
        let pen = match &op {
            Some(op) => {
                op.apply(x, bx);
                (0..op.num_groups())
                    .map(|j| reg.weights[j] * norm(&bx[op.group_rows(j)]))
                    .sum::<f64>()
                    * lambda
            }
            None => 0.0,
        };
        fit + pen
    };

    let mut best_x = x.clone();
    let mut best = eval(&x, &mut resid, &mut bx);
    let epochs = 30;
    let epoch_len = (iters / epochs).max(1);
    for k in 0..iters {
        if k > 0 && k % epoch_len == 0 {
            x.copy_from_slice(&best_x);
        }
        // Subgradient at x.
        sp.mul(&x, &mut resid);
        resid.iter_mut().zip(y.iter()).for_each(|(r, yi)| *r -= yi);
        sp.tmul(&resid, &mut g);
        g.iter_mut().for_each(|v| *v *= 2.0);
        if let Some(op) = &op {
            op.apply(&x, &mut bx);
            for j in 0..op.num_groups() {
                let range = op.group_rows(j);
                let nrm = norm(&bx[range.clone()]);
                for i in range {
                    dirs[i] = if nrm > 0.0 {
                        lambda * reg.weights[j] * bx[i] / nrm
                    } else {
                        0.0
                    };
                }
            }
            op.apply_t_add(&dirs, 1.0, &mut g);
        }
        let step = step0 * 0.5f64.powi((k / epoch_len) as i32);
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi = (*xi - step * gi).max(0.0));
        let f = eval(&x, &mut resid, &mut bx);
        if f < best {
            best = f;
            best_x.copy_from_slice(&x);
        }
    }
    Ok(SolverResult {
        alpha_hat: best_x,
        objective: best,
        iterations: iters,
        converged: true,
        history: Vec::new(),
    })
}
