//! Optimality certificate for the non-negative regularized problem.
//!
//! At `alpha`, the subdifferential of `F` is `2 A^T (A alpha - y) + lambda
//! sum_j c_j B_j^T v_j`, with `v_j = B_j alpha / ||B_j alpha||` for groups
//! off the kink and any `||v_j|| <= 1` for groups with `B_j alpha = 0`.
//! Optimality over the orthant asks for a zero component wherever
//! `alpha_k > 0` and a non-negative one wherever `alpha_k = 0`. The residual
//! is the smallest violation over all admissible `v`, found by projected
//! gradient on the free blocks.

use nalgebra::{DMatrix, DVector};

use super::groups::GroupOperator;
use super::linalg::{norm, SparseCols};
use super::{check_dims, RegularizerSpec};
use crate::error::Result;

const INNER_ITERS: usize = 20_000;

/// Violation norm for subgradient `r`; `positive[k]` marks `alpha_k > 0`.
fn violation(r: &[f64], positive: &[bool], out: &mut [f64]) -> f64 {
    let mut s = 0.0;
    for ((o, &rk), &p) in out.iter_mut().zip(r).zip(positive) {
        *o = if p { rk } else { rk.min(0.0) };
        s += *o * *o;
    }
    s.sqrt()
}

/// KKT residual with the default zero tolerance `1e-9 * max(1, max alpha)`.
pub fn kkt_residual(a: &DMatrix<f64>, y: &DVector<f64>, reg: &RegularizerSpec, alpha: &[f64]) -> Result<f64> {
    let scale = alpha.iter().copied().fold(1.0f64, f64::max);
    kkt_residual_with(a, y, reg, alpha, 1e-9 * scale)
}

/// KKT residual treating coordinates `<= zero_tol` as zero and groups with
/// `||B_j alpha|| <= zero_tol` as sitting on the kink.
pub fn kkt_residual_with(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    reg: &RegularizerSpec,
    alpha: &[f64],
    zero_tol: f64,
) -> Result<f64> {
    check_dims(a, y)?;
    let n = a.ncols();
    if alpha.len() != n {
        return Err(crate::Error::DimensionMismatch(format!(
            "alpha has {} entries, A has {} columns",
            alpha.len(),
            n
        )));
    }
    let sp = SparseCols::from_dense(a);
    let mut resid = vec![0.0; a.nrows()];
    sp.mul(alpha, &mut resid);
    resid.iter_mut().zip(y.iter()).for_each(|(r, yi)| *r -= yi);
    let mut g0 = vec![0.0; n];
    sp.tmul(&resid, &mut g0);
    g0.iter_mut().for_each(|v| *v *= 2.0);

    let positive: Vec<bool> = alpha.iter().map(|&v| v > zero_tol).collect();
    let mut out = vec![0.0; n];
    let lambda = reg.effective_lambda();
    if lambda == 0.0 {
        return Ok(violation(&g0, &positive, &mut out));
    }

    reg.validate(n)?;
    let op = GroupOperator::new(reg, n)?;
    let rows = op.num_rows();
    let mut balpha = vec![0.0; rows];
    op.apply(alpha, &mut balpha);

    // v holds lambda * c_j * (unit direction or free ball element).
    let mut v = vec![0.0; rows];
    let mut free = Vec::new();
    for j in 0..op.num_groups() {
        let range = op.group_rows(j);
        let nrm = norm(&balpha[range.clone()]);
        let radius = lambda * reg.weights[j];
        if nrm > zero_tol {
            for i in range {
                v[i] = radius * balpha[i] / nrm;
            }
        } else if !range.is_empty() {
            free.push((range, radius));
        }
    }

    let mut r = g0.clone();
    op.apply_t_add(&v, 1.0, &mut r);
    let mut best = violation(&r, &positive, &mut out);
    if free.is_empty() || best == 0.0 {
        return Ok(best);
    }

    // Minimize 0.5 * ||viol(g0 + B^T v)||^2 over the free balls with FISTA.
    let lip = op_norm_bound_sq(&op).max(1e-300);
    let step = 1.0 / lip;
    let mut grad_rows = vec![0.0; rows];
    let mut x = v.clone();
    let mut zv = v.clone();
    let mut t = 1.0f64;
    let mut x_new = v;
    let tol = 1e-13 * (1.0 + norm(&g0));
    for _ in 0..INNER_ITERS {
        r.copy_from_slice(&g0);
        op.apply_t_add(&zv, 1.0, &mut r);
        violation(&r, &positive, &mut out);
        op.apply(&out, &mut grad_rows);
        x_new.copy_from_slice(&x);
        for (range, radius) in &free {
            for i in range.clone() {
                x_new[i] = zv[i] - step * grad_rows[i];
            }
            let nrm = norm(&x_new[range.clone()]);
            if nrm > *radius {
                let f = radius / nrm;
                x_new[range.clone()].iter_mut().for_each(|e| *e *= f);
            }
        }
        r.copy_from_slice(&g0);
        op.apply_t_add(&x_new, 1.0, &mut r);
        let val = violation(&r, &positive, &mut out);
        let restart = val > best;
        best = best.min(val);
        if best <= tol {
            break;
        }
        if restart {
            t = 1.0;
            zv.copy_from_slice(&x);
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            for i in 0..rows {
                zv[i] = x_new[i] + beta * (x_new[i] - x[i]);
            }
            t = t_next;
            std::mem::swap(&mut x, &mut x_new);
        }
    }
    Ok(best)
}

/// `||B||^2 <= ||B||_1 ||B||_inf`.
fn op_norm_bound_sq(op: &GroupOperator) -> f64 {
    let rows = op.num_rows();
    let n = op.dim();
    let mut col_sums = vec![0.0; n];
    let mut max_row: f64 = 0.0;
    let mut e = vec![0.0; rows];
    let mut col = vec![0.0; n];
    for r in 0..rows {
        e[r] = 1.0;
        op.apply_t(&e, &mut col);
        e[r] = 0.0;
        let row_sum: f64 = col.iter().map(|v| v.abs()).sum();
        max_row = max_row.max(row_sum);
        col_sums.iter_mut().zip(&col).for_each(|(s, v)| *s += v.abs());
    }
    let max_col = col_sums.iter().copied().fold(0.0, f64::max);
    max_row * max_col
}
