#![allow(dead_code)]

use gfra::harness::ExperimentConfig;
use gfra::solvers::RegularizerSpec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Lawson-Hanson active-set NNLS, independent of the production solver.
pub fn lawson_hanson(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);

    let ls = |passive: &[bool]| -> DVector<f64> {
        let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let mut out = DVector::zeros(n);
        if idx.is_empty() {
            return out;
        }
        let sub = a.select_columns(&idx);
        let sol = sub.svd(true, true).solve(b, 1e-14).expect("svd solve");
        for (k, &j) in idx.iter().enumerate() {
            out[j] = sol[k];
        }
        out
    };

    for _outer in 0..(3 * n + 10) {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let s = ls(&passive);
            if (0..n).filter(|&i| passive[i]).all(|i| s[i] > 0.0) {
                x = s;
                break;
            }
            let mut step = f64::INFINITY;
            for i in 0..n {
                if passive[i] && s[i] <= 0.0 {
                    step = step.min(x[i] / (x[i] - s[i]));
                }
            }
            x += (&s - &x) * step;
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x
}

pub fn sq_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a * x - b).norm_squared()
}

/// Dense matrix with uniform entries in `[0, 1)` and a given fraction of zeros.
pub fn random_nonneg_matrix<R: Rng>(rng: &mut R, m: usize, n: usize, zero_frac: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| {
        if rng.random::<f64>() < zero_frac {
            0.0
        } else {
            rng.random::<f64>()
        }
    })
}

/// Neighbor sets of a `side x side` grid with unit spacing: the cell itself
/// and its 4- or 8-neighbors.
pub fn grid_neighbors(side: usize, diagonal: bool) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for r in 0..side as i64 {
        for c in 0..side as i64 {
            let mut set = Vec::new();
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    if !diagonal && dr != 0 && dc != 0 {
                        continue;
                    }
                    let (rr, cc) = (r + dr, c + dc);
                    if rr >= 0 && cc >= 0 && rr < side as i64 && cc < side as i64 {
                        set.push((rr * side as i64 + cc) as usize);
                    }
                }
            }
            out.push(set);
        }
    }
    out
}

/// Direct evaluation of `||A x - y||^2 + lambda sum_j c_j ||B_j x||`, with
/// `B_j` built from the regularizer's definition.
pub fn reference_objective(a: &DMatrix<f64>, y: &DVector<f64>, reg: &RegularizerSpec, x: &[f64]) -> f64 {
    use gfra::solvers::RegularizerKind;
    let xv = DVector::from_column_slice(x);
    let fit = (a * &xv - y).norm_squared();
    let pen: f64 = reg
        .groups
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let s: f64 = match reg.kind {
                RegularizerKind::Glasso => g.iter().map(|&i| x[i] * x[i]).sum(),
                RegularizerKind::Tv => g.iter().filter(|&&i| i != k).map(|&i| (x[k] - x[i]).powi(2)).sum(),
                RegularizerKind::None => 0.0,
            };
            reg.weights[k] * s.sqrt()
        })
        .sum();
    fit + reg.lambda * pen
}

pub fn quick_config(trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::quick();
    cfg.n_trials = trials;
    cfg
}
