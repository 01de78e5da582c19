//! Small linear-algebra kernels shared by the solvers.

use nalgebra::DMatrix;

/// Compressed sparse column copy of a dense matrix (exact zeros dropped).
#[derive(Debug, Clone)]
pub struct SparseCols {
    pub nrows: usize,
    pub ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseCols {
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        let mut col_ptr = Vec::with_capacity(a.ncols() + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for col in a.column_iter() {
            for (i, &v) in col.iter().enumerate() {
                if v != 0.0 {
                    row_idx.push(i);
                    vals.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        SparseCols {
            nrows: a.nrows(),
            ncols: a.ncols(),
            col_ptr,
            row_idx,
            vals,
        }
    }

    #[inline]
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `out = A x`
    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.col(j) {
                out[i] += v * xj;
            }
        }
    }

    /// `out = A^T r`
    pub fn tmul(&self, r: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.col(j).map(|(i, v)| v * r[i]).sum();
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Largest eigenvalue of `A^T A` by power iteration from the all-ones vector.
pub fn power_iteration(a: &SparseCols, max_iters: usize, rel_tol: f64) -> f64 {
    let n = a.ncols;
    if n == 0 || a.nrows == 0 {
        return 0.0;
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut av = vec![0.0; a.nrows];
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..max_iters.max(1) {
        a.mul(&v, &mut av);
        a.tmul(&av, &mut w);
        let next = dot(&v, &w);
        let nw = norm(&w);
        if nw == 0.0 {
            return 0.0;
        }
        v.iter_mut().zip(&w).for_each(|(vi, wi)| *vi = wi / nw);
        let done = (next - lambda).abs() <= rel_tol * next.abs();
        lambda = next;
        if done {
            break;
        }
    }
    // One more Rayleigh quotient with the final vector.
    a.mul(&v, &mut av);
    lambda.max(dot(&av, &av))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_products_match_dense() {
        let a = DMatrix::from_row_slice(3, 4, &[1.0, 0.0, 2.0, 0.0, 0.0, 3.0, 0.0, -1.0, 4.0, 0.0, 0.0, 5.0]);
        let s = SparseCols::from_dense(&a);
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut out = [0.0; 3];
        s.mul(&x, &mut out);
        let dense = &a * nalgebra::DVector::from_column_slice(&x);
        assert_eq!(out.as_slice(), dense.as_slice());
        let r = [1.0, 2.0, -1.0];
        let mut out_t = [0.0; 4];
        s.tmul(&r, &mut out_t);
        let dense_t = a.transpose() * nalgebra::DVector::from_column_slice(&r);
        assert_eq!(out_t.as_slice(), dense_t.as_slice());
    }

    #[test]
    fn power_iteration_finds_top_eigenvalue() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        let l = power_iteration(&SparseCols::from_dense(&a), 200, 1e-12);
        assert!((l - 9.0).abs() < 1e-8, "{l}");
    }
}
