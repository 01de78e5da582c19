//! Cholesky factorization of symmetric positive definite banded matrices.

use crate::error::{Error, Result};

/// Lower-triangular band storage; entry `(i, j)` with `i - w <= j <= i`.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    w: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        let w = half_bandwidth.min(n.saturating_sub(1));
        BandedMatrix {
            n,
            w,
            data: vec![0.0; n * (w + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.w
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.w);
        i * (self.w + 1) + (j + self.w - i)
    }

    /// Symmetric entry; `(i, j)` and `(j, i)` address the same storage.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.w {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.w, "entry ({i}, {j}) outside band {}", self.w);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let (n, w) = (self.n, self.w);
        for i in 0..n {
            let lo = i.saturating_sub(w);
            for j in lo..=i {
                let klo = lo.max(j.saturating_sub(w));
                let mut s = self.data[self.idx(i, j)];
                for k in klo..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let pos = self.idx(i, j);
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::Numerical(format!(
                            "banded matrix not positive definite at pivot {i}"
                        )));
                    }
                    self.data[pos] = s.sqrt();
                } else {
                    self.data[pos] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Ok(BandedCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    l: BandedMatrix,
}

impl BandedCholesky {
    pub fn dim(&self) -> usize {
        self.l.n
    }

    /// Solves `L L^T x = b` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let (n, w) = (self.l.n, self.l.w);
        let l = &self.l;
        for i in 0..n {
            let mut s = x[i];
            for k in i.saturating_sub(w)..i {
                s -= l.data[l.idx(i, k)] * x[k];
            }
            x[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..(i + w + 1).min(n) {
                s -= l.data[l.idx(k, i)] * x[k];
            }
            x[i] = s / l.data[l.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn solves_tridiagonal_system() {
        let n = 7;
        let mut b = BandedMatrix::zeros(n, 1);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            b.add(i, i, 4.0);
            dense[(i, i)] = 4.0;
            if i > 0 {
                b.add(i, i - 1, -1.0);
                dense[(i, i - 1)] = -1.0;
                dense[(i - 1, i)] = -1.0;
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let mut x = rhs.clone();
        b.cholesky().unwrap().solve_in_place(&mut x);
        let check = &dense * DVector::from_column_slice(&x);
        for i in 0..n {
            assert!((check[i] - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut b = BandedMatrix::zeros(2, 1);
        b.add(0, 0, 1.0);
        b.add(1, 1, 1.0);
        b.add(1, 0, 2.0);
        assert!(b.cholesky().is_err());
    }
}
