//! Linear operator `B = [B_1; ...; B_G]` whose group blocks carry the
//! regularizer: coordinate selections for GLASSO, neighbor differences for TV.

use std::ops::Range;

use super::banded::BandedMatrix;
use super::{RegularizerKind, RegularizerSpec};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct GroupOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    entries: Vec<(usize, f64)>,
    group_ptr: Vec<usize>,
}

impl GroupOperator {
    pub fn new(spec: &RegularizerSpec, dim: usize) -> Result<Self> {
        spec.validate(dim)?;
        let mut op = GroupOperator {
            dim,
            row_ptr: vec![0],
            entries: Vec::new(),
            group_ptr: vec![0],
        };
        match spec.kind {
            RegularizerKind::None => {}
            RegularizerKind::Glasso => {
                for group in &spec.groups {
                    for &i in group {
                        op.entries.push((i, 1.0));
                        op.row_ptr.push(op.entries.len());
                    }
                    op.group_ptr.push(op.row_ptr.len() - 1);
                }
            }
            RegularizerKind::Tv => {
                for (k, group) in spec.groups.iter().enumerate() {
                    for &i in group.iter().filter(|&&i| i != k) {
                        op.entries.push((k, 1.0));
                        op.entries.push((i, -1.0));
                        op.row_ptr.push(op.entries.len());
                    }
                    op.group_ptr.push(op.row_ptr.len() - 1);
                }
            }
        }
        Ok(op)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn num_groups(&self) -> usize {
        self.group_ptr.len() - 1
    }

    pub fn group_rows(&self, j: usize) -> Range<usize> {
        self.group_ptr[j]..self.group_ptr[j + 1]
    }

    #[inline]
    fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.entries[self.row_ptr[r]..self.row_ptr[r + 1]]
    }

    /// `out = B x`
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.row(r).iter().map(|&(c, v)| v * x[c]).sum();
        }
    }

    /// `out = B^T z`
    pub fn apply_t(&self, z: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        self.apply_t_add(z, 1.0, out);
    }

    /// `out += scale * B^T z`
    pub fn apply_t_add(&self, z: &[f64], scale: f64, out: &mut [f64]) {
        for (r, &zr) in z.iter().enumerate() {
            if zr == 0.0 {
                continue;
            }
            for &(c, v) in self.row(r) {
                out[c] += scale * v * zr;
            }
        }
    }

    /// `||B_j x||_2` for every group.
    pub fn group_norms(&self, x: &[f64]) -> Vec<f64> {
        let mut bx = vec![0.0; self.num_rows()];
        self.apply(x, &mut bx);
        (0..self.num_groups())
            .map(|j| bx[self.group_rows(j)].iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }

    /// `I + B^T B` in band storage.
    pub fn gram_plus_identity(&self) -> BandedMatrix {
        let w = (0..self.num_rows())
            .map(|r| {
                let cols = self.row(r).iter().map(|e| e.0);
                cols.clone().max().unwrap_or(0) - cols.min().unwrap_or(0)
            })
            .max()
            .unwrap_or(0);
        let mut m = BandedMatrix::zeros(self.dim, w);
        for i in 0..self.dim {
            m.add(i, i, 1.0);
        }
        for r in 0..self.num_rows() {
            let row = self.row(r);
            for (a, &(ca, va)) in row.iter().enumerate() {
                m.add(ca, ca, va * va);
                for &(cb, vb) in &row[a + 1..] {
                    let f = if ca == cb { 2.0 } else { 1.0 };
                    m.add(ca, cb, f * va * vb);
                }
            }
        }
        m
    }
}
