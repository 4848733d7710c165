//! Compressed sparse row storage.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::OpError;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
    /// Grid spacing of the assembled operator (0 when not grid-based).
    pub h: f64,
    pub eps: Option<f64>,
    /// Set when the operator is known to equal its transpose.
    pub symmetric: bool,
}

const PAR_ROWS: usize = 4096;

impl SparseOperator {
    /// Builds from (row, col, value) triplets; duplicates are summed and
    /// exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c as u32);
                values.push(v);
                rows_of.push(r);
                last = Some((r, c));
            }
        }
        let mut keep_i = Vec::with_capacity(indices.len());
        let mut keep_v = Vec::with_capacity(values.len());
        for ((c, v), r) in indices.into_iter().zip(values).zip(rows_of) {
            if v != 0.0 {
                keep_i.push(c);
                keep_v.push(v);
                indptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices: keep_i,
            values: keep_v,
            h: 0.0,
            eps: None,
            symmetric: false,
        }
    }

    /// Builds row by row; `row(r)` returns sorted, duplicate-free entries.
    pub fn from_rows<F>(nrows: usize, ncols: usize, row: F) -> Self
    where
        F: Fn(usize) -> Vec<(u32, f64)> + Sync,
    {
        let rows: Vec<Vec<(u32, f64)>> = (0..nrows).into_par_iter().map(&row).collect();
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for r in rows {
            for (c, v) in r {
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, values, h: 0.0, eps: None, symmetric: false }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n as u32).collect(),
            values: vec![1.0; n],
            h: 0.0,
            eps: None,
            symmetric: true,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_triplets(nrows, ncols, Vec::new())
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (idx, val) = self.row(r);
        match idx.binary_search(&(c as u32)) {
            Ok(k) => val[k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (idx, val) = self.row(r);
            idx.iter().zip(val).map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    /// y = M x.
    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        y.par_chunks_mut(PAR_ROWS).enumerate().for_each(|(chunk, ys)| {
            let base = chunk * PAR_ROWS;
            for (k, yr) in ys.iter_mut().enumerate() {
                let (idx, val) = self.row(base + k);
                let mut s = 0.0;
                for (&c, &v) in idx.iter().zip(val) {
                    s += v * x[c as usize];
                }
                *yr = s;
            }
        });
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.apply_into(x, &mut y);
        y
    }

    /// y = M^T x.
    pub fn apply_transpose_into(&self, x: &[f64], y: &mut [f64]) {
        if self.symmetric {
            return self.apply_into(x, y);
        }
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            let xr = x[r];
            if xr != 0.0 {
                for (&c, &v) in idx.iter().zip(val) {
                    y[c as usize] += v * xr;
                }
            }
        }
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c as usize + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut indices = vec![0u32; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (idx, val) = self.row(r);
            for (&c, &v) in idx.iter().zip(val) {
                let slot = next[c as usize];
                indices[slot] = r as u32;
                values[slot] = v;
                next[c as usize] += 1;
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr: counts,
            indices,
            values,
            h: self.h,
            eps: self.eps,
            symmetric: self.symmetric,
        }
    }

    /// self + s * other.
    pub fn add_scaled(&self, other: &Self, s: f64) -> Result<Self, OpError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(OpError::ShapeMismatch {
                left: (self.nrows, self.ncols),
                right: (other.nrows, other.ncols),
            });
        }
        let mut out = Self::from_rows(self.nrows, self.ncols, |r| {
            merge_rows(self.row(r), other.row(r), 1.0, s)
        });
        out.h = self.h;
        out.symmetric = self.symmetric && other.symmetric;
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Sparse product self * other.
    pub fn matmul(&self, other: &Self) -> Result<Self, OpError> {
        if self.ncols != other.nrows {
            return Err(OpError::ShapeMismatch {
                left: (self.nrows, self.ncols),
                right: (other.nrows, other.ncols),
            });
        }
        let out = Self::from_rows(self.nrows, other.ncols, |r| {
            let mut acc: Vec<(u32, f64)> = Vec::new();
            let (idx, val) = self.row(r);
            for (&k, &v) in idx.iter().zip(val) {
                let (ik, vk) = other.row(k as usize);
                acc.extend(ik.iter().zip(vk).map(|(&c, &w)| (c, v * w)));
            }
            compress(acc)
        });
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.nrows)
            .into_par_iter()
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .reduce(|| 0.0, f64::max)
    }

    /// max |M - M^T| entrywise.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut t2 = t.clone();
        t2.symmetric = false;
        let mut s = self.clone();
        s.symmetric = false;
        s.add_scaled(&t2, -1.0).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    /// Largest entrywise difference to another operator of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, OpError> {
        Ok(self.add_scaled(other, -1.0)?.max_abs())
    }
}

pub(crate) fn compress(mut acc: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    acc.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(acc.len());
    for (c, v) in acc {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += v,
            _ => out.push((c, v)),
        }
    }
    out
}

fn merge_rows(a: (&[u32], &[f64]), b: (&[u32], &[f64]), sa: f64, sb: f64) -> Vec<(u32, f64)> {
    let (ia, va) = a;
    let (ib, vb) = b;
    let mut out = Vec::with_capacity(ia.len() + ib.len());
    let (mut i, mut j) = (0, 0);
    while i < ia.len() || j < ib.len() {
        if j == ib.len() || (i < ia.len() && ia[i] < ib[j]) {
            out.push((ia[i], sa * va[i]));
            i += 1;
        } else if i == ia.len() || ib[j] < ia[i] {
            out.push((ib[j], sb * vb[j]));
            j += 1;
        } else {
            out.push((ia[i], sa * va[i] + sb * vb[j]));
            i += 1;
            j += 1;
        }
    }
    out
}
