//! Sparse assembly of the discrete Dirac operator D, the zeroth-order term
//! A and D_eps = D + A / eps on grid domains, plus the Weitzenbock cross
//! term DᵀA + AᵀD.

pub mod mtx;
mod sparse;

use std::collections::BTreeMap;

use clifford_core::CliffordModel;
use domain_grid::{GridDomain, GridField, Metric};
use nalgebra::DMatrix;
use rayon::prelude::*;
use sw_algebra::{build_A, SWCaseData};
use thiserror::Error;

pub use sparse::SparseOperator;

#[derive(Debug, Error)]
pub enum OpError {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: (usize, usize), right: (usize, usize) },
    #[error("the Dirac operator is only assembled for the flat metric")]
    UnsupportedMetric,
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("scale parameter must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn sparse_rows(m: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).filter(|&c| m[(r, c)] != 0.0).map(|c| (c, m[(r, c)])).collect())
        .collect()
}

/// D = sum_j sigma(e^j) (x) centered difference along axis j.
#[allow(non_snake_case)]
pub fn assemble_D(domain: &GridDomain, model: &CliffordModel) -> Result<SparseOperator, OpError> {
    if domain.metric != Metric::Flat {
        return Err(OpError::UnsupportedMetric);
    }
    if model.dim != domain.dim {
        return Err(OpError::DimensionMismatch(format!(
            "model dimension {} on a {}-dimensional domain",
            model.dim, domain.dim
        )));
    }
    let f = model.fiber_dim;
    let n = domain.node_count() * f;
    let gam: Vec<_> = model.gamma.iter().map(sparse_rows).collect();
    let mut op = SparseOperator::from_rows(n, n, |row| {
        let (node, r) = (row / f, row % f);
        let mut acc = Vec::with_capacity(2 * domain.dim);
        for (axis, g) in gam.iter().enumerate() {
            let w = 0.5 / domain.h[axis];
            for (step, sign) in [(true, 1.0), (false, -1.0)] {
                if let Some(nb) = domain.neighbor(node, axis, step) {
                    for &(c, v) in &g[r] {
                        acc.push(((nb * f + c) as u32, sign * w * v));
                    }
                }
            }
        }
        sparse::compress(acc)
    });
    op.h = domain.h[0];
    op.symmetric = true;
    Ok(op)
}

/// Block-diagonal operator with `block(node)` on each node.
pub fn assemble_blocks<F>(nodes: usize, fiber: usize, block: F) -> SparseOperator
where
    F: Fn(usize) -> DMatrix<f64> + Sync,
{
    let rows: Vec<Vec<(u32, f64)>> = (0..nodes)
        .into_par_iter()
        .flat_map_iter(|node| {
            let b = block(node);
            assert_eq!(b.shape(), (fiber, fiber));
            (0..fiber)
                .map(|r| {
                    (0..fiber)
                        .filter(|&c| b[(r, c)] != 0.0)
                        .map(|c| ((node * fiber + c) as u32, b[(r, c)]))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .collect();
    let n = nodes * fiber;
    SparseOperator::from_rows(n, n, |r| rows[r].clone())
}

/// Node-wise zeroth-order term built from a sampled base spinor.
#[allow(non_snake_case)]
pub fn assemble_A(
    domain: &GridDomain,
    data: &SWCaseData,
    phi0: &GridField,
) -> Result<SparseOperator, OpError> {
    if phi0.fiber != data.spinor_dim || phi0.nodes() != domain.node_count() {
        return Err(OpError::DimensionMismatch(format!(
            "spinor field has {} nodes x {} components, expected {} x {}",
            phi0.nodes(),
            phi0.fiber,
            domain.node_count(),
            data.spinor_dim
        )));
    }
    let mut op = assemble_blocks(domain.node_count(), data.fiber_dim(), |node| {
        build_A(data, &phi0.vector_at(node)).expect("checked sizes")
    });
    op.h = domain.h[0];
    op.symmetric = true;
    Ok(op)
}

/// D_eps = D + A / eps.
#[allow(non_snake_case)]
pub fn assemble_Deps(d: &SparseOperator, a: &SparseOperator, eps: f64) -> Result<SparseOperator, OpError> {
    if !(eps > 0.0) {
        return Err(OpError::NonPositiveEps(eps));
    }
    let mut op = d.add_scaled(a, 1.0 / eps)?;
    op.h = d.h;
    op.eps = Some(eps);
    op.symmetric = d.symmetric && a.symmetric;
    Ok(op)
}

#[derive(Debug, Clone)]
pub struct WeitzenbockParts {
    pub dtd: SparseOperator,
    pub ata: SparseOperator,
    pub b_h: SparseOperator,
}

impl WeitzenbockParts {
    /// Largest entry of D_epsᵀD_eps - (DᵀD + AᵀA/eps² + B_h/eps).
    pub fn identity_residual(&self, deps: &SparseOperator) -> Result<f64, OpError> {
        let eps = deps.eps.ok_or_else(|| OpError::DimensionMismatch("D_eps carries no eps".into()))?;
        let lhs = deps.transpose().matmul(deps)?;
        let rhs = self
            .dtd
            .add_scaled(&self.ata, 1.0 / (eps * eps))?
            .add_scaled(&self.b_h, 1.0 / eps)?;
        lhs.max_abs_diff(&rhs)
    }
}

fn transposed(op: &SparseOperator) -> std::borrow::Cow<'_, SparseOperator> {
    if op.symmetric {
        std::borrow::Cow::Borrowed(op)
    } else {
        std::borrow::Cow::Owned(op.transpose())
    }
}

pub fn weitzenbock_extract(d: &SparseOperator, a: &SparseOperator) -> Result<WeitzenbockParts, OpError> {
    let dt = transposed(d);
    let at = transposed(a);
    let dtd = dt.matmul(d)?;
    let ata = at.matmul(a)?;
    let b_h = dt.matmul(a)?.add_scaled(&at.matmul(d)?, 1.0)?;
    Ok(WeitzenbockParts { dtd, ata, b_h })
}

/// ‖DᵀA + AᵀD‖_∞ computed row by row without forming the product.
pub fn cross_term_inf_norm(d: &SparseOperator, a: &SparseOperator) -> Result<f64, OpError> {
    if d.nrows != a.nrows || d.ncols != a.ncols || !d.is_square() {
        return Err(OpError::ShapeMismatch { left: (d.nrows, d.ncols), right: (a.nrows, a.ncols) });
    }
    let dt = transposed(d);
    let at = transposed(a);
    let norm = (0..d.nrows)
        .into_par_iter()
        .map(|r| {
            let mut acc = Vec::new();
            for (left, right) in [(&*dt, a), (&*at, d)] {
                let (idx, val) = left.row(r);
                for (&k, &v) in idx.iter().zip(val) {
                    let (ik, vk) = right.row(k as usize);
                    acc.extend(ik.iter().zip(vk).map(|(&c, &w)| (c, v * w)));
                }
            }
            sparse::compress(acc).iter().map(|e| e.1.abs()).sum::<f64>()
        })
        .reduce(|| 0.0, f64::max);
    Ok(norm)
}

/// max |P_H(x) D P_N(y)| over all node pairs: how far D is from preserving
/// the node-wise splitting.
pub fn splitting_leak<PH, PN>(d: &SparseOperator, fiber: usize, proj_h: PH, proj_n: PN) -> f64
where
    PH: Fn(usize) -> DMatrix<f64> + Sync,
    PN: Fn(usize) -> DMatrix<f64> + Sync,
{
    let nodes = d.nrows / fiber;
    (0..nodes)
        .into_par_iter()
        .map(|i| {
            let mut blocks: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
            for a in 0..fiber {
                let (idx, val) = d.row(i * fiber + a);
                for (&c, &v) in idx.iter().zip(val) {
                    let (j, b) = (c as usize / fiber, c as usize % fiber);
                    blocks.entry(j).or_insert_with(|| DMatrix::zeros(fiber, fiber))[(a, b)] += v;
                }
            }
            let ph = proj_h(i);
            blocks
                .iter()
                .map(|(&j, blk)| (&ph * blk * proj_n(j)).amax())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
