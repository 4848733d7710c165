//! Iterative solvers: conjugate gradients, inverse iteration for the bottom
//! of the spectrum of D_epsᵀD_eps, least-squares solves, screened Poisson
//! Green's functions on balls and a radial shooting reference.

mod cg;
pub mod green;
pub mod radial;

use nalgebra::DMatrix;
use op_assembly::SparseOperator;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub use cg::{cg_solve, check_symmetric, CgOptions, CgOutcome};
use cg::{axpy, dot, norm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub rel_residual: f64,
    pub wall_time_s: f64,
    pub converged: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("operator failed the symmetry check: <Mu,v> = {lhs:e}, <u,Mv> = {rhs:e}")]
    NotSymmetric { lhs: f64, rhs: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{what} did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged { what: &'static str, residual: f64, iterations: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        assert!(self.is_square());
        self.nrows
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y);
    }
}

/// MᵀM applied as two products.
pub struct NormalOperator<'a>(pub &'a SparseOperator);

impl LinearOperator for NormalOperator<'_> {
    fn dim(&self) -> usize {
        self.0.ncols
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let mut t = vec![0.0; self.0.nrows];
        self.0.apply_into(x, &mut t);
        self.0.apply_transpose_into(&t, y);
    }
}

/// Node-block projector on a field with `fiber` components per node.
#[derive(Debug, Clone)]
pub enum NodeProjector {
    Uniform { fiber: usize, p: DMatrix<f64> },
    PerNode { fiber: usize, p: Vec<DMatrix<f64>> },
}

impl NodeProjector {
    pub fn fiber(&self) -> usize {
        match self {
            NodeProjector::Uniform { fiber, .. } | NodeProjector::PerNode { fiber, .. } => *fiber,
        }
    }

    pub fn block(&self, node: usize) -> &DMatrix<f64> {
        match self {
            NodeProjector::Uniform { p, .. } => p,
            NodeProjector::PerNode { p, .. } => &p[node],
        }
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let f = self.fiber();
        for (node, (xs, ys)) in x.chunks(f).zip(y.chunks_mut(f)).enumerate() {
            let p = self.block(node);
            for r in 0..f {
                ys[r] = (0..f).map(|c| p[(r, c)] * xs[c]).sum();
            }
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        y
    }

    /// Pointwise norm of the projected field.
    pub fn pointwise_norm(&self, x: &[f64]) -> Vec<f64> {
        let f = self.fiber();
        self.project(x).chunks(f).map(norm).collect()
    }
}

/// P M P + (I - P): the restriction of M to the range of P, extended by the
/// identity on the complement so the operator stays definite.
pub struct ProjectedOperator<'a, M: LinearOperator + ?Sized> {
    pub inner: &'a M,
    pub proj: &'a NodeProjector,
}

impl<M: LinearOperator + ?Sized> LinearOperator for ProjectedOperator<'_, M> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = x.len();
        let px = self.proj.project(x);
        let mut t = vec![0.0; n];
        self.inner.apply(&px, &mut t);
        self.proj.apply(&t, y);
        for i in 0..n {
            y[i] += x[i] - px[i];
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Target for |Mq - lambda q| / |q|.
    pub tol: f64,
    pub max_outer: usize,
    pub inner: CgOptions,
    pub seed: u64,
    /// Volume element h^n used for the L² normalization of q.
    pub measure: f64,
    /// Return the last iterate instead of an error when `tol` is not met.
    pub accept_unconverged: bool,
    /// Starting vector; a seeded Gaussian vector when absent.
    pub start: Option<Vec<f64>>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_outer: 200,
            inner: CgOptions { tol: 1e-10, maxit: 10_000, check_symmetry: false },
            seed: 1,
            measure: 1.0,
            accept_unconverged: false,
            start: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    /// L²-normalized with the configured measure.
    pub q: Vec<f64>,
    pub residual: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
}

/// Smallest eigenpair of a symmetric positive semidefinite operator by
/// inverse iteration with CG inner solves. Iterates stay in the range of
/// `proj` (if given) and orthogonal to `deflate`.
pub fn inverse_iteration<M: LinearOperator + ?Sized>(
    m: &M,
    proj: Option<&NodeProjector>,
    deflate: &[Vec<f64>],
    opts: &EigenOptions,
) -> Result<EigenPair, SolverError> {
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let clean = |v: &mut Vec<f64>| {
        if let Some(p) = proj {
            *v = p.project(v);
        }
        for d in deflate {
            let c = dot(v, d) / dot(d, d);
            axpy(-c, d, v);
        }
    };
    let mut x: Vec<f64> = match &opts.start {
        Some(s) if s.len() != n => return Err(SolverError::DimensionMismatch { expected: n, got: s.len() }),
        Some(s) => s.clone(),
        None => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
    };
    clean(&mut x);
    let nx = norm(&x);
    if nx == 0.0 {
        return Err(SolverError::Invalid("empty search space".into()));
    }
    x.iter_mut().for_each(|v| *v /= nx);
    let mut inner_total = 0;
    let mut mx = vec![0.0; n];
    let (mut lambda, mut residual) = (f64::NAN, f64::INFINITY);
    let mut outer = 0;
    while outer < opts.max_outer {
        outer += 1;
        let sol = match proj {
            Some(p) => cg_solve(&ProjectedOperator { inner: m, proj: p }, &x, Some(&x), &opts.inner)?,
            None => cg_solve(m, &x, Some(&x), &opts.inner)?,
        };
        inner_total += sol.report.iterations;
        let mut y = sol.x;
        clean(&mut y);
        let ny = norm(&y);
        if ny == 0.0 || !ny.is_finite() {
            return Err(SolverError::Invalid("inverse iteration collapsed".into()));
        }
        y.iter_mut().for_each(|v| *v /= ny);
        x = y;
        m.apply(&x, &mut mx);
        lambda = dot(&mx, &x);
        residual = mx.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        if residual <= opts.tol {
            break;
        }
    }
    let converged = residual <= opts.tol;
    if !converged && !opts.accept_unconverged {
        return Err(SolverError::NotConverged { what: "inverse iteration", residual, iterations: outer });
    }
    let scale = 1.0 / opts.measure.sqrt();
    x.iter_mut().for_each(|v| *v *= scale);
    Ok(EigenPair {
        lambda,
        q: x,
        residual,
        outer_iterations: outer,
        inner_iterations: inner_total,
        converged,
    })
}

/// Smallest eigenpair of D_epsᵀD_eps, optionally restricted to the range of
/// a node projector.
pub fn kernel_approx(
    deps: &SparseOperator,
    proj: Option<&NodeProjector>,
    opts: &EigenOptions,
) -> Result<EigenPair, SolverError> {
    inverse_iteration(&NormalOperator(deps), proj, &[], opts)
}

/// Least-squares solution of D_eps q = f through CG on the normal equations.
pub fn solve_inhomogeneous(
    deps: &SparseOperator,
    f: &[f64],
    opts: &CgOptions,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    if f.len() != deps.nrows {
        return Err(SolverError::DimensionMismatch { expected: deps.nrows, got: f.len() });
    }
    let mut rhs = vec![0.0; deps.ncols];
    deps.apply_transpose_into(f, &mut rhs);
    let out = cg_solve(&NormalOperator(deps), &rhs, None, opts)?;
    if !out.report.converged {
        return Err(SolverError::NotConverged {
            what: "normal-equation CG",
            residual: out.report.rel_residual,
            iterations: out.report.iterations,
        });
    }
    Ok((out.x, out.report))
}
