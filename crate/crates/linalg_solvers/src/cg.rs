use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{LinearOperator, SolveReport, SolverError};

#[derive(Debug, Clone, Copy)]
pub struct CgOptions {
    pub tol: f64,
    pub maxit: usize,
    /// Sampled check of <Mu, v> = <u, Mv> before iterating.
    pub check_symmetry: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-10, maxit: 20_000, check_symmetry: true }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub report: SolveReport,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn check_symmetric<M: LinearOperator + ?Sized>(m: &M, seed: u64) -> Result<(), SolverError> {
    let n = m.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut mu = vec![0.0; n];
    let mut mv = vec![0.0; n];
    m.apply(&u, &mut mu);
    m.apply(&v, &mut mv);
    let (a, b) = (dot(&mu, &v), dot(&u, &mv));
    let scale = norm(&mu) * norm(&v) + norm(&u) * norm(&mv);
    if (a - b).abs() > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(SolverError::NotSymmetric { lhs: a, rhs: b });
    }
    Ok(())
}

/// Conjugate gradients for a symmetric positive semidefinite operator.
/// Stops on the true relative residual |Mx - b| / |b|. Hitting `maxit`
/// returns the last iterate with `converged = false`.
pub fn cg_solve<M: LinearOperator + ?Sized>(
    m: &M,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<CgOutcome, SolverError> {
    let n = m.dim();
    if b.len() != n || x0.is_some_and(|x| x.len() != n) {
        return Err(SolverError::DimensionMismatch { expected: n, got: b.len() });
    }
    if opts.check_symmetry {
        check_symmetric(m, 0x5eed)?;
    }
    let start = Instant::now();
    let bnorm = norm(b);
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    if bnorm == 0.0 && x.iter().all(|v| *v == 0.0) {
        return Ok(CgOutcome {
            x,
            report: SolveReport { iterations: 0, rel_residual: 0.0, wall_time_s: 0.0, converged: true },
        });
    }
    let denom = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut r = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut it = 0;
    let mut rel;
    loop {
        // (Re)start from the true residual.
        m.apply(&x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        rel = norm(&r) / denom;
        if rel <= opts.tol || it >= opts.maxit {
            break;
        }
        let mut p = r.clone();
        let mut rr = dot(&r, &r);
        let mut inner_done = false;
        while it < opts.maxit {
            m.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                // Direction in the null space: nothing more to gain here.
                break;
            }
            let alpha = rr / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            it += 1;
            let rr_new = dot(&r, &r);
            if rr_new.sqrt() / denom <= opts.tol {
                inner_done = true;
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if !inner_done && it < opts.maxit {
            m.apply(&x, &mut ap);
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
            rel = norm(&r) / denom;
            break;
        }
    }
    Ok(CgOutcome {
        x,
        report: SolveReport {
            iterations: it,
            rel_residual: rel,
            wall_time_s: start.elapsed().as_secs_f64(),
            converged: rel <= opts.tol,
        },
    })
}
