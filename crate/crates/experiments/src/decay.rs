use linalg_solvers::{kernel_approx, solve_inhomogeneous, CgOptions, EigenOptions};
use nalgebra::DVector;
use op_assembly::{assemble_blocks, SparseOperator};
use serde::Serialize;
use sw_algebra::build_A_eps;

use crate::fit::{linear_fit, shell_sups, LinearFit};
use crate::{ExperimentError, Problem, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayMode {
    /// Lowest eigenpair of D_εᵀD_ε restricted to 𝔥.
    Kernel,
    /// Least-squares solve of D_ε q = f with f on the core of 𝒵.
    Inhomogeneous,
}

#[derive(Debug, Clone)]
pub struct DecayOptions {
    pub eps: f64,
    pub mode: DecayMode,
    pub cg: CgOptions,
    pub eigen: EigenOptions,
    /// Overrides the default R_K = max(6h, 3ε/Λ_K).
    pub r_k: Option<f64>,
}

impl DecayOptions {
    pub fn new(eps: f64, mode: DecayMode) -> Self {
        Self {
            eps,
            mode,
            cg: CgOptions { tol: 1e-10, maxit: 20_000, check_symmetry: false },
            eigen: EigenOptions {
                tol: 1e-6,
                max_outer: 60,
                inner: CgOptions { tol: 1e-10, maxit: 5_000, check_symmetry: false },
                accept_unconverged: true,
                ..EigenOptions::default()
            },
            r_k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub eps: f64,
    pub mode: DecayMode,
    pub h: f64,
    pub lambda_k: f64,
    pub r_k: f64,
    /// Shell radii k·2h.
    pub shell_radii: Vec<f64>,
    /// sup of |π_𝔥 q| over each shell.
    pub shell_sup: Vec<f64>,
    /// ‖q‖ in L^{1,2} over K' = {dist >= R_K / 2}.
    pub norm_l12: f64,
    pub fit: LinearFit,
    pub window: [f64; 2],
    /// Kernel mode only.
    pub lambda_min: Option<f64>,
    pub solver_iterations: usize,
    pub solver_residual: f64,
}

impl DecayReport {
    /// slope·ε/Λ_K, the quantity that should stay in a fixed band.
    pub fn scaled_slope(&self) -> f64 {
        self.fit.slope * self.eps / self.lambda_k
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(ExperimentError::Invalid(format!("eps must be positive, got {eps}")))
    }
}

/// Shell profile and fit of ln(shell_sup) against R over the window
/// R_K + 4h <= R <= 0.9 R_max, keeping shells above the round-off floor.
pub(crate) fn decay_report(
    p: &Problem,
    q: &[f64],
    eps: f64,
    mode: DecayMode,
    r_k: f64,
    lambda_min: Option<f64>,
    iterations: usize,
    residual: f64,
) -> Result<DecayReport> {
    let h = p.h();
    let (_, rk, lk) = p.compact_set(r_k);
    let norms = p.h_norms(q);
    let w = 2.0 * h;
    let shells = shell_sups(&p.domain.dist_field, &norms, w);
    let radii: Vec<f64> = shells.iter().map(|(k, _)| *k as f64 * w).collect();
    let sups: Vec<f64> = shells.iter().map(|(_, s)| *s).collect();
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let floor = 1e3 * f64::EPSILON * norms.iter().cloned().fold(0.0, f64::max);
    let window = [r_k + 4.0 * h, 0.9 * r_max];
    let (x, y): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .zip(&sups)
        .filter(|(r, s)| **r >= window[0] && **r <= window[1] && **s > floor)
        .map(|(r, s)| (*r, s.ln()))
        .unzip();
    if x.len() < 3 {
        return Err(ExperimentError::InsufficientShells { found: x.len(), needed: 3 });
    }
    let (k_outer, _) = p.domain.compact_set(0.5 * r_k);
    Ok(DecayReport {
        eps,
        mode,
        h,
        lambda_k: lk,
        r_k: rk,
        shell_radii: radii,
        shell_sup: sups,
        norm_l12: p.l12_norm(q, &k_outer),
        fit: linear_fit(&x, &y),
        window,
        lambda_min,
        solver_iterations: iterations,
        solver_residual: residual,
    })
}

/// Decay of the 𝔥-component away from 𝒵 for the linear operator D + 𝒜/ε.
pub fn run_linear_decay(p: &Problem, opts: &DecayOptions) -> Result<DecayReport> {
    check_eps(opts.eps)?;
    let r_k = opts.r_k.unwrap_or_else(|| p.default_rk(opts.eps));
    let deps = p.Deps(opts.eps)?;
    match opts.mode {
        DecayMode::Inhomogeneous => {
            let f = p.core_source()?;
            let (q, rep) = solve_inhomogeneous(&deps, &f, &opts.cg)?;
            decay_report(p, &q, opts.eps, opts.mode, r_k, None, rep.iterations, rep.rel_residual)
        }
        DecayMode::Kernel => {
            let eig = p.kernel_options(&opts.eigen);
            let pair = kernel_approx(&deps, Some(&p.proj_h), &eig)?;
            decay_report(
                p,
                &pair.q,
                opts.eps,
                opts.mode,
                r_k,
                Some(pair.lambda),
                pair.inner_iterations,
                pair.residual,
            )
        }
    }
}

#[derive(Debug, Clone)]
pub struct NonlinearOptions {
    pub decay: DecayOptions,
    pub coupling: f64,
    pub picard_tol: f64,
    pub max_picard: usize,
    /// Bound on ε‖Q₁(q)‖ / Λ_K (must be below 1/8).
    pub threshold: f64,
}

impl NonlinearOptions {
    pub fn new(eps: f64, coupling: f64) -> Self {
        Self {
            decay: DecayOptions::new(eps, DecayMode::Inhomogeneous),
            coupling,
            picard_tol: 1e-6,
            max_picard: 50,
            threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PicardStep {
    /// ‖q^{k+1} - q^k‖ / ‖q^k‖.
    pub update: f64,
    /// ε sup_{K'} |Q₁(q)| / Λ_K.
    pub surrogate_sup: f64,
    /// ε ‖Q₁(q)‖_{L^{1,n}(K')} / Λ_K.
    pub surrogate_l1n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonlinearReport {
    pub decay: DecayReport,
    pub coupling: f64,
    pub steps: Vec<PicardStep>,
    pub converged: bool,
    /// Every recorded surrogate stayed below the threshold.
    pub condition_ok: bool,
    pub diagnosis: Option<String>,
}

/// Node blocks ε·Q₁(q) = coupling · A_ε(q): the zeroth-order term evaluated
/// at the spinor and form parts of q.
fn q1_blocks(p: &Problem, q: &[f64], eps: f64, coupling: f64) -> Result<Vec<nalgebra::DMatrix<f64>>> {
    let (s, f) = (p.data.spinor_dim, p.fiber());
    (0..p.domain.node_count())
        .map(|i| {
            let phi = DVector::from_column_slice(&q[i * f..i * f + s]);
            let a = DVector::from_column_slice(&q[i * f + s..(i + 1) * f]);
            Ok(build_A_eps(&p.data, &phi, &a, eps)? * coupling)
        })
        .collect()
}

fn surrogates(p: &Problem, blocks: &[nalgebra::DMatrix<f64>], k_outer: &[usize], lambda_k: f64) -> (f64, f64) {
    let n = p.domain.dim as i32;
    let h = p.h();
    let sup = k_outer.iter().map(|&i| blocks[i].norm()).fold(0.0, f64::max);
    let mut acc = 0.0;
    for &i in k_outer {
        acc += blocks[i].norm().powi(n);
        for axis in 0..p.domain.dim {
            if let Some(j) = p.domain.neighbor(i, axis, true) {
                acc += ((&blocks[j] - &blocks[i]).norm() / h).powi(n);
            }
        }
    }
    let l1n = (acc * p.domain.cell_volume()).powf(1.0 / n as f64);
    (sup / lambda_k, l1n / lambda_k)
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Picard iteration q^{k+1} = argmin |(D + 𝒜/ε + Q₁(q^k) π_𝔥) q - f| starting
/// from the linear solution. With zero coupling the perturbation is never
/// added and the result equals the linear run.
pub fn run_nonlinear_decay(p: &Problem, opts: &NonlinearOptions) -> Result<NonlinearReport> {
    let eps = opts.decay.eps;
    check_eps(eps)?;
    if opts.decay.mode != DecayMode::Inhomogeneous {
        return Err(ExperimentError::Invalid("the nonlinear problem is solved in inhomogeneous mode".into()));
    }
    if !(opts.threshold > 0.0 && opts.threshold < 0.125) {
        return Err(ExperimentError::Invalid(format!("threshold {} must lie in (0, 1/8)", opts.threshold)));
    }
    let r_k = opts.decay.r_k.unwrap_or_else(|| p.default_rk(eps));
    let (_, _, lambda_k) = p.compact_set(r_k);
    let (k_outer, _) = p.domain.compact_set(0.5 * r_k);
    let deps = p.Deps(eps)?;
    let f = p.core_source()?;
    let (mut q, mut rep) = solve_inhomogeneous(&deps, &f, &opts.decay.cg)?;
    let fib = p.fiber();
    let ph = p.split.proj_h.clone();
    let mut steps = Vec::new();
    let mut converged = false;
    let mut diagnosis = None;
    let mut growth = 0;
    for _ in 0..opts.max_picard {
        let blocks = q1_blocks(p, &q, eps, opts.coupling)?;
        let (ssup, sl1n) = surrogates(p, &blocks, &k_outer, lambda_k);
        let op: SparseOperator = if opts.coupling == 0.0 {
            deps.clone()
        } else {
            // Q₁ = (ε Q₁) / ε acting after π_𝔥.
            let pert = assemble_blocks(p.domain.node_count(), fib, |i| &blocks[i] * &ph / eps);
            deps.add_scaled(&pert, 1.0)?
        };
        let (next, r) = solve_inhomogeneous(&op, &f, &opts.decay.cg)?;
        let update = rel_diff(&next, &q);
        if let Some(last) = steps.last().map(|s: &PicardStep| s.update) {
            growth = if update > last { growth + 1 } else { 0 };
        }
        steps.push(PicardStep { update, surrogate_sup: ssup, surrogate_l1n: sl1n });
        q = next;
        rep = r;
        if update <= opts.picard_tol {
            converged = true;
            break;
        }
        if growth >= 3 || !update.is_finite() {
            diagnosis = Some(format!("Picard iteration diverging: relative update {update:e} grew 3 steps in a row"));
            break;
        }
    }
    if !converged && diagnosis.is_none() {
        diagnosis = Some(format!("no convergence in {} Picard steps", opts.max_picard));
    }
    let condition_ok = steps.iter().all(|s| s.surrogate_sup < opts.threshold && s.surrogate_l1n < opts.threshold);
    if !condition_ok {
        let msg = "condition violated: ε‖Q₁‖ did not stay below the threshold".to_string();
        diagnosis = Some(diagnosis.map_or(msg.clone(), |d| format!("{d}; {msg}")));
    }
    let decay = decay_report(p, &q, eps, DecayMode::Inhomogeneous, r_k, None, rep.iterations, rep.rel_residual)?;
    Ok(NonlinearReport { decay, coupling: opts.coupling, steps, converged, condition_ok, diagnosis })
}
