use domain_grid::{make_domain, sample_phi0, BaseSpinorProfile, DomainSpec, SingularSet};
use op_assembly::{assemble_A, assemble_D, assemble_blocks, cross_term_inf_norm};
use serde::Serialize;
use sw_algebra::{build_A, CaseId, SWCaseData};

use crate::fit::{linear_fit, LinearFit};
use crate::{DecayReport, Problem, Result};

/// Node values of the discrete differential inequality for u = |q₁|²,
/// q₁ = π_𝔥 q, with Δ_h the 7-point positive Laplacian:
/// `Δ_h u + ε⁻²|𝒜q₁|² - 2λu`. The shift 2λu accounts for q being an
/// eigenvector of D_εᵀD_ε with eigenvalue λ rather than a kernel element.
pub fn differential_inequality(p: &Problem, q: &[f64], eps: f64, lambda: f64, nodes: &[usize]) -> Vec<f64> {
    let f = p.fiber();
    let q1 = p.proj_h.project(q);
    let aq = p.a.apply(&q1);
    let u: Vec<f64> = q1.chunks(f).map(|c| c.iter().map(|v| v * v).sum()).collect();
    let h2 = p.h() * p.h();
    nodes
        .iter()
        .map(|&i| {
            let mut lap = 0.0;
            for axis in 0..p.domain.dim {
                let fwd = p.domain.neighbor(i, axis, true).map_or(0.0, |j| u[j]);
                let bwd = p.domain.neighbor(i, axis, false).map_or(0.0, |j| u[j]);
                lap += (2.0 * u[i] - fwd - bwd) / h2;
            }
            let a2: f64 = aq[i * f..(i + 1) * f].iter().map(|v| v * v).sum();
            lap + a2 / (eps * eps) - 2.0 * lambda * u[i]
        })
        .collect()
}

/// max over nodes and axes of (|Δ⁺|q₁|| - |Δ⁺q₁|)/h with forward differences;
/// Kato's inequality says this is at most zero.
pub fn kato_excess(p: &Problem, q: &[f64]) -> f64 {
    let f = p.fiber();
    let q1 = p.proj_h.project(q);
    let h = p.h();
    let mut worst = f64::NEG_INFINITY;
    for i in 0..p.domain.node_count() {
        let a = &q1[i * f..(i + 1) * f];
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        for axis in 0..p.domain.dim {
            if let Some(j) = p.domain.neighbor(i, axis, true) {
                let b = &q1[j * f..(j + 1) * f];
                let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(((nb - na).abs() - d) / h);
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeitzenbockLevel {
    pub cells: usize,
    pub h: f64,
    /// ‖DᵀA + AᵀD‖_∞ for 𝒜 from a smooth base spinor.
    pub commuting: f64,
    /// The same with the lower-left block of 𝒜 negated, which breaks the
    /// commutation identity.
    pub violating: f64,
}

/// Cross-term norms on the torus [-L/2, L/2]³ for a smooth bump base spinor.
pub fn weitzenbock_dichotomy(case: CaseId, cells: &[usize], length: f64) -> Result<Vec<WeitzenbockLevel>> {
    let data = SWCaseData::new(case);
    let model = data.symbol_model();
    let (s, fib) = (data.spinor_dim, data.fiber_dim());
    cells
        .iter()
        .map(|&n| {
            let dom = make_domain(&DomainSpec::torus([n; 3], [length; 3], SingularSet::None))?;
            let phi = sample_phi0(&dom, &BaseSpinorProfile::SmoothBump { amplitude: 0.5 }, &data)?;
            let d = assemble_D(&dom, &model)?;
            let a = assemble_A(&dom, &data, &phi)?;
            let commuting = cross_term_inf_norm(&d, &a)?;
            let flipped = assemble_blocks(dom.node_count(), fib, |node| {
                let mut b = build_A(&data, &phi.vector_at(node)).expect("sizes match");
                let lower = -b.view((s, 0), (fib - s, s)).into_owned();
                b.view_mut((s, 0), (fib - s, s)).copy_from(&lower);
                b
            });
            let violating = cross_term_inf_norm(&d, &flipped)?;
            Ok(WeitzenbockLevel { cells: n, h: dom.h[0], commuting, violating })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingSummary {
    /// Fitted slope against 1/ε.
    pub regression: LinearFit,
    /// c in slope ≈ -c Λ_K/ε, least squares through the origin.
    pub c: f64,
    /// max |slope / (-c Λ_K/ε) - 1|.
    pub band: f64,
}

pub fn scaling_summary(reports: &[DecayReport]) -> ScalingSummary {
    let inv: Vec<f64> = reports.iter().map(|r| 1.0 / r.eps).collect();
    let slopes: Vec<f64> = reports.iter().map(|r| r.fit.slope).collect();
    let x: Vec<f64> = reports.iter().map(|r| r.lambda_k / r.eps).collect();
    let c = -x.iter().zip(&slopes).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
    let band = x.iter().zip(&slopes).map(|(a, s)| (s / (-c * a) - 1.0).abs()).fold(0.0, f64::max);
    ScalingSummary { regression: linear_fit(&inv, &slopes), c, band }
}
