use domain_grid::{Boundary, GridDomain, GridField};
use nalgebra::DVector;
use serde::Serialize;
use sw_algebra::{moment_map, CaseId, SWCaseData};

use crate::{ExperimentError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwResidual {
    /// ‖D_A Φ‖_{L²}.
    pub dirac: f64,
    /// ‖ε² ⋆F_A + ½ μ(Φ, Φ)‖_{L²}.
    pub curvature: f64,
    /// |‖Φ‖_{L²} - 1|.
    pub normalization: f64,
}

/// Residuals of the blown-up two-spinor equations on a periodic grid:
/// D_A Φ = Σ_j ρ(e^j)(∂_j + A_j J)Φ with J the complex structure, and
/// ⋆F_A the centered-difference curl of A.
pub fn sw_residual_case1(domain: &GridDomain, phi: &GridField, a1: &GridField, eps: f64) -> Result<SwResidual> {
    let data = SWCaseData::new(CaseId::I);
    if domain.dim != 3 || domain.boundary != Boundary::Periodic {
        return Err(ExperimentError::DimensionMismatch("need a periodic three-dimensional grid".into()));
    }
    let nodes = domain.node_count();
    if phi.fiber != data.spinor_dim || phi.nodes() != nodes {
        return Err(ExperimentError::DimensionMismatch(format!(
            "spinor field {}x{}, expected {nodes}x{}",
            phi.nodes(),
            phi.fiber,
            data.spinor_dim
        )));
    }
    if a1.fiber != 3 || a1.nodes() != nodes {
        return Err(ExperimentError::DimensionMismatch(format!(
            "1-form field {}x{}, expected {nodes}x3",
            a1.nodes(),
            a1.fiber
        )));
    }
    let j = &data.frame[0];
    let diff = |f: &GridField, i: usize, axis: usize| -> DVector<f64> {
        let fwd = domain.neighbor(i, axis, true).expect("periodic");
        let bwd = domain.neighbor(i, axis, false).expect("periodic");
        (f.vector_at(fwd) - f.vector_at(bwd)) / (2.0 * domain.h[axis])
    };
    let (mut r1, mut r2, mut norm) = (0.0, 0.0, 0.0);
    for i in 0..nodes {
        let p = phi.vector_at(i);
        let a = a1.at(i);
        let mut dp = DVector::zeros(data.spinor_dim);
        for axis in 0..3 {
            dp += &data.rho[axis] * (diff(phi, i, axis) + j * &p * a[axis]);
        }
        r1 += dp.norm_squared();
        let da: Vec<DVector<f64>> = (0..3).map(|axis| diff(a1, i, axis)).collect();
        let curl = [da[1][2] - da[2][1], da[2][0] - da[0][2], da[0][1] - da[1][0]];
        let mu = moment_map(&data, &p)?;
        r2 += (0..3).map(|k| (eps * eps * curl[k] + mu[k + 1]).powi(2)).sum::<f64>();
        norm += p.norm_squared();
    }
    let vol = domain.cell_volume();
    Ok(SwResidual {
        dirac: (r1 * vol).sqrt(),
        curvature: (r2 * vol).sqrt(),
        normalization: ((norm * vol).sqrt() - 1.0).abs(),
    })
}
