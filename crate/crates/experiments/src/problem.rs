use domain_grid::{sample_phi0, BaseSpinorProfile, GridDomain, GridField, SingularSet};
use linalg_solvers::NodeProjector;
use op_assembly::{assemble_A, assemble_D, assemble_Deps, SparseOperator};
use sw_algebra::{build_A, gap_on_h, splitting_at, FiberSplitting, SWCaseData};

use crate::{ExperimentError, Result};

/// A concentrating Dirac operator on a grid: D from the case's symbol, 𝒜
/// from a sampled base spinor, and the node splitting 𝔑 ⊕ 𝔥.
///
/// The base spinor is a scalar profile times one fixed unit spinor, so the
/// splitting is the same at every node.
#[derive(Debug, Clone)]
pub struct Problem {
    pub domain: GridDomain,
    pub data: SWCaseData,
    pub profile: BaseSpinorProfile,
    pub phi0: GridField,
    pub d: SparseOperator,
    pub a: SparseOperator,
    pub split: FiberSplitting,
    pub proj_h: NodeProjector,
    /// Λ(y): smallest singular value of 𝒜 on 𝔥 at each node.
    pub gap: Vec<f64>,
}

impl Problem {
    pub fn new(domain: GridDomain, data: SWCaseData, profile: BaseSpinorProfile) -> Result<Self> {
        let phi0 = sample_phi0(&domain, &profile, &data)?;
        let d = assemble_D(&domain, &data.symbol_model())?;
        let a = assemble_A(&domain, &data, &phi0)?;
        let unit = data.lifted_unit_spinor();
        let split = splitting_at(&data, &unit, 1e-12)?;
        let unit_gap = gap_on_h(&build_A(&data, &unit)?, &split);
        let gap = (0..domain.node_count())
            .map(|i| profile.magnitude(&domain, i).abs() * unit_gap)
            .collect();
        let proj_h = NodeProjector::Uniform { fiber: data.fiber_dim(), p: split.proj_h.clone() };
        Ok(Self { domain, data, profile, phi0, d, a, split, proj_h, gap })
    }

    pub fn fiber(&self) -> usize {
        self.data.fiber_dim()
    }

    pub fn h(&self) -> f64 {
        self.domain.h[0]
    }

    #[allow(non_snake_case)]
    pub fn Deps(&self, eps: f64) -> Result<SparseOperator> {
        Ok(assemble_Deps(&self.d, &self.a, eps)?)
    }

    /// |π_𝔥 q| at every node.
    pub fn h_norms(&self, q: &[f64]) -> Vec<f64> {
        self.proj_h.pointwise_norm(q)
    }

    /// K = {dist >= r}: its nodes, dist(K, 𝒵) and Λ_K.
    pub fn compact_set(&self, r: f64) -> (Vec<usize>, f64, f64) {
        let (nodes, rk) = self.domain.compact_set(r);
        let lk = nodes.iter().map(|&i| self.gap[i]).fold(f64::INFINITY, f64::min);
        (nodes, rk, lk)
    }

    /// R_K = max(6h, 3ε/Λ_K), solved by fixed-point iteration since Λ_K
    /// depends on K.
    pub fn default_rk(&self, eps: f64) -> f64 {
        let floor = 6.0 * self.h();
        let mut r = floor;
        for _ in 0..100 {
            let (_, _, lk) = self.compact_set(r);
            let next = floor.max(3.0 * eps / lk);
            if !next.is_finite() || (next - r).abs() <= 1e-12 * r {
                return next;
            }
            r = 0.5 * (r + next);
        }
        r
    }

    /// Unit 𝔥-vector on the innermost layer of nodes around 𝒵, scaled by
    /// h^{-codim} so that it approximates a delta on 𝒵.
    pub fn core_source(&self) -> Result<Vec<f64>> {
        let codim = match self.domain.singular {
            SingularSet::Tube { .. } => self.domain.dim as i32 - 1,
            SingularSet::Plane { .. } => 1,
            SingularSet::Point => self.domain.dim as i32,
            SingularSet::None => return Err(ExperimentError::Invalid("core source needs a singular set".into())),
        };
        let f = self.fiber();
        let ph = &self.split.proj_h;
        let s = self.data.spinor_dim;
        // First form direction with a nonzero 𝔥 part, then spinor directions.
        let k = (s..f)
            .chain(0..s)
            .find(|&k| ph.column(k).norm() > 1e-8)
            .ok_or_else(|| ExperimentError::Invalid("𝔥 is trivial".into()))?;
        let v = ph.column(k).into_owned();
        let dmin = self.domain.dist_field.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = self.h().powi(-codim);
        let mut out = vec![0.0; self.domain.node_count() * f];
        for (node, d) in self.domain.dist_field.iter().enumerate() {
            if *d <= dmin * (1.0 + 1e-9) {
                for c in 0..f {
                    out[node * f + c] = v[c] * scale;
                }
            }
        }
        Ok(out)
    }

    /// A spatially constant 𝔥-field. Inverse iteration started here stays off
    /// the checkerboard modes that the centered-difference D cannot see.
    pub fn smooth_start(&self) -> Vec<f64> {
        let f = self.fiber();
        let v: Vec<f64> = (0..f).map(|c| ((c + 1) as f64).sqrt()).collect();
        let v = &self.split.proj_h * nalgebra::DVector::from_vec(v);
        (0..self.domain.node_count()).flat_map(|_| v.iter().cloned()).collect()
    }

    /// Eigen options for the kernel problem on this grid.
    pub fn kernel_options(&self, base: &linalg_solvers::EigenOptions) -> linalg_solvers::EigenOptions {
        linalg_solvers::EigenOptions {
            measure: self.domain.cell_volume(),
            start: base.start.clone().or_else(|| Some(self.smooth_start())),
            ..base.clone()
        }
    }

    /// Discrete ‖q‖ in L^{1,2} over `nodes`: values plus forward differences.
    pub fn l12_norm(&self, q: &[f64], nodes: &[usize]) -> f64 {
        let f = self.fiber();
        let h = self.h();
        let mut acc = 0.0;
        for &i in nodes {
            let qi = &q[i * f..(i + 1) * f];
            acc += qi.iter().map(|v| v * v).sum::<f64>();
            for axis in 0..self.domain.dim {
                if let Some(j) = self.domain.neighbor(i, axis, true) {
                    let qj = &q[j * f..(j + 1) * f];
                    acc += qi.iter().zip(qj).map(|(a, b)| ((b - a) / h).powi(2)).sum::<f64>();
                }
            }
        }
        (acc * self.domain.cell_volume()).sqrt()
    }
}
