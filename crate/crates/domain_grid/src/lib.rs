//! Model geometries: periodic boxes with cell-centered nodes and Dirichlet
//! balls on node grids, together with the distance to a model singular set
//! and synthetic base spinors.
//!
//! Nodes are numbered in row-major order, last axis fastest.

use nalgebra::DVector;
use sw_algebra::SWCaseData;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("need at least 8 nodes per axis, axis {axis} has {n}")]
    TooFewNodes { axis: usize, n: usize },
    #[error("lengths must be positive, axis {axis} has {len}")]
    NonPositiveLength { axis: usize, len: f64 },
    #[error("dimension must be 3 or 4, got {0}")]
    BadDimension(usize),
    #[error("expected {expected} entries per axis, got {got}")]
    AxisCount { expected: usize, got: usize },
    #[error("axis {axis} out of range for dimension {dim}")]
    BadAxis { axis: usize, dim: usize },
    #[error("axis {axis} crosses the singular set and needs an even cell count, got {n}")]
    OddTransverseCells { axis: usize, n: usize },
    #[error("profile does not fit this domain/case: {0}")]
    ProfileMismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Periodic,
    /// Ball of radius `r0` centered at the origin of a node grid on
    /// `[-r0, r0]^dim`; `h = 2 r0 / N` with `N + 1` nodes per axis.
    DirichletBall { r0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Metric {
    Flat,
    /// g = (1 + kappa r^2) g_0.
    Radial { kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SingularSet {
    /// The line through the origin along `axis`.
    Tube { axis: usize },
    /// The hyperplane `x_axis = 0`.
    Plane { axis: usize },
    Point,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub dim: usize,
    /// Cells per axis.
    pub cells: Vec<usize>,
    /// Periodic domains only; ignored for balls.
    pub lengths: Vec<f64>,
    pub boundary: Boundary,
    pub metric: Metric,
    pub singular: SingularSet,
}

impl DomainSpec {
    pub fn torus(cells: [usize; 3], lengths: [f64; 3], singular: SingularSet) -> Self {
        Self {
            dim: 3,
            cells: cells.to_vec(),
            lengths: lengths.to_vec(),
            boundary: Boundary::Periodic,
            metric: Metric::Flat,
            singular,
        }
    }

    pub fn ball(cells: usize, r0: f64, metric: Metric) -> Self {
        Self {
            dim: 3,
            cells: vec![cells; 3],
            lengths: vec![2.0 * r0; 3],
            boundary: Boundary::DirichletBall { r0 },
            metric,
            singular: SingularSet::Point,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridDomain {
    pub dim: usize,
    /// Nodes per axis.
    pub n: Vec<usize>,
    pub lengths: Vec<f64>,
    pub h: Vec<f64>,
    pub boundary: Boundary,
    pub metric: Metric,
    pub singular: SingularSet,
    /// Node coordinates along each axis.
    pub axis_coords: Vec<Vec<f64>>,
    pub dist_field: Vec<f64>,
}

pub fn make_domain(spec: &DomainSpec) -> Result<GridDomain, DomainError> {
    let dim = spec.dim;
    if dim != 3 && dim != 4 {
        return Err(DomainError::BadDimension(dim));
    }
    if spec.cells.len() != dim {
        return Err(DomainError::AxisCount { expected: dim, got: spec.cells.len() });
    }
    for (axis, &n) in spec.cells.iter().enumerate() {
        if n < 8 {
            return Err(DomainError::TooFewNodes { axis, n });
        }
    }
    match spec.singular {
        SingularSet::Tube { axis } | SingularSet::Plane { axis } if axis >= dim => {
            return Err(DomainError::BadAxis { axis, dim });
        }
        _ => {}
    }
    let (n, lengths, h, axis_coords) = match spec.boundary {
        Boundary::Periodic => {
            if spec.lengths.len() != dim {
                return Err(DomainError::AxisCount { expected: dim, got: spec.lengths.len() });
            }
            for (axis, &len) in spec.lengths.iter().enumerate() {
                if !(len > 0.0) {
                    return Err(DomainError::NonPositiveLength { axis, len });
                }
            }
            // With an odd count a cell center lands on 𝒵.
            for axis in 0..dim {
                let transverse = match spec.singular {
                    SingularSet::Tube { axis: a } => axis != a,
                    SingularSet::Plane { axis: a } => axis == a,
                    SingularSet::Point => true,
                    SingularSet::None => false,
                };
                if transverse && spec.cells[axis] % 2 == 1 {
                    return Err(DomainError::OddTransverseCells { axis, n: spec.cells[axis] });
                }
            }
            let h: Vec<f64> = (0..dim).map(|a| spec.lengths[a] / spec.cells[a] as f64).collect();
            let coords = (0..dim)
                .map(|a| {
                    (0..spec.cells[a])
                        .map(|i| -0.5 * spec.lengths[a] + (i as f64 + 0.5) * h[a])
                        .collect()
                })
                .collect();
            (spec.cells.clone(), spec.lengths.clone(), h, coords)
        }
        Boundary::DirichletBall { r0 } => {
            if !(r0 > 0.0) {
                return Err(DomainError::NonPositiveLength { axis: 0, len: r0 });
            }
            let h: Vec<f64> = spec.cells.iter().map(|&c| 2.0 * r0 / c as f64).collect();
            let coords = (0..dim)
                .map(|a| (0..=spec.cells[a]).map(|i| -r0 + i as f64 * h[a]).collect())
                .collect();
            let n = spec.cells.iter().map(|c| c + 1).collect();
            (n, vec![2.0 * r0; dim], h, coords)
        }
    };
    let mut dom = GridDomain {
        dim,
        n,
        lengths,
        h,
        boundary: spec.boundary,
        metric: spec.metric,
        singular: spec.singular,
        axis_coords,
        dist_field: Vec::new(),
    };
    dom.dist_field = (0..dom.node_count()).map(|i| dom.analytic_dist(&dom.coord(i))).collect();
    Ok(dom)
}

impl GridDomain {
    pub fn node_count(&self) -> usize {
        self.n.iter().product()
    }

    /// Multi-index of a node.
    pub fn multi_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for a in (0..self.dim).rev() {
            idx[a] = node % self.n[a];
            node /= self.n[a];
        }
        idx
    }

    pub fn node(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.n).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    /// Row-major stride of an axis.
    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn coord(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.axis_coords[a][i])
            .collect()
    }

    pub fn radius(&self, node: usize) -> f64 {
        self.coord(node).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Neighbor one step along `axis`, wrapping on periodic domains and
    /// `None` past the edge of a ball grid.
    pub fn neighbor(&self, node: usize, axis: usize, forward: bool) -> Option<usize> {
        let n = self.n[axis];
        let i = (node / self.stride(axis)) % n;
        let j = match (self.boundary, forward) {
            (Boundary::Periodic, true) => (i + 1) % n,
            (Boundary::Periodic, false) => (i + n - 1) % n,
            (_, true) if i + 1 < n => i + 1,
            (_, false) if i > 0 => i - 1,
            _ => return None,
        };
        Some(node + j * self.stride(axis) - i * self.stride(axis))
    }

    /// Ball domains: nodes strictly inside the ball. Periodic: every node.
    pub fn is_interior(&self, node: usize) -> bool {
        match self.boundary {
            Boundary::Periodic => true,
            Boundary::DirichletBall { r0 } => self.radius(node) < r0,
        }
    }

    pub fn interior_count(&self) -> usize {
        (0..self.node_count()).filter(|&i| self.is_interior(i)).count()
    }

    /// Node nearest to the origin.
    pub fn center_node(&self) -> usize {
        (0..self.node_count())
            .min_by(|&a, &b| self.radius(a).total_cmp(&self.radius(b)))
            .expect("nonempty grid")
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.iter().product()
    }

    fn analytic_dist(&self, x: &[f64]) -> f64 {
        match self.singular {
            SingularSet::Tube { axis } => x
                .iter()
                .enumerate()
                .filter(|(a, _)| *a != axis)
                .map(|(_, v)| v * v)
                .sum::<f64>()
                .sqrt(),
            SingularSet::Plane { axis } => x[axis].abs(),
            SingularSet::Point => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
            SingularSet::None => f64::INFINITY,
        }
    }

    /// Nodes of K = {dist >= r} and the smallest distance attained on K.
    pub fn compact_set(&self, r: f64) -> (Vec<usize>, f64) {
        let nodes: Vec<usize> = (0..self.node_count())
            .filter(|&i| self.dist_field[i] >= r)
            .collect();
        let rk = nodes
            .iter()
            .map(|&i| self.dist_field[i])
            .fold(f64::INFINITY, f64::min);
        (nodes, rk)
    }

    pub fn max_dist(&self) -> f64 {
        self.dist_field
            .iter()
            .cloned()
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaseSpinorProfile {
    ConstantGap { lambda0: f64 },
    SqrtDist { c2: f64 },
    /// `|Phi0| = 1 + amplitude * prod_a cos(2 pi x_a / L_a)`, smooth, periodic and
    /// nonvanishing for `amplitude < 1`.
    SmoothBump { amplitude: f64 },
}

impl BaseSpinorProfile {
    pub fn magnitude(&self, domain: &GridDomain, node: usize) -> f64 {
        match *self {
            BaseSpinorProfile::ConstantGap { lambda0 } => lambda0,
            BaseSpinorProfile::SqrtDist { c2 } => c2 * domain.dist_field[node].sqrt(),
            BaseSpinorProfile::SmoothBump { amplitude } => {
                let x = domain.coord(node);
                let p: f64 = x
                    .iter()
                    .zip(&domain.lengths)
                    .map(|(xi, l)| (2.0 * std::f64::consts::PI * xi / l).cos())
                    .product();
                1.0 + amplitude * p
            }
        }
    }
}

/// Node-major field with a fixed number of components per node.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub fiber: usize,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn zeros(nodes: usize, fiber: usize) -> Self {
        Self { fiber, values: vec![0.0; nodes * fiber] }
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / self.fiber
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.fiber..(node + 1) * self.fiber]
    }

    pub fn at_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.fiber..(node + 1) * self.fiber]
    }

    pub fn vector_at(&self, node: usize) -> DVector<f64> {
        DVector::from_row_slice(self.at(node))
    }
}

/// Phi0 = |profile|(x) * (fixed unit spinor in the zero set of the moment map).
pub fn sample_phi0(
    domain: &GridDomain,
    profile: &BaseSpinorProfile,
    data: &SWCaseData,
) -> Result<GridField, DomainError> {
    if data.base_dim != domain.dim {
        return Err(DomainError::ProfileMismatch(format!(
            "case {} lives in dimension {}, domain has dimension {}",
            data.case_id, data.base_dim, domain.dim
        )));
    }
    if matches!(profile, BaseSpinorProfile::SqrtDist { .. }) && domain.singular == SingularSet::None {
        return Err(DomainError::ProfileMismatch(
            "sqrt_dist profile needs a singular set".into(),
        ));
    }
    if let BaseSpinorProfile::SmoothBump { amplitude } = profile {
        if !(amplitude.abs() < 1.0) {
            return Err(DomainError::ProfileMismatch("smooth_bump amplitude must be below 1".into()));
        }
    }
    let unit = data.lifted_unit_spinor();
    let mut f = GridField::zeros(domain.node_count(), data.spinor_dim);
    for node in 0..domain.node_count() {
        let m = profile.magnitude(domain, node);
        for (dst, u) in f.at_mut(node).iter_mut().zip(unit.iter()) {
            *dst = m * u;
        }
    }
    Ok(f)
}
