//! Real Clifford modules over R^3 and R^4.
//!
//! The three-dimensional module is the quaternions acting on themselves by
//! left multiplication with i, j, k. The four-dimensional module is
//! H+ (+) H-, with each covector acting off-diagonally through right
//! multiplication by a conjugated unit quaternion. All matrices built here
//! are signed permutations, so the Clifford relations hold exactly.

pub mod quaternion;

use nalgebra::DMatrix;
use thiserror::Error;

use quaternion::{conj, left_matrix, right_matrix, UNITS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("unsupported Clifford module dimension {0} (expected 3 or 4)")]
    UnsupportedDim(usize),
    #[error("covector has {got} entries, model dimension is {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("symbol matrices must be square and of a common size")]
    BadShape,
}

/// Fiber indices of the even and odd halves of a graded module.
#[derive(Debug, Clone, PartialEq)]
pub struct Grading {
    pub plus: Vec<usize>,
    pub minus: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliffordModel {
    pub dim: usize,
    pub fiber_dim: usize,
    /// `gamma[j]` represents sigma(e^{j+1}).
    pub gamma: Vec<DMatrix<f64>>,
    pub grading: Option<Grading>,
}

impl CliffordModel {
    /// Wraps arbitrary symbol matrices. No algebraic checks are made here;
    /// use [`clifford_defect`] for that.
    pub fn from_gammas(
        gamma: Vec<DMatrix<f64>>,
        grading: Option<Grading>,
    ) -> Result<Self, CliffordError> {
        let dim = gamma.len();
        let n = gamma.first().map_or(0, |g| g.nrows());
        if gamma.iter().any(|g| g.nrows() != n || g.ncols() != n) {
            return Err(CliffordError::BadShape);
        }
        Ok(Self {
            dim,
            fiber_dim: n,
            gamma,
            grading,
        })
    }

    /// Block-diagonal sum of two modules over the same base dimension.
    pub fn direct_sum(&self, other: &CliffordModel) -> Result<Self, CliffordError> {
        if self.dim != other.dim {
            return Err(CliffordError::LengthMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let (a, b) = (self.fiber_dim, other.fiber_dim);
        let gamma = self
            .gamma
            .iter()
            .zip(&other.gamma)
            .map(|(x, y)| {
                let mut m = DMatrix::zeros(a + b, a + b);
                m.view_mut((0, 0), (a, a)).copy_from(x);
                m.view_mut((a, a), (b, b)).copy_from(y);
                m
            })
            .collect();
        Self::from_gammas(gamma, None)
    }
}

pub fn build_clifford(dim: usize) -> Result<CliffordModel, CliffordError> {
    match dim {
        3 => {
            let gamma = UNITS[1..].iter().map(|&u| left_matrix(u)).collect();
            CliffordModel::from_gammas(gamma, None)
        }
        4 => {
            let gamma = UNITS
                .iter()
                .map(|&u| {
                    let q = right_matrix(conj(u));
                    let mut m = DMatrix::zeros(8, 8);
                    m.view_mut((4, 0), (4, 4)).copy_from(&q);
                    m.view_mut((0, 4), (4, 4)).copy_from(&(-q.transpose()));
                    m
                })
                .collect();
            let grading = Grading {
                plus: (0..4).collect(),
                minus: (4..8).collect(),
            };
            CliffordModel::from_gammas(gamma, Some(grading))
        }
        d => Err(CliffordError::UnsupportedDim(d)),
    }
}

/// sigma(xi) = sum_j xi_j sigma(e^j).
pub fn symbol(model: &CliffordModel, xi: &[f64]) -> Result<DMatrix<f64>, CliffordError> {
    if xi.len() != model.dim {
        return Err(CliffordError::LengthMismatch {
            expected: model.dim,
            got: xi.len(),
        });
    }
    let mut s = DMatrix::zeros(model.fiber_dim, model.fiber_dim);
    for (x, g) in xi.iter().zip(&model.gamma) {
        s += g * *x;
    }
    Ok(s)
}

/// Largest entry of |sigma_i sigma_j + sigma_j sigma_i + 2 delta_ij Id| over
/// all basis pairs.
pub fn clifford_defect(model: &CliffordModel) -> f64 {
    let n = model.fiber_dim;
    let mut worst = 0.0_f64;
    for i in 0..model.dim {
        for j in i..model.dim {
            let gi = &model.gamma[i];
            let gj = &model.gamma[j];
            let mut m = gi * gj + gj * gi;
            if i == j {
                m += DMatrix::<f64>::identity(n, n) * 2.0;
            }
            worst = worst.max(m.amax());
        }
    }
    worst
}
