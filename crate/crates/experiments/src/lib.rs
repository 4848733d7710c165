//! Numerical experiments on concentrating Dirac operators: decay of the
//! 𝔥-component away from the singular set, its nonlinear extension, the
//! ε^{2/3} scale collapse, Green's function comparisons and the Harnack
//! ratio, plus a few diagnostics shared by the acceptance suite.

pub mod collapse;
pub mod decay;
pub mod diagnostics;
pub mod fit;
pub mod green;
pub mod oracle;
pub mod problem;
pub mod residual;

use thiserror::Error;

pub use collapse::{run_scale_collapse, CollapseOptions, CollapseReport};
pub use decay::{
    run_linear_decay, run_nonlinear_decay, DecayMode, DecayOptions, DecayReport, NonlinearOptions,
    NonlinearReport, PicardStep,
};
pub use fit::{linear_fit, LinearFit};
pub use green::{dyadic_annuli, harnack_ratio, run_green_comparison, GreenComparison, GreenOptions, HarnackReport};
pub use problem::Problem;
pub use residual::{sw_residual_case1, SwResidual};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Domain(#[from] domain_grid::DomainError),
    #[error(transparent)]
    Assembly(#[from] op_assembly::OpError),
    #[error(transparent)]
    Algebra(#[from] sw_algebra::SwError),
    #[error(transparent)]
    Solver(#[from] linalg_solvers::SolverError),
    #[error("only {found} usable shells, need at least {needed}")]
    InsufficientShells { found: usize, needed: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid experiment setup: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
