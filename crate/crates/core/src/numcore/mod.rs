//! Dense least-squares kernels: SVD minimum-norm solve, normal-equation
//! oracle and iteratively reweighted least squares.

mod matrix;
mod solve;
mod svd;

use thiserror::Error;

pub use matrix::{dot, norm2, Matrix, Vector};
pub use solve::{
    solve_irls, solve_lse_normal, solve_lse_svd, IrlsConfig, SolveReport, DEFAULT_RANK_TOLERANCE,
};
pub use svd::Svd;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("empty system")]
    Empty,
    #[error("gram matrix is singular (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
}
