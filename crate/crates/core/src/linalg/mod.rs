//! Sparse storage, direct and Krylov solvers, and 2-norm condition
//! estimation.

mod cond;
mod csr;
mod direct;
mod krylov;
mod precond;

pub use cond::{estimate_cond2, CondEstimate};
pub use csr::CsrMatrix;
pub use direct::{solve_direct, LinearSolveHandle, LuFactorization};
pub use krylov::{solve_cg, solve_nonsymmetric, KrylovOptions, DIRECT_FALLBACK_LIMIT};
pub use precond::{Ilu0, Jacobi, Preconditioner, PreconditionerKind, Ssor};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: matrix is {matrix}x{matrix}, vector has {vector} entries")]
    DimensionMismatch { matrix: usize, vector: usize },
    #[error("matrix is singular: no usable pivot at row {row}")]
    Singular { row: usize },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("zero pivot at row {row} in incomplete factorization")]
    ZeroPivot { row: usize },
    #[error("{method} stopped at relative residual {residual:e} after {iterations} iterations{}", note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default())]
    NotConverged {
        method: String,
        iterations: usize,
        residual: f64,
        note: Option<String>,
    },
}

/// Outcome of a linear solve. `final_residual` is always the recomputed
/// relative residual `‖Ax - b‖₂ / ‖b‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
    pub note: Option<String>,
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `‖Ax - b‖₂ / ‖b‖₂`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul(x);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    let nb = norm2(b);
    if nb > 0.0 {
        r / nb
    } else {
        r
    }
}
