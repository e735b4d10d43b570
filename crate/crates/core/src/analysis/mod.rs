//! Manufactured solutions, relative error norms and observed orders.

mod cases;
mod norms;

pub use cases::{make_case, ManufacturedCase, ProblemData, BUILTIN_CASES};
pub use norms::{fitted_order, observed_order, relative_error, relative_error_vec, Norm};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),
    #[error("exact field has zero {0} norm; relative error undefined")]
    ZeroReference(Norm),
    #[error("field lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}
