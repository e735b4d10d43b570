//! Unfitted discretizations of the Poisson problem
//!
//! ```text
//! -Δu = f in Ω,   u = g_D on Γ_D,   ∂u/∂n = g_N on Γ_N
//! ```
//!
//! on domains `Ω = {φ > 0}` embedded in the square `[-1, 1]²`, using either
//! the ghost-point finite-difference scheme with upwind interpolation stencils
//! ([`fd`]) or the ghost nodal bilinear finite-element method with a symmetric
//! Nitsche penalty ([`fem`]). The [`linalg`] module carries the sparse solvers
//! and the condition-number estimator, [`analysis`] the manufactured solutions
//! and error norms, and [`experiment`] ties everything into grid-refinement
//! studies that emit CSV/JSON reports.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod fd;
pub mod fem;
pub mod geometry;
pub mod linalg;

pub use error::{Error, Result};

/// Points and vectors in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;
