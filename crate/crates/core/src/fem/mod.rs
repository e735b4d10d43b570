//! Ghost nodal finite elements: bilinear hats on the active nodes, volume
//! integrals over the cut-cell polygons, and Dirichlet conditions imposed by
//! the symmetric Nitsche method with penalty `λ = h^(-α)`.

mod assemble;
mod basis;
mod quadrature;

pub use assemble::{
    assemble_fem, boundary_terms, element_volume_terms, fem_gradient, fem_values, BoundaryTerms,
    FemMatrices, FemOptions, FemSystem, QuadPoint, Snapping,
};
pub use basis::{basis_eval, local_basis};
pub use quadrature::QuadratureRule;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("no active nodes: the domain does not intersect the grid")]
    EmptyDomain,
    #[error("Γ_D is empty; the pure Neumann problem is determined only up to a constant and needs a compatible source")]
    NoDirichletBoundary,
}
