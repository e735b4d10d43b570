//! Ghost-point finite differences: five-point interior rows plus boundary
//! rows that interpolate the boundary condition at the foot point of each
//! ghost node on an upwind Lagrange stencil.

mod assemble;
mod weights;

pub use assemble::{
    assemble_fd, fd_gradient, ghost_row, interior_row, mitigate_ill_conditioning, FdOptions,
    FdSystem, RowKind, SparseRow,
};
pub use weights::{lagrange_weights, LagrangeWeights};

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::Vec2;

#[derive(Debug, Error)]
pub enum FdError {
    #[error("stencil order p = {0} not supported (expected 1 or 2)")]
    UnsupportedOrder(usize),
    #[error("domain has no interior nodes on this grid")]
    EmptyDomain,
    #[error("stencil of ghost node {node} at ({:.6}, {:.6}) leaves the grid; geometry too coarse", point.x, point.y)]
    StencilOutsideGrid { node: usize, point: Vec2 },
    #[error("stencil offset {theta} of node {node} outside the interpolation range")]
    ThetaOutOfRange { node: usize, theta: f64 },
    #[error("interior node {node} has an inactive neighbor {neighbor}")]
    InactiveNeighbor { node: usize, neighbor: usize },
    #[error("solution vector has {got} entries, system has {expected} rows")]
    LengthMismatch { expected: usize, got: usize },
    #[error("projection of node {node} failed: {source}")]
    Projection {
        node: usize,
        #[source]
        source: GeometryError,
    },
}
