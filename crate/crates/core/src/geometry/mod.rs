//! Level-set domains, the background grid, node/cell classification,
//! closest-point projection of ghost nodes and cut-cell polygons.

mod boundary;
mod classify;
mod cutcell;
mod domain;
mod grid;
mod projection;
mod snap;

pub use boundary::{BcType, BoundarySpec};
pub use classify::{
    classify, classify_values, CellRole, GridClassification, Neighborhood, NodeRole,
};
pub use cutcell::{cut_cell_geometry, BoundarySegment, CutCell};
pub use domain::{make_domain, normal_at, LevelSetDomain, BUILTIN_DOMAINS};
pub use grid::Grid;
pub use projection::{
    project_to_boundary, BcKind, BoundaryProjection, PhiSampling, ProjectionOptions,
};
pub use snap::{snap_small_cells, snap_small_cells_normalized};

use thiserror::Error;

use crate::Vec2;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("unknown domain `{0}` (expected one of circle, leaf, flower, hourglass)")]
    UnknownDomain(String),
    #[error("grid needs at least 4 cells per side, got {0}")]
    GridTooSmall(usize),
    #[error("level set vanishes at the interior seed ({x}, {y})", x = .0.x, y = .0.y)]
    DegenerateSeed(Vec2),
    #[error("level-set gradient vanishes at ({x}, {y})", x = .0.x, y = .0.y)]
    DegenerateGeometry(Vec2),
    #[error("node {node} at ({x}, {y}) is not exterior (phi = {phi})", x = .point.x, y = .point.y)]
    NotExterior { node: usize, point: Vec2, phi: f64 },
    #[error("boundary projection failed for node {node} at ({x}, {y}): no sign change within {bracket}", x = .point.x, y = .point.y)]
    ProjectionFailed {
        node: usize,
        point: Vec2,
        bracket: f64,
    },
}
