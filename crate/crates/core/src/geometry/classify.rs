use rayon::prelude::*;

use super::{Grid, LevelSetDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeRole {
    Interior,
    Ghost,
    Inactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellRole {
    Inside,
    Cut,
    Outside,
    Snapped,
}

/// Which neighbours of an exterior node are inspected to decide whether it
/// is a ghost: the four axis neighbours (finite differences) or all eight
/// (finite elements).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighborhood {
    Four,
    Eight,
}

impl Neighborhood {
    fn offsets(self) -> &'static [(isize, isize)] {
        const FOUR: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(isize, isize); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        match self {
            Neighborhood::Four => &FOUR,
            Neighborhood::Eight => &EIGHT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridClassification {
    pub grid: Grid,
    pub neighborhood: Neighborhood,
    /// Level-set values at the nodes (after snapping, when applied).
    pub phi: Vec<f64>,
    pub node_role: Vec<NodeRole>,
    pub cell_role: Vec<CellRole>,
}

impl GridClassification {
    pub fn count(&self, role: NodeRole) -> usize {
        self.node_role.iter().filter(|&&r| r == role).count()
    }

    pub fn num_interior(&self) -> usize {
        self.count(NodeRole::Interior)
    }

    pub fn num_ghost(&self) -> usize {
        self.count(NodeRole::Ghost)
    }

    pub fn num_active(&self) -> usize {
        self.node_role
            .iter()
            .filter(|&&r| r != NodeRole::Inactive)
            .count()
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.node_role[node] != NodeRole::Inactive
    }

    pub fn active_nodes(&self) -> Vec<usize> {
        (0..self.node_role.len())
            .filter(|&k| self.is_active(k))
            .collect()
    }

    pub fn cell_values(&self, cell: usize) -> [f64; 4] {
        self.grid.cell_nodes(cell).map(|k| self.phi[k])
    }
}

pub fn classify(
    grid: &Grid,
    domain: &LevelSetDomain,
    neighborhood: Neighborhood,
) -> GridClassification {
    let phi: Vec<f64> = (0..grid.num_nodes())
        .into_par_iter()
        .map(|k| domain.phi(grid.node_point(k)))
        .collect();
    classify_values(grid, phi, neighborhood)
}

/// Classification from precomputed nodal level-set values.
pub fn classify_values(
    grid: &Grid,
    phi: Vec<f64>,
    neighborhood: Neighborhood,
) -> GridClassification {
    let node_role = (0..grid.num_nodes())
        .map(|k| {
            if phi[k] > 0.0 {
                return NodeRole::Interior;
            }
            let (i, j) = grid.node_ij(k);
            let touches_interior = neighborhood
                .offsets()
                .iter()
                .filter_map(|&(di, dj)| grid.offset_node(i, j, di, dj))
                .any(|m| phi[m] > 0.0);
            if touches_interior {
                NodeRole::Ghost
            } else {
                NodeRole::Inactive
            }
        })
        .collect();
    let cell_role = (0..grid.num_cells())
        .map(|c| cell_role_from_values(grid.cell_nodes(c).map(|k| phi[k])))
        .collect();
    GridClassification {
        grid: *grid,
        neighborhood,
        phi,
        node_role,
        cell_role,
    }
}

pub(super) fn cell_role_from_values(values: [f64; 4]) -> CellRole {
    let positive = values.iter().filter(|&&v| v > 0.0).count();
    match positive {
        4 => CellRole::Inside,
        0 => CellRole::Outside,
        _ => CellRole::Cut,
    }
}
