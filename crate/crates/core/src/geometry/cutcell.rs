use crate::Vec2;

use super::{Grid, LevelSetDomain};

/// Straight piece of the polygonal boundary Γ_h inside one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySegment {
    pub a: Vec2,
    pub b: Vec2,
    /// Outward unit normal (towards decreasing φ).
    pub normal: Vec2,
}

impl BoundarySegment {
    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }
}

/// The part of one grid cell where the piecewise-linear reconstruction of φ
/// is non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct CutCell {
    pub cell: usize,
    /// Counter-clockwise convex polygons; two only for a split saddle cell.
    pub polygons: Vec<Vec<Vec2>>,
    pub triangles: Vec<[Vec2; 3]>,
    pub boundary_segments: Vec<BoundarySegment>,
    pub area: f64,
}

impl CutCell {
    pub fn empty(cell: usize) -> Self {
        CutCell {
            cell,
            polygons: Vec::new(),
            triangles: Vec::new(),
            boundary_segments: Vec::new(),
            area: 0.0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.area <= 0.0
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_segments
            .iter()
            .map(BoundarySegment::length)
            .sum()
    }

    /// Marching-squares polygon of the cell from its four vertex values
    /// (counter-clockwise from the lower-left vertex). Saddle cells are
    /// resolved by the sign of the mean value, i.e. the bilinear interpolant
    /// at the cell centre.
    pub fn from_values(grid: &Grid, cell: usize, values: [f64; 4]) -> Self {
        let o = grid.cell_origin(cell);
        let h = grid.h();
        let corners = [
            o,
            o + Vec2::new(h, 0.0),
            o + Vec2::new(h, h),
            o + Vec2::new(0.0, h),
        ];
        let pos = values.map(|v| v > 0.0);
        let n_pos = pos.iter().filter(|&&p| p).count();
        if n_pos == 0 {
            return CutCell::empty(cell);
        }

        let crossing = |k: usize| {
            let m = (k + 1) % 4;
            let t = values[k] / (values[k] - values[m]);
            corners[k] + (corners[m] - corners[k]) * t
        };

        let saddle = n_pos == 2 && pos[0] == pos[2];
        let centre = values.iter().sum::<f64>() / 4.0;
        let mut pieces: Vec<Vec<(Vec2, bool)>> = Vec::new();
        if saddle && !(centre > 0.0) {
            // two disjoint corner triangles around the positive vertices
            for k in (0..4).filter(|&k| pos[k]) {
                let prev = (k + 3) % 4;
                pieces.push(vec![
                    (crossing(prev), false),
                    (corners[k], false),
                    (crossing(k), true),
                ]);
            }
        } else {
            // walk the square, clipping against φ > 0; crossings flagged
            // `true` leave the region and start a boundary segment
            let mut poly = Vec::with_capacity(6);
            for k in 0..4 {
                let m = (k + 1) % 4;
                if pos[k] {
                    poly.push((corners[k], false));
                }
                if pos[k] != pos[m] {
                    poly.push((crossing(k), pos[k]));
                }
            }
            pieces.push(poly);
        }

        let mut cut = CutCell::empty(cell);
        let min_len = 1e-14 * h;
        for piece in pieces {
            let n = piece.len();
            for i in 0..n {
                let (a, exits) = piece[i];
                if exits {
                    let b = piece[(i + 1) % n].0;
                    let d = b - a;
                    let len = d.norm();
                    if len > min_len {
                        cut.boundary_segments.push(BoundarySegment {
                            a,
                            b,
                            normal: Vec2::new(d.y, -d.x) / len,
                        });
                    }
                }
            }
            let poly: Vec<Vec2> = piece.into_iter().map(|(p, _)| p).collect();
            let area = shoelace(&poly);
            if area > 0.0 {
                for i in 1..poly.len() - 1 {
                    cut.triangles.push([poly[0], poly[i], poly[i + 1]]);
                }
                cut.area += area;
                cut.polygons.push(poly);
            }
        }
        if cut.area <= 0.0 {
            return CutCell::empty(cell);
        }
        cut
    }
}

fn shoelace(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
}

/// Cut-cell geometry of `cell` from the level set sampled at its vertices.
pub fn cut_cell_geometry(cell: usize, grid: &Grid, domain: &LevelSetDomain) -> CutCell {
    let values = grid
        .cell_nodes(cell)
        .map(|k| domain.phi(grid.node_point(k)));
    CutCell::from_values(grid, cell, values)
}
