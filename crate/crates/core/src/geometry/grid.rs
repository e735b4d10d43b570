use crate::Vec2;

use super::GeometryError;

/// Uniform node-centred grid on the square `[-1, 1]²` with `n` cells per side.
///
/// Node `(i, j)` sits at `(-1 + i h, -1 + j h)` and has linear index
/// `j (n + 1) + i`; cell `(i, j)` spans `[x_i, x_{i+1}] × [y_j, y_{j+1}]` and
/// has linear index `j n + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    pub const LOWER: f64 = -1.0;
    pub const LENGTH: f64 = 2.0;

    pub fn new(n: usize) -> Result<Self, GeometryError> {
        if n < 4 {
            return Err(GeometryError::GridTooSmall(n));
        }
        Ok(Grid {
            n,
            h: Self::LENGTH / n as f64,
        })
    }

    pub fn cells_per_side(&self) -> usize {
        self.n
    }

    pub fn nodes_per_side(&self) -> usize {
        self.n + 1
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_nodes(&self) -> usize {
        (self.n + 1) * (self.n + 1)
    }

    pub fn num_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn coord(&self, i: usize) -> f64 {
        Self::LOWER + i as f64 * self.h
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    pub fn node_ij(&self, k: usize) -> (usize, usize) {
        (k % (self.n + 1), k / (self.n + 1))
    }

    pub fn node_point(&self, k: usize) -> Vec2 {
        let (i, j) = self.node_ij(k);
        Vec2::new(self.coord(i), self.coord(j))
    }

    /// Node index at signed offsets from `(i, j)`, or `None` off the grid.
    pub fn offset_node(&self, i: usize, j: usize, di: isize, dj: isize) -> Option<usize> {
        let ii = i as isize + di;
        let jj = j as isize + dj;
        let last = self.n as isize;
        if ii < 0 || jj < 0 || ii > last || jj > last {
            None
        } else {
            Some(self.node_index(ii as usize, jj as usize))
        }
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn cell_ij(&self, c: usize) -> (usize, usize) {
        (c % self.n, c / self.n)
    }

    /// Lower-left corner of a cell.
    pub fn cell_origin(&self, c: usize) -> Vec2 {
        let (i, j) = self.cell_ij(c);
        Vec2::new(self.coord(i), self.coord(j))
    }

    /// Vertex node indices of a cell in counter-clockwise order starting at
    /// the lower-left corner.
    pub fn cell_nodes(&self, c: usize) -> [usize; 4] {
        let (i, j) = self.cell_ij(c);
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i + 1, j + 1),
            self.node_index(i, j + 1),
        ]
    }

    /// Cells sharing node `k` (at most four).
    pub fn node_cells(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.node_ij(k);
        let n = self.n;
        [(0isize, 0isize), (-1, 0), (-1, -1), (0, -1)]
            .into_iter()
            .filter_map(move |(di, dj)| {
                let ci = i as isize + di;
                let cj = j as isize + dj;
                (ci >= 0 && cj >= 0 && (ci as usize) < n && (cj as usize) < n)
                    .then(|| self.cell_index(ci as usize, cj as usize))
            })
    }

    /// Cell containing `p`, clamped to the grid.
    pub fn locate(&self, p: Vec2) -> usize {
        let clamp = |v: f64| {
            let k = ((v - Self::LOWER) / self.h).floor();
            (k.max(0.0) as usize).min(self.n - 1)
        };
        self.cell_index(clamp(p.x), clamp(p.y))
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let hi = Self::LOWER + Self::LENGTH;
        (Self::LOWER..=hi).contains(&p.x) && (Self::LOWER..=hi).contains(&p.y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.h(), 0.5);
        assert_eq!(g.num_nodes(), 25);
        let k = g.node_index(3, 1);
        assert_eq!(g.node_ij(k), (3, 1));
        assert_eq!(g.node_point(k), Vec2::new(0.5, -0.5));
        assert_eq!(g.cell_nodes(0), [0, 1, 6, 5]);
    }

    #[test]
    fn corner_node_has_one_cell() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.node_cells(0).count(), 1);
        assert_eq!(g.node_cells(g.node_index(2, 2)).count(), 4);
        assert_eq!(g.node_cells(g.node_index(4, 2)).count(), 2);
    }

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::new(3).is_err());
    }

    #[test]
    fn locate_clamps() {
        let g = Grid::new(4).unwrap();
        assert_eq!(g.locate(Vec2::new(1.0, 1.0)), g.cell_index(3, 3));
        assert_eq!(g.locate(Vec2::new(-0.9, 0.1)), g.cell_index(0, 2));
    }
}
