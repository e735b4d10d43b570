use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::analysis::ProblemData;
use crate::geometry::{
    classify, project_to_boundary, BcKind, BoundaryProjection, BoundarySpec, Grid,
    GridClassification, LevelSetDomain, Neighborhood, NodeRole, ProjectionOptions,
};
use crate::linalg::CsrMatrix;
use crate::Vec2;

use super::{lagrange_weights, FdError};

/// A matrix row keyed by grid node, with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRow {
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl SparseRow {
    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn coefficient(&self, node: usize) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.0 == node)
            .map(|e| e.1)
            .sum()
    }

    /// Applies the row to a grid function given by its nodal values.
    pub fn apply(&self, values: impl Fn(usize) -> f64) -> f64 {
        self.entries.iter().map(|&(k, c)| c * values(k)).sum()
    }

    fn scale(&mut self, factor: f64) {
        self.entries.iter_mut().for_each(|e| e.1 *= factor);
        self.rhs *= factor;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Five-point row of a node inside Ω.
    Interior,
    /// Node inside Ω on the border of the grid; carries `u = g_D`.
    Frame,
    /// Boundary row of a ghost node.
    Ghost(BcKind),
    /// Boundary row of an exterior node pulled in by a neighboring ghost
    /// stencil.
    Extended(BcKind),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    /// Order of the boundary interpolation stencil, 1 or 2.
    pub p: usize,
    pub projection: ProjectionOptions,
    /// Enlarge Dirichlet stencils whose offset is close to one.
    pub mitigate: bool,
    /// Trigger threshold on `|1 - θ|`; `None` uses `h`.
    pub epsilon: Option<f64>,
    /// Rescale boundary rows to the `1/h²` magnitude of interior rows.
    pub equilibrate: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            p: 2,
            projection: ProjectionOptions::default(),
            mitigate: true,
            epsilon: None,
            equilibrate: false,
        }
    }
}

/// The assembled system `A u = b` with one row per active node, rows in
/// increasing grid-node order.
#[derive(Debug, Clone)]
pub struct FdSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Grid node of each row.
    pub nodes: Vec<usize>,
    /// Row of each grid node.
    pub row_of: Vec<Option<usize>>,
    pub row_kind: Vec<RowKind>,
    /// Projections of ghost and extended nodes, in row order.
    pub projections: Vec<BoundaryProjection>,
    pub classification: GridClassification,
    pub p: usize,
}

impl FdSystem {
    pub fn grid(&self) -> &Grid {
        &self.classification.grid
    }

    pub fn num_rows(&self) -> usize {
        self.nodes.len()
    }

    pub fn count(&self, pred: impl Fn(RowKind) -> bool) -> usize {
        self.row_kind.iter().filter(|&&k| pred(k)).count()
    }

    /// Rows of kind [`RowKind::Interior`], where errors are measured.
    pub fn interior_rows(&self) -> Vec<usize> {
        (0..self.num_rows())
            .filter(|&r| self.row_kind[r] == RowKind::Interior)
            .collect()
    }

    /// The linear system restricted to one row, keyed by grid node.
    pub fn row(&self, r: usize) -> SparseRow {
        let (cols, vals) = self.matrix.row(r);
        SparseRow {
            entries: cols
                .iter()
                .zip(vals)
                .map(|(&c, &v)| (self.nodes[c], v))
                .collect(),
            rhs: self.rhs[r],
        }
    }
}

fn is_frame(grid: &Grid, node: usize) -> bool {
    let (i, j) = grid.node_ij(node);
    let n = grid.cells_per_side();
    i == 0 || j == 0 || i == n || j == n
}

/// Five-point row of `-Δ_h u = f` at an interior node.
pub fn interior_row(
    classification: &GridClassification,
    node: usize,
    data: &dyn ProblemData,
) -> Result<SparseRow, FdError> {
    let grid = &classification.grid;
    let (i, j) = grid.node_ij(node);
    let h2 = grid.h() * grid.h();
    let mut entries = Vec::with_capacity(5);
    for (di, dj) in [(0, -1), (-1, 0), (1, 0), (0, 1)] {
        let neighbor = grid
            .offset_node(i, j, di, dj)
            .ok_or(FdError::StencilOutsideGrid {
                node,
                point: grid.node_point(node),
            })?;
        if !classification.is_active(neighbor) {
            return Err(FdError::InactiveNeighbor { node, neighbor });
        }
        entries.push((neighbor, -1.0 / h2));
    }
    entries.push((node, 4.0 / h2));
    entries.sort_by_key(|e| e.0);
    Ok(SparseRow {
        entries,
        rhs: data.source(grid.node_point(node)),
    })
}

/// Doubles the stencil spacing along axes where the foot point lies past the
/// first stencil interval (`θ > 1`), which happens when the level set is far
/// from a distance function. Keeps `l_0(θ) > 0`.
fn fit_stencil(projection: BoundaryProjection) -> BoundaryProjection {
    let mut out = projection;
    for d in 0..2 {
        if out.stride[d] == 1 && out.theta[d] > 1.0 {
            out.theta[d] /= 2.0;
            out.stride[d] = 2;
            out.enlarged = true;
        }
    }
    out
}

/// Doubles the stencil spacing along each axis where a Dirichlet offset
/// satisfies `|1 - θ| < ε`, halving that offset.
pub fn mitigate_ill_conditioning(
    projection: BoundaryProjection,
    epsilon: f64,
) -> BoundaryProjection {
    let mut out = projection;
    if out.bc_kind != BcKind::Dirichlet {
        return out;
    }
    for d in 0..2 {
        if out.signs[d] != 0 && out.stride[d] == 1 && (1.0 - out.theta[d]).abs() < epsilon {
            out.theta[d] /= 2.0;
            out.stride[d] = 2;
            out.enlarged = true;
        }
    }
    out
}

struct AxisStencil {
    offsets: Vec<isize>,
    l: Vec<f64>,
    dl: Vec<f64>,
    sign: f64,
}

impl AxisStencil {
    fn single() -> Self {
        AxisStencil {
            offsets: vec![0],
            l: vec![1.0],
            dl: vec![0.0],
            sign: 0.0,
        }
    }

    fn is_single(&self) -> bool {
        self.offsets.len() == 1
    }
}

fn axis_stencil(
    projection: &BoundaryProjection,
    d: usize,
    p: usize,
    h: f64,
) -> Result<AxisStencil, FdError> {
    let mut sign = projection.signs[d];
    if sign == 0 && projection.bc_kind == BcKind::Neumann {
        // foot on the ghost's grid line: orient toward the interior
        sign = -(projection.normal[d].signum() as i32) * (projection.normal[d] != 0.0) as i32;
    }
    if sign == 0 {
        return Ok(AxisStencil::single());
    }
    let mut theta = projection.theta[d];
    let cap = p as f64;
    if theta > cap {
        if theta > cap + 1e-9 {
            return Err(FdError::ThetaOutOfRange {
                node: projection.ghost,
                theta,
            });
        }
        theta = cap;
    }
    let stride = projection.stride[d];
    let w = lagrange_weights(theta, p, stride as f64 * h);
    Ok(AxisStencil {
        offsets: (0..=p)
            .map(|m| sign as isize * (m * stride) as isize)
            .collect(),
        l: w.l().to_vec(),
        dl: w.l_prime().to_vec(),
        sign: sign as f64,
    })
}

/// Boundary row of a ghost node: the Dirichlet value or the normal
/// derivative of the tensor-product interpolant at the foot point.
///
/// `phi` holds the nodal level-set values used to estimate the normal at the
/// foot point (the exact normal is used for circles).
pub fn ghost_row(
    grid: &Grid,
    projection: &BoundaryProjection,
    p: usize,
    phi: &[f64],
    domain: &LevelSetDomain,
    data: &dyn ProblemData,
) -> Result<SparseRow, FdError> {
    if p != 1 && p != 2 {
        return Err(FdError::UnsupportedOrder(p));
    }
    let h = grid.h();
    let g = projection.ghost;
    let (i, j) = grid.node_ij(g);
    let sx = axis_stencil(projection, 0, p, h)?;
    let sy = axis_stencil(projection, 1, p, h)?;
    let mut stencil = Vec::with_capacity(sx.offsets.len() * sy.offsets.len());
    for (mx, &ox) in sx.offsets.iter().enumerate() {
        for (my, &oy) in sy.offsets.iter().enumerate() {
            let node = grid
                .offset_node(i, j, ox, oy)
                .ok_or(FdError::StencilOutsideGrid {
                    node: g,
                    point: projection.ghost_point,
                })?;
            stencil.push((node, mx, my));
        }
    }
    let b = projection.foot;
    let (coeff, rhs): (Vec<f64>, f64) = match projection.bc_kind {
        BcKind::Dirichlet => (
            stencil
                .iter()
                .map(|&(_, mx, my)| sx.l[mx] * sy.l[my])
                .collect(),
            data.dirichlet(b),
        ),
        BcKind::Neumann => {
            let n = foot_normal(grid, projection, &sx, &sy, &stencil, phi, domain);
            (
                stencil
                    .iter()
                    .map(|&(_, mx, my)| {
                        n.x * sx.sign * sx.dl[mx] * sy.l[my] + n.y * sy.sign * sx.l[mx] * sy.dl[my]
                    })
                    .collect(),
                data.neumann(b, n),
            )
        }
    };
    let mut entries: Vec<(usize, f64)> = stencil
        .iter()
        .zip(coeff)
        .filter(|&(&(node, _, _), c)| c != 0.0 || node == g)
        .map(|(&(node, _, _), c)| (node, c))
        .collect();
    entries.sort_by_key(|e| e.0);
    Ok(SparseRow { entries, rhs })
}

/// Outward normal at the foot point from the gradient of the interpolated
/// level set; exact for circles.
fn foot_normal(
    grid: &Grid,
    projection: &BoundaryProjection,
    sx: &AxisStencil,
    sy: &AxisStencil,
    stencil: &[(usize, usize, usize)],
    phi: &[f64],
    domain: &LevelSetDomain,
) -> Vec2 {
    let b = projection.foot;
    if let Some((c, _)) = domain.circle() {
        let r = b - c;
        if r.norm() > 0.0 {
            return r / r.norm();
        }
    }
    let fallback = || domain.gradient(b, grid.h());
    let gx = if sx.is_single() {
        fallback().x
    } else {
        sx.sign
            * stencil
                .iter()
                .map(|&(k, mx, my)| sx.dl[mx] * sy.l[my] * phi[k])
                .sum::<f64>()
    };
    let gy = if sy.is_single() {
        fallback().y
    } else {
        sy.sign
            * stencil
                .iter()
                .map(|&(k, mx, my)| sx.l[mx] * sy.dl[my] * phi[k])
                .sum::<f64>()
    };
    let grad = Vec2::new(gx, gy);
    let len = grad.norm();
    if len > 0.0 && len.is_finite() {
        -grad / len
    } else {
        projection.normal
    }
}

fn frame_row(grid: &Grid, node: usize, data: &dyn ProblemData) -> SparseRow {
    SparseRow {
        entries: vec![(node, 1.0)],
        rhs: data.dirichlet(grid.node_point(node)),
    }
}

/// Assembles the ghost-point system on the four-neighborhood classification
/// of `domain`.
pub fn assemble_fd(
    grid: &Grid,
    domain: &LevelSetDomain,
    bc: &BoundarySpec,
    data: &dyn ProblemData,
    options: &FdOptions,
) -> Result<FdSystem, FdError> {
    if options.p != 1 && options.p != 2 {
        return Err(FdError::UnsupportedOrder(options.p));
    }
    let cls = classify(grid, domain, Neighborhood::Four);
    if cls.num_interior() == 0 {
        return Err(FdError::EmptyDomain);
    }
    let h = grid.h();
    let epsilon = options.epsilon.unwrap_or(h);

    type Built = (usize, RowKind, SparseRow, Option<BoundaryProjection>);
    let interior: Vec<usize> = (0..grid.num_nodes())
        .filter(|&k| cls.node_role[k] == NodeRole::Interior)
        .collect();
    let mut built: Vec<Built> = interior
        .par_iter()
        .map(|&k| -> Result<Built, FdError> {
            if is_frame(grid, k) {
                Ok((k, RowKind::Frame, frame_row(grid, k, data), None))
            } else {
                Ok((k, RowKind::Interior, interior_row(&cls, k, data)?, None))
            }
        })
        .collect::<Result<_, _>>()?;

    let build_boundary = |k: usize, extended: bool| -> Result<Built, FdError> {
        let proj = project_to_boundary(grid, domain, k, &options.projection)
            .map_err(|source| FdError::Projection { node: k, source })?;
        let kind = bc.kind_at(proj.foot);
        let mut proj = fit_stencil(proj.with_bc(kind));
        if options.mitigate {
            proj = mitigate_ill_conditioning(proj, epsilon);
        }
        let mut row = ghost_row(grid, &proj, options.p, &cls.phi, domain, data)?;
        if options.equilibrate {
            row.scale(match kind {
                BcKind::Dirichlet => 1.0 / (h * h),
                BcKind::Neumann => 1.0 / h,
            });
        }
        let role = if extended {
            RowKind::Extended(kind)
        } else {
            RowKind::Ghost(kind)
        };
        Ok((k, role, row, Some(proj)))
    };

    let mut present: BTreeSet<usize> = (0..grid.num_nodes())
        .filter(|&k| cls.is_active(k))
        .collect();
    let mut queue: Vec<usize> = (0..grid.num_nodes())
        .filter(|&k| cls.node_role[k] == NodeRole::Ghost)
        .collect();
    let mut extended = false;
    while !queue.is_empty() {
        let round: Vec<Built> = queue
            .par_iter()
            .map(|&k| build_boundary(k, extended))
            .collect::<Result<_, _>>()?;
        let mut next = BTreeSet::new();
        for (_, _, row, _) in &round {
            for &(node, _) in &row.entries {
                if !present.contains(&node) {
                    next.insert(node);
                }
            }
        }
        present.extend(next.iter().copied());
        built.extend(round);
        queue = next.into_iter().collect();
        extended = true;
    }

    let ordered: BTreeMap<usize, (RowKind, SparseRow, Option<BoundaryProjection>)> = built
        .into_iter()
        .map(|(k, kind, row, proj)| (k, (kind, row, proj)))
        .collect();
    let nodes: Vec<usize> = ordered.keys().copied().collect();
    let mut row_of = vec![None; grid.num_nodes()];
    for (r, &k) in nodes.iter().enumerate() {
        row_of[k] = Some(r);
    }
    let mut rows = Vec::with_capacity(nodes.len());
    let mut rhs = Vec::with_capacity(nodes.len());
    let mut row_kind = Vec::with_capacity(nodes.len());
    let mut projections = Vec::new();
    for (_, (kind, row, proj)) in ordered {
        rows.push(
            row.entries
                .iter()
                .map(|&(k, c)| (row_of[k].expect("stencil node has a row"), c))
                .collect(),
        );
        rhs.push(row.rhs);
        row_kind.push(kind);
        projections.extend(proj);
    }
    Ok(FdSystem {
        matrix: CsrMatrix::from_rows(nodes.len(), rows),
        rhs,
        nodes,
        row_of,
        row_kind,
        projections,
        classification: cls,
        p: options.p,
    })
}

/// Centered-difference gradient at the rows of [`FdSystem::interior_rows`].
pub fn fd_gradient(system: &FdSystem, u: &[f64]) -> Result<Vec<Vec2>, FdError> {
    if u.len() != system.num_rows() {
        return Err(FdError::LengthMismatch {
            expected: system.num_rows(),
            got: u.len(),
        });
    }
    let grid = system.grid();
    let h = grid.h();
    system
        .interior_rows()
        .into_iter()
        .map(|r| {
            let node = system.nodes[r];
            let (i, j) = grid.node_ij(node);
            let value = |di: isize, dj: isize| -> Result<f64, FdError> {
                let neighbor =
                    grid.offset_node(i, j, di, dj)
                        .ok_or(FdError::StencilOutsideGrid {
                            node,
                            point: grid.node_point(node),
                        })?;
                system.row_of[neighbor]
                    .map(|q| u[q])
                    .ok_or(FdError::InactiveNeighbor { node, neighbor })
            };
            Ok(Vec2::new(
                (value(1, 0)? - value(-1, 0)?) / (2.0 * h),
                (value(0, 1)? - value(0, -1)?) / (2.0 * h),
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{make_case, relative_error, ManufacturedCase, Norm};
    use crate::geometry::{make_domain, BcType, PhiSampling, BUILTIN_DOMAINS};
    use crate::linalg::solve_direct;

    fn half_plane(offset: f64) -> LevelSetDomain {
        // Ω = {x < offset}, outward normal (1, 0)
        LevelSetDomain::new("half-plane", move |p| offset - p.x, Vec2::new(-0.9, 0.0)).unwrap()
    }

    fn projection(
        grid: &Grid,
        node: usize,
        theta: [f64; 2],
        signs: [i32; 2],
        kind: BcKind,
    ) -> BoundaryProjection {
        let g = grid.node_point(node);
        let foot = g + Vec2::new(
            signs[0] as f64 * theta[0] * grid.h(),
            signs[1] as f64 * theta[1] * grid.h(),
        );
        BoundaryProjection {
            ghost: node,
            ghost_point: g,
            foot,
            nu: (foot - g).norm(),
            normal: Vec2::new(1.0, 0.0),
            theta,
            signs,
            stride: [1, 1],
            bc_kind: kind,
            enlarged: false,
        }
    }

    fn sample<'a>(grid: &'a Grid, u: impl Fn(Vec2) -> f64 + 'a) -> impl Fn(usize) -> f64 + 'a {
        move |k| u(grid.node_point(k))
    }

    #[test]
    fn interior_row_on_polynomials() {
        let grid = Grid::new(10).unwrap();
        let domain = make_domain("circle").unwrap();
        let cls = classify(&grid, &domain, Neighborhood::Four);
        let case = make_case("quadratic").unwrap();
        let node = grid.node_index(5, 6);
        let row = interior_row(&cls, node, &case).unwrap();
        assert_eq!(row.rhs, -4.0);
        assert!(row.apply(sample(&grid, |_| 3.0)).abs() < 1e-12);
        assert!(row.apply(sample(&grid, |p| p.x)).abs() < 1e-12);
        assert!((row.apply(sample(&grid, |p| p.x * p.x + p.y * p.y)) + 4.0).abs() < 1e-10);
        assert!((row.coefficient(node) - 4.0 / (grid.h() * grid.h())).abs() < 1e-12);
    }

    #[test]
    fn interior_row_rejects_inactive_neighbor() {
        let grid = Grid::new(8).unwrap();
        let domain = make_domain("circle").unwrap();
        let mut cls = classify(&grid, &domain, Neighborhood::Four);
        let node = grid.node_index(4, 4);
        let neighbor = grid.node_index(5, 4);
        cls.node_role[neighbor] = NodeRole::Inactive;
        let case = make_case("constant").unwrap();
        assert!(matches!(
            interior_row(&cls, node, &case),
            Err(FdError::InactiveNeighbor { .. })
        ));
    }

    #[test]
    fn dirichlet_row_collapses_at_zero_offset() {
        let grid = Grid::new(8).unwrap();
        let domain = half_plane(0.5);
        let node = grid.node_index(6, 4);
        let proj = projection(&grid, node, [0.0, 0.0], [0, 0], BcKind::Dirichlet);
        let case = make_case("linear").unwrap();
        let row = ghost_row(
            &grid,
            &proj,
            2,
            &vec![0.0; grid.num_nodes()],
            &domain,
            &case,
        )
        .unwrap();
        assert_eq!(row.entries, vec![(node, 1.0)]);
        assert_eq!(row.rhs, case.u(grid.node_point(node)));
    }

    #[test]
    fn dirichlet_p1_midpoint() {
        let grid = Grid::new(8).unwrap();
        let domain = half_plane(0.375);
        let node = grid.node_index(6, 4);
        let proj = projection(&grid, node, [0.5, 0.0], [-1, 0], BcKind::Dirichlet);
        let case = make_case("linear").unwrap();
        let row = ghost_row(
            &grid,
            &proj,
            1,
            &vec![0.0; grid.num_nodes()],
            &domain,
            &case,
        )
        .unwrap();
        assert_eq!(row.entries, vec![(grid.node_index(5, 4), 0.5), (node, 0.5)]);
    }

    #[test]
    fn neumann_p2_on_linear_function() {
        let grid = Grid::new(8).unwrap();
        let domain = half_plane(0.6);
        let node = grid.node_index(7, 3);
        let phi: Vec<f64> = (0..grid.num_nodes())
            .map(|k| domain.phi(grid.node_point(k)))
            .collect();
        let proj = projection(&grid, node, [0.6, 0.0], [-1, 0], BcKind::Neumann);
        let case = make_case("linear").unwrap();
        let row = ghost_row(&grid, &proj, 2, &phi, &domain, &case).unwrap();
        assert!((row.apply(sample(&grid, |p| p.x)) - 1.0).abs() < 1e-12);
        assert!((row.rhs - 1.0).abs() < 1e-12);
        assert!(row.sum().abs() < 1e-12);
    }

    #[test]
    fn mitigation_rule() {
        let grid = Grid::new(40).unwrap();
        let node = grid.node_index(30, 20);
        let near_one = projection(&grid, node, [0.99, 0.3], [-1, 1], BcKind::Dirichlet);
        let m = mitigate_ill_conditioning(near_one, 0.05);
        assert!((m.theta[0] - 0.495).abs() < 1e-15);
        assert_eq!(m.theta[1], 0.3);
        assert_eq!(m.stride, [2, 1]);
        assert!(m.enlarged);
        let mid = projection(&grid, node, [0.5, 0.0], [-1, 0], BcKind::Dirichlet);
        assert_eq!(mitigate_ill_conditioning(mid.clone(), 0.05), mid);
        let neumann = projection(&grid, node, [0.99, 0.0], [-1, 0], BcKind::Neumann);
        assert_eq!(mitigate_ill_conditioning(neumann.clone(), 0.05), neumann);
    }

    #[test]
    fn coarse_circle_counts() {
        let grid = Grid::new(4).unwrap();
        let domain = make_domain("circle").unwrap();
        let case = make_case("paper_sin").unwrap();
        let opts = FdOptions {
            p: 1,
            ..FdOptions::default()
        };
        let sys = assemble_fd(&grid, &domain, &BoundarySpec::AllDirichlet, &case, &opts).unwrap();
        assert_eq!(sys.num_rows(), 21);
        assert_eq!(sys.count(|k| k == RowKind::Interior), 9);
        assert_eq!(sys.count(|k| matches!(k, RowKind::Ghost(_))), 12);
    }

    fn full_square() -> LevelSetDomain {
        LevelSetDomain::new("square", |_| 1.0, Vec2::zeros()).unwrap()
    }

    fn solve_error(sys: &FdSystem, case: &ManufacturedCase) -> f64 {
        let (u, _) = solve_direct(&sys.matrix, &sys.rhs).unwrap();
        let rows = sys.interior_rows();
        let approx: Vec<f64> = rows.iter().map(|&r| u[r]).collect();
        let exact: Vec<f64> = rows
            .iter()
            .map(|&r| case.u(sys.grid().node_point(sys.nodes[r])))
            .collect();
        relative_error(&approx, &exact, &vec![1.0; rows.len()], Norm::Linf).unwrap()
    }

    #[test]
    fn full_square_is_classical_five_point() {
        let case = make_case("paper_sin").unwrap();
        let domain = full_square();
        let errs: Vec<f64> = [20, 40, 80]
            .iter()
            .map(|&n| {
                let grid = Grid::new(n).unwrap();
                let sys = assemble_fd(
                    &grid,
                    &domain,
                    &BoundarySpec::AllDirichlet,
                    &case,
                    &FdOptions::default(),
                )
                .unwrap();
                assert_eq!(sys.count(|k| k == RowKind::Frame), 4 * n);
                solve_error(&sys, &case)
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((1.9..2.2).contains(&order), "order {order}");
        }
    }

    #[test]
    fn quadratic_exactness_p2() {
        let case = make_case("quadratic").unwrap();
        let opts = FdOptions {
            projection: ProjectionOptions {
                tol_factor: 1e-12,
                sampling: PhiSampling::Analytic,
            },
            ..FdOptions::default()
        };
        for n in [20, 40] {
            let grid = Grid::new(n).unwrap();
            let domain = make_domain("circle").unwrap();
            let sys =
                assemble_fd(&grid, &domain, &BoundarySpec::AllDirichlet, &case, &opts).unwrap();
            assert!(solve_error(&sys, &case) <= 1e-8);
        }
    }

    #[test]
    fn row_sums_and_polynomial_reproduction() {
        for name in BUILTIN_DOMAINS {
            let domain = make_domain(name).unwrap();
            for bc in [BcType::Dirichlet, BcType::Mixed] {
                let spec = BoundarySpec::for_domain(bc, name);
                for p in [1, 2] {
                    let (case, u): (_, fn(Vec2) -> f64) = if p == 2 {
                        (make_case("quadratic").unwrap(), |q| q.x * q.x + q.y * q.y)
                    } else {
                        (make_case("linear").unwrap(), |q| 1.0 + q.x + q.y)
                    };
                    let grid = Grid::new(40).unwrap();
                    let opts = FdOptions {
                        p,
                        ..FdOptions::default()
                    };
                    let sys = assemble_fd(&grid, &domain, &spec, &case, &opts).unwrap();
                    for r in 0..sys.num_rows() {
                        let row = sys.row(r);
                        let (expected, tol) = match sys.row_kind[r] {
                            RowKind::Interior => (0.0, 1e-9 / (grid.h() * grid.h())),
                            RowKind::Frame => (1.0, 1e-14),
                            RowKind::Ghost(BcKind::Dirichlet)
                            | RowKind::Extended(BcKind::Dirichlet) => (1.0, 1e-12),
                            _ => (0.0, 1e-9 / grid.h()),
                        };
                        assert!(
                            (row.sum() - expected).abs() < tol,
                            "{name} {bc:?} p={p} row {r}"
                        );
                        if !matches!(sys.row_kind[r], RowKind::Interior) {
                            let got = row.apply(sample(&grid, u));
                            let scale = row.rhs.abs().max(1.0);
                            assert!(
                                (got - row.rhs).abs() < 1e-9 * scale,
                                "{name} {bc:?} p={p} row {r}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mitigated_diagonal_bound() {
        for name in BUILTIN_DOMAINS {
            let domain = make_domain(name).unwrap();
            let grid = Grid::new(80).unwrap();
            let eps = grid.h();
            for p in [1, 2] {
                let case = make_case("paper_sin").unwrap();
                let opts = FdOptions {
                    p,
                    ..FdOptions::default()
                };
                let sys =
                    assemble_fd(&grid, &domain, &BoundarySpec::AllDirichlet, &case, &opts).unwrap();
                for r in 0..sys.num_rows() {
                    if matches!(sys.row_kind[r], RowKind::Ghost(_) | RowKind::Extended(_)) {
                        let d = sys.matrix.get(r, r);
                        assert!(d >= eps * eps / 4.0, "{name} p={p}: diagonal {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn gradient_of_polynomials() {
        let grid = Grid::new(20).unwrap();
        let domain = make_domain("circle").unwrap();
        let case = make_case("constant").unwrap();
        let sys = assemble_fd(
            &grid,
            &domain,
            &BoundarySpec::AllDirichlet,
            &case,
            &FdOptions::default(),
        )
        .unwrap();
        let nodal = |f: fn(Vec2) -> f64| -> Vec<f64> {
            sys.nodes.iter().map(|&k| f(grid.node_point(k))).collect()
        };
        for g in fd_gradient(&sys, &nodal(|p| p.x)).unwrap() {
            assert!((g - Vec2::new(1.0, 0.0)).norm() < 1e-12);
        }
        for g in fd_gradient(&sys, &nodal(|_| 2.5)).unwrap() {
            assert_eq!(g, Vec2::zeros());
        }
        let sq = fd_gradient(&sys, &nodal(|p| p.x * p.x)).unwrap();
        for (r, g) in sys.interior_rows().into_iter().zip(sq) {
            let x = grid.node_point(sys.nodes[r]).x;
            assert!((g.x - 2.0 * x).abs() < 1e-12);
        }
    }
}
