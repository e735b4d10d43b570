use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::ProblemData;
use crate::geometry::{
    classify, normal_at, snap_small_cells, snap_small_cells_normalized, BcKind, BoundarySpec,
    CellRole, CutCell, Grid, GridClassification, LevelSetDomain, Neighborhood,
};
use crate::linalg::CsrMatrix;
use crate::Vec2;

use super::{local_basis, FemError, QuadratureRule};

type Local = [[f64; 4]; 4];

const FULL_STIFFNESS: Local = [
    [4.0, -1.0, -2.0, -1.0],
    [-1.0, 4.0, -1.0, -2.0],
    [-2.0, -1.0, 4.0, -1.0],
    [-1.0, -2.0, -1.0, 4.0],
];
const FULL_MASS: Local = [
    [4.0, 2.0, 1.0, 2.0],
    [2.0, 4.0, 2.0, 1.0],
    [1.0, 2.0, 4.0, 2.0],
    [2.0, 1.0, 2.0, 4.0],
];

/// How the snapping band `h^α` is compared with nodal level-set values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Snapping {
    Off,
    /// `|φ| < h^α`.
    LevelSet,
    /// `|φ| / |∇φ| < h^α`.
    Distance,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FemOptions {
    /// Penalty `λ = h^(-α)`; also the snapping exponent.
    pub alpha: f64,
    pub snapping: Snapping,
}

impl Default for FemOptions {
    fn default() -> Self {
        FemOptions {
            alpha: 2.0,
            snapping: Snapping::Distance,
        }
    }
}

/// Global matrices over the active nodes, named after the terms of the
/// Nitsche form.
#[derive(Debug, Clone)]
pub struct FemMatrices {
    /// `(∇φ_j, ∇φ_i)` over Ω_h.
    pub s: CsrMatrix,
    /// `(∂_n φ_j, φ_i) + (φ_j, ∂_n φ_i)` over Γ_D,h.
    pub s_t: CsrMatrix,
    /// `(φ_j, φ_i)` over Γ_D,h.
    pub p: CsrMatrix,
    /// `(φ_j, φ_i)` over Ω_h.
    pub m: CsrMatrix,
    /// `(φ_j, φ_i)` over Γ_N,h.
    pub n: CsrMatrix,
    /// `(φ_j, ∂_n φ_i)` over Γ_D,h, row `i`.
    pub d: CsrMatrix,
    pub lambda: f64,
}

/// A sample of a volume quadrature rule over Ω_h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    pub cell: usize,
    pub point: Vec2,
    pub weight: f64,
}

/// Boundary contributions of one cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryTerms {
    pub s_t: Local,
    pub p: Local,
    pub n: Local,
    pub d: Local,
    pub rhs: [f64; 4],
    pub dirichlet_length: f64,
    pub neumann_length: f64,
}

#[derive(Debug, Clone)]
pub struct FemSystem {
    /// `S - S_T + λ P`.
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub matrices: FemMatrices,
    /// Grid node of each row.
    pub nodes: Vec<usize>,
    pub row_of: Vec<Option<usize>>,
    /// Eight-neighborhood classification after snapping.
    pub classification: GridClassification,
    /// Non-empty pieces of Ω_h, one per inside or cut cell.
    pub cells: Vec<CutCell>,
    pub area: f64,
    pub dirichlet_length: f64,
    pub neumann_length: f64,
}

impl FemSystem {
    pub fn grid(&self) -> &Grid {
        &self.classification.grid
    }

    pub fn num_rows(&self) -> usize {
        self.nodes.len()
    }

    /// Volume quadrature of Ω_h: the triangle rule on every cut-cell
    /// triangle.
    pub fn quadrature_points(&self) -> Vec<QuadPoint> {
        let rule = QuadratureRule::triangle();
        let mut out = Vec::with_capacity(self.cells.len() * 12);
        for cut in &self.cells {
            for t in &cut.triangles {
                out.extend(rule.on_triangle(t).map(|(point, weight)| QuadPoint {
                    cell: cut.cell,
                    point,
                    weight,
                }));
            }
        }
        out
    }

    fn local_coefficients(&self, cell: usize, u: &[f64]) -> [f64; 4] {
        self.grid()
            .cell_nodes(cell)
            .map(|k| self.row_of[k].map_or(0.0, |r| u[r]))
    }
}

/// `u_h = Σ u_i φ_i` at the given points.
pub fn fem_values(system: &FemSystem, u: &[f64], points: &[QuadPoint]) -> Vec<f64> {
    points
        .iter()
        .map(|q| {
            let c = system.local_coefficients(q.cell, u);
            let (v, _) = local_basis(system.grid(), q.cell, q.point);
            (0..4).map(|a| c[a] * v[a]).sum()
        })
        .collect()
}

/// `∇u_h = Σ u_i ∇φ_i` at the given points, evaluated on each point's cell.
pub fn fem_gradient(system: &FemSystem, u: &[f64], points: &[QuadPoint]) -> Vec<Vec2> {
    points
        .iter()
        .map(|q| {
            let c = system.local_coefficients(q.cell, u);
            let (_, g) = local_basis(system.grid(), q.cell, q.point);
            (0..4).map(|a| g[a] * c[a]).sum()
        })
        .collect()
}

/// Local stiffness and mass matrices of a cut cell; closed forms for
/// uncut cells.
pub fn element_volume_terms(grid: &Grid, cut: &CutCell, full: bool) -> (Local, Local) {
    let h = grid.h();
    if full {
        let s = FULL_STIFFNESS.map(|r| r.map(|v| v / 6.0));
        let m = FULL_MASS.map(|r| r.map(|v| v * h * h / 36.0));
        return (s, m);
    }
    let rule = QuadratureRule::triangle();
    let mut s = [[0.0; 4]; 4];
    let mut m = [[0.0; 4]; 4];
    for t in &cut.triangles {
        for (p, w) in rule.on_triangle(t) {
            let (v, g) = local_basis(grid, cut.cell, p);
            for a in 0..4 {
                for b in 0..4 {
                    s[a][b] += w * g[a].dot(&g[b]);
                    m[a][b] += w * v[a] * v[b];
                }
            }
        }
    }
    (s, m)
}

/// Splits `a → b` where it crosses the vertical line `x = split`.
fn split_segment(a: Vec2, b: Vec2, split: Option<f64>) -> Vec<(Vec2, Vec2)> {
    if let Some(s) = split {
        if (a.x - s) * (b.x - s) < 0.0 {
            let t = (s - a.x) / (b.x - a.x);
            let m = Vec2::new(s, a.y + t * (b.y - a.y));
            return vec![(a, m), (m, b)];
        }
    }
    vec![(a, b)]
}

/// Nitsche boundary terms of one cell. `∂_n φ_i` uses the segment normal,
/// Neumann data the level-set normal at each quadrature point.
pub fn boundary_terms(
    grid: &Grid,
    cut: &CutCell,
    bc: &BoundarySpec,
    domain: &LevelSetDomain,
    data: &dyn ProblemData,
    lambda: f64,
) -> BoundaryTerms {
    let rule = QuadratureRule::segment();
    let mut out = BoundaryTerms::default();
    for seg in &cut.boundary_segments {
        for (a, b) in split_segment(seg.a, seg.b, bc.split_x()) {
            for (q, w) in rule.on_segment(a, b) {
                let (v, g) = local_basis(grid, cut.cell, q);
                match bc.kind_at(q) {
                    BcKind::Dirichlet => {
                        let dn = g.map(|gi| gi.dot(&seg.normal));
                        let gd = data.dirichlet(q);
                        for i in 0..4 {
                            for j in 0..4 {
                                out.s_t[i][j] += w * (dn[j] * v[i] + v[j] * dn[i]);
                                out.p[i][j] += w * v[i] * v[j];
                                out.d[i][j] += w * v[j] * dn[i];
                            }
                            out.rhs[i] += w * gd * (lambda * v[i] - dn[i]);
                        }
                        out.dirichlet_length += w;
                    }
                    BcKind::Neumann => {
                        let n = normal_at(domain, q, grid.h()).unwrap_or(seg.normal);
                        let gn = data.neumann(q, n);
                        for i in 0..4 {
                            for j in 0..4 {
                                out.n[i][j] += w * v[i] * v[j];
                            }
                            out.rhs[i] += w * gn * v[i];
                        }
                        out.neumann_length += w;
                    }
                }
            }
        }
    }
    out
}

struct CellContribution {
    nodes: [usize; 4],
    s: Local,
    m: Local,
    boundary: BoundaryTerms,
    source: [f64; 4],
    cut: CutCell,
}

/// Assembles `A = S - S_T + λP` and `F = ∫fφ_i + ∫_Γ_D g_D(λφ_i - ∂_nφ_i)
/// + ∫_Γ_N g_N φ_i` over the active nodes.
pub fn assemble_fem(
    grid: &Grid,
    domain: &LevelSetDomain,
    bc: &BoundarySpec,
    data: &dyn ProblemData,
    options: &FemOptions,
) -> Result<FemSystem, FemError> {
    let h = grid.h();
    let lambda = h.powf(-options.alpha);
    let raw = classify(grid, domain, Neighborhood::Eight);
    let cls = match options.snapping {
        Snapping::Off => raw,
        Snapping::LevelSet => snap_small_cells(&raw, options.alpha),
        Snapping::Distance => snap_small_cells_normalized(&raw, domain, options.alpha),
    };
    let nodes = cls.active_nodes();
    if nodes.is_empty() {
        return Err(FemError::EmptyDomain);
    }
    let mut row_of = vec![None; grid.num_nodes()];
    for (r, &k) in nodes.iter().enumerate() {
        row_of[k] = Some(r);
    }

    let tri_rule = QuadratureRule::triangle();
    let contributions: Vec<CellContribution> = (0..grid.num_cells())
        .into_par_iter()
        .filter_map(|c| {
            let full = match cls.cell_role[c] {
                CellRole::Inside => true,
                CellRole::Cut => false,
                CellRole::Outside | CellRole::Snapped => return None,
            };
            let cut = CutCell::from_values(grid, c, cls.cell_values(c));
            if cut.is_empty() {
                return None;
            }
            let (s, m) = element_volume_terms(grid, &cut, full);
            let mut source = [0.0; 4];
            for t in &cut.triangles {
                for (p, w) in tri_rule.on_triangle(t) {
                    let (v, _) = local_basis(grid, c, p);
                    let f = data.source(p);
                    for a in 0..4 {
                        source[a] += w * f * v[a];
                    }
                }
            }
            let boundary = if full {
                BoundaryTerms::default()
            } else {
                boundary_terms(grid, &cut, bc, domain, data, lambda)
            };
            Some(CellContribution {
                nodes: grid.cell_nodes(c),
                s,
                m,
                boundary,
                source,
                cut,
            })
        })
        .collect();

    let n = nodes.len();
    let mut trip: [Vec<(usize, usize, f64)>; 6] = Default::default();
    let mut rhs = vec![0.0; n];
    let (mut area, mut len_d, mut len_n) = (0.0, 0.0, 0.0);
    let mut cells = Vec::with_capacity(contributions.len());
    for cc in contributions {
        let rows = cc
            .nodes
            .map(|k| row_of[k].expect("vertex of a non-empty cell is active"));
        let b = &cc.boundary;
        for (t, local) in trip
            .iter_mut()
            .zip([&cc.s, &b.s_t, &b.p, &cc.m, &b.n, &b.d])
        {
            for a in 0..4 {
                for c in 0..4 {
                    if local[a][c] != 0.0 {
                        t.push((rows[a], rows[c], local[a][c]));
                    }
                }
            }
        }
        for a in 0..4 {
            rhs[rows[a]] += cc.source[a] + b.rhs[a];
        }
        area += cc.cut.area;
        len_d += b.dirichlet_length;
        len_n += b.neumann_length;
        cells.push(cc.cut);
    }
    if len_d <= 0.0 {
        return Err(FemError::NoDirichletBoundary);
    }
    let [s, s_t, p, m, nm, d] = trip.map(|t| CsrMatrix::from_triplets(n, &t));
    let matrix = s.add_scaled(&s_t, -1.0).add_scaled(&p, lambda);
    Ok(FemSystem {
        matrix,
        rhs,
        matrices: FemMatrices {
            s,
            s_t,
            p,
            m,
            n: nm,
            d,
            lambda,
        },
        nodes,
        row_of,
        classification: cls,
        cells,
        area,
        dirichlet_length: len_d,
        neumann_length: len_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{make_case, relative_error, Norm};
    use crate::geometry::{make_domain, BcType, BUILTIN_DOMAINS};
    use crate::linalg::solve_direct;

    fn sum_all(a: &CsrMatrix) -> f64 {
        (0..a.dim()).map(|i| a.row_sum(i)).sum()
    }

    #[test]
    fn full_cell_closed_forms_match_quadrature() {
        let grid = Grid::new(10).unwrap();
        let cell = grid.cell_index(3, 4);
        let cut = CutCell::from_values(&grid, cell, [1.0; 4]);
        let (sq, mq) = element_volume_terms(&grid, &cut, false);
        let (sc, mc) = element_volume_terms(&grid, &cut, true);
        let h2 = grid.h() * grid.h();
        for a in 0..4 {
            for b in 0..4 {
                assert!((sq[a][b] - sc[a][b]).abs() < 1e-12);
                assert!((mq[a][b] - mc[a][b]).abs() < 1e-12 * h2);
            }
        }
        assert!((sc[0][0] - 4.0 / 6.0).abs() < 1e-15);
        assert!((mc[0][2] - h2 / 36.0).abs() < 1e-15);
    }

    #[test]
    fn empty_cell_has_zero_terms() {
        let grid = Grid::new(10).unwrap();
        let (s, m) = element_volume_terms(&grid, &CutCell::empty(0), false);
        assert_eq!(s, [[0.0; 4]; 4]);
        assert_eq!(m, [[0.0; 4]; 4]);
    }

    #[test]
    fn horizontal_dirichlet_segment() {
        // Ω ∩ cell is the lower half: Γ_h is the horizontal mid-line
        let grid = Grid::new(10).unwrap();
        let domain = make_domain("circle").unwrap();
        let case = make_case("constant").unwrap();
        let cell = grid.cell_index(2, 5);
        let cut = CutCell::from_values(&grid, cell, [1.0, 1.0, -1.0, -1.0]);
        let bt = boundary_terms(
            &grid,
            &cut,
            &BoundarySpec::AllDirichlet,
            &domain,
            &case,
            1.0,
        );
        let total: f64 = bt.p.iter().flatten().sum();
        assert!((total - grid.h()).abs() < 1e-14);
        assert!((bt.dirichlet_length - grid.h()).abs() < 1e-14);
        assert_eq!(bt.neumann_length, 0.0);
    }

    #[test]
    fn neumann_segment_has_no_nitsche_terms() {
        let grid = Grid::new(10).unwrap();
        let domain = make_domain("circle").unwrap();
        let case = make_case("paper_sin").unwrap();
        let cell = grid.cell_index(7, 5);
        let cut = CutCell::from_values(&grid, cell, [1.0, -1.0, -1.0, 1.0]);
        let spec = BoundarySpec::for_domain(BcType::Mixed, "circle");
        let bt = boundary_terms(&grid, &cut, &spec, &domain, &case, 100.0);
        assert_eq!(bt.s_t, [[0.0; 4]; 4]);
        assert_eq!(bt.p, [[0.0; 4]; 4]);
        assert_eq!(bt.d, [[0.0; 4]; 4]);
        assert!(bt.neumann_length > 0.0);
    }

    #[test]
    fn constant_solution_is_consistent() {
        let grid = Grid::new(20).unwrap();
        let case = make_case("constant").unwrap();
        for name in BUILTIN_DOMAINS {
            let domain = make_domain(name).unwrap();
            let sys = assemble_fem(
                &grid,
                &domain,
                &BoundarySpec::AllDirichlet,
                &case,
                &FemOptions::default(),
            )
            .unwrap();
            let ones = vec![1.0; sys.num_rows()];
            let a1 = sys.matrix.mul(&ones);
            let scale = sys.matrix.max_abs();
            for (x, y) in a1.iter().zip(&sys.rhs) {
                assert!((x - y).abs() < 1e-10 * scale, "{name}");
            }
        }
    }

    #[test]
    fn symmetry_and_measures() {
        for name in BUILTIN_DOMAINS {
            let domain = make_domain(name).unwrap();
            for bc in [BcType::Dirichlet, BcType::Mixed] {
                let grid = Grid::new(40).unwrap();
                let case = make_case("paper_sin").unwrap();
                let spec = BoundarySpec::for_domain(bc, name);
                let sys =
                    assemble_fem(&grid, &domain, &spec, &case, &FemOptions::default()).unwrap();
                let mats = &sys.matrices;
                assert!(sys.matrix.symmetry_defect() <= 1e-12, "{name}");
                for m in [&mats.s, &mats.s_t, &mats.p, &mats.m, &mats.n] {
                    assert!(m.symmetry_defect() <= 1e-12);
                }
                assert!((sum_all(&mats.m) - sys.area).abs() < 1e-12);
                assert!((sum_all(&mats.p) - sys.dirichlet_length).abs() < 1e-12);
                assert!((sum_all(&mats.n) - sys.neumann_length).abs() < 1e-12);
                for i in 0..sys.num_rows() {
                    assert!(mats.s.row_sum(i).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn circle_measures_converge() {
        let domain = make_domain("circle").unwrap();
        let case = make_case("constant").unwrap();
        let grid = Grid::new(80).unwrap();
        let sys = assemble_fem(
            &grid,
            &domain,
            &BoundarySpec::AllDirichlet,
            &case,
            &FemOptions::default(),
        )
        .unwrap();
        let pi = std::f64::consts::PI;
        assert!((sys.area - 0.64 * pi).abs() < 1e-3);
        assert!((sys.dirichlet_length - 1.6 * pi).abs() < 1e-3);
    }

    #[test]
    fn linear_solution_is_reproduced() {
        let case = make_case("linear").unwrap();
        for name in BUILTIN_DOMAINS {
            let domain = make_domain(name).unwrap();
            // Neumann data lives on Γ while the form uses Γ_h normals, so
            // only the pure Dirichlet problem is exact
            for n in [40, 80] {
                let grid = Grid::new(n).unwrap();
                let sys = assemble_fem(
                    &grid,
                    &domain,
                    &BoundarySpec::AllDirichlet,
                    &case,
                    &FemOptions::default(),
                )
                .unwrap();
                let (u, _) = solve_direct(&sys.matrix, &sys.rhs).unwrap();
                let exact: Vec<f64> = sys
                    .nodes
                    .iter()
                    .map(|&k| case.u(grid.node_point(k)))
                    .collect();
                let err = relative_error(&u, &exact, &vec![1.0; u.len()], Norm::Linf).unwrap();
                assert!(err <= 1e-8, "{name} N={n}: {err}");
            }
        }
    }

    #[test]
    fn gradient_reconstruction() {
        let grid = Grid::new(20).unwrap();
        let domain = make_domain("circle").unwrap();
        let case = make_case("constant").unwrap();
        let sys = assemble_fem(
            &grid,
            &domain,
            &BoundarySpec::AllDirichlet,
            &case,
            &FemOptions::default(),
        )
        .unwrap();
        let nodal = |f: fn(Vec2) -> f64| -> Vec<f64> {
            sys.nodes.iter().map(|&k| f(grid.node_point(k))).collect()
        };
        let pts = sys.quadrature_points();
        for g in fem_gradient(&sys, &nodal(|p| p.x + p.y), &pts) {
            assert!((g - Vec2::new(1.0, 1.0)).norm() < 1e-12);
        }
        for g in fem_gradient(&sys, &nodal(|_| 3.0), &pts) {
            assert!(g.norm() < 1e-12);
        }
        let cell = grid.cell_index(10, 10);
        let centre = grid.cell_origin(cell) + Vec2::new(grid.h(), grid.h()) / 2.0;
        let q = [QuadPoint {
            cell,
            point: centre,
            weight: 1.0,
        }];
        let g = fem_gradient(&sys, &nodal(|p| p.x * p.y), &q)[0];
        assert!((g - Vec2::new(centre.y, centre.x)).norm() < 1e-12);
        let total: f64 = pts.iter().map(|q| q.weight).sum();
        assert!((total - sys.area).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_region_required() {
        // a disc entirely in x > 0 with Γ_D = {x ≤ 0} has no Dirichlet part
        let domain = LevelSetDomain::new(
            "shifted",
            |p| 0.3 - (p - Vec2::new(0.5, 0.0)).norm(),
            Vec2::new(0.5, 0.0),
        )
        .unwrap();
        let grid = Grid::new(20).unwrap();
        let case = make_case("constant").unwrap();
        let spec = BoundarySpec::Mixed { inclusive: true };
        assert!(matches!(
            assemble_fem(&grid, &domain, &spec, &case, &FemOptions::default()),
            Err(FemError::NoDirichletBoundary)
        ));
    }
}
