use serde::{Deserialize, Serialize};

use crate::Vec2;

use super::{normal_at, GeometryError, Grid, LevelSetDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// How the level set is evaluated at off-grid points during bisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiSampling {
    /// Bilinear interpolation of the nodal values of the enclosing cell.
    Bilinear,
    /// Direct evaluation of the analytic level set.
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOptions {
    /// Bisection stops once the bracket is narrower than `tol_factor · h`.
    pub tol_factor: f64,
    pub sampling: PhiSampling,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            tol_factor: 1e-4,
            sampling: PhiSampling::Bilinear,
        }
    }
}

/// Closest-point data of a ghost node `G`: foot point `B = G - n̂ ν` on Γ and
/// the upwind-stencil offsets `ϑ = s (B - G) / h` per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProjection {
    pub ghost: usize,
    pub ghost_point: Vec2,
    pub foot: Vec2,
    pub nu: f64,
    /// Outward unit normal used for the projection.
    pub normal: Vec2,
    /// Offsets in units of the stencil spacing `stride · h`.
    pub theta: [f64; 2],
    pub signs: [i32; 2],
    /// Stencil spacing in grid steps per axis; 2 after stencil enlargement.
    pub stride: [usize; 2],
    pub bc_kind: BcKind,
    pub enlarged: bool,
}

impl BoundaryProjection {
    pub fn with_bc(mut self, kind: BcKind) -> Self {
        self.bc_kind = kind;
        self
    }
}

/// Bracketing range for the foot-point search: one cell diagonal in each
/// direction.
pub fn bracket_max(h: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * h
}

/// Projects exterior node `node` onto Γ along its outward normal.
pub fn project_to_boundary(
    grid: &Grid,
    domain: &LevelSetDomain,
    node: usize,
    options: &ProjectionOptions,
) -> Result<BoundaryProjection, GeometryError> {
    let h = grid.h();
    let g = grid.node_point(node);
    let phi_g = domain.phi(g);
    if phi_g > 0.0 {
        return Err(GeometryError::NotExterior {
            node,
            point: g,
            phi: phi_g,
        });
    }
    let normal = normal_at(domain, g, h)?;
    let sample = |t: f64| sample_phi(grid, domain, g - normal * t, options.sampling);

    let nu = if phi_g == 0.0 {
        0.0
    } else {
        let reach = bracket_max(h);
        let step = h / 8.0;
        let mut lo = 0.0;
        let mut hi = None;
        let mut t = step;
        while t <= reach + 1e-12 * h {
            if sample(t) > 0.0 {
                hi = Some(t);
                break;
            }
            lo = t;
            t += step;
        }
        let mut hi = hi.ok_or(GeometryError::ProjectionFailed {
            node,
            point: g,
            bracket: reach,
        })?;
        let tol = options.tol_factor * h;
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if sample(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let foot = g - normal * nu;
    let axis = |d: f64| -> (f64, i32) {
        if d.abs() <= 1e-12 * h {
            (0.0, 0)
        } else {
            (d.abs() / h, d.signum() as i32)
        }
    };
    let (tx, sx) = axis(foot.x - g.x);
    let (ty, sy) = axis(foot.y - g.y);
    Ok(BoundaryProjection {
        ghost: node,
        ghost_point: g,
        foot,
        nu,
        normal,
        theta: [tx, ty],
        signs: [sx, sy],
        stride: [1, 1],
        bc_kind: BcKind::Dirichlet,
        enlarged: false,
    })
}

fn sample_phi(grid: &Grid, domain: &LevelSetDomain, p: Vec2, sampling: PhiSampling) -> f64 {
    match sampling {
        PhiSampling::Analytic => domain.phi(p),
        PhiSampling::Bilinear => {
            let c = grid.locate(p);
            let o = grid.cell_origin(c);
            let h = grid.h();
            let v = grid.cell_nodes(c).map(|k| domain.phi(grid.node_point(k)));
            let xi = (p.x - o.x) / h;
            let eta = (p.y - o.y) / h;
            v[0] * (1.0 - xi) * (1.0 - eta)
                + v[1] * xi * (1.0 - eta)
                + v[2] * xi * eta
                + v[3] * (1.0 - xi) * eta
        }
    }
}
