use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::sync::Arc;

use crate::Vec2;

use super::GeometryError;

type ScalarField = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
type VectorField = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;

pub const BUILTIN_DOMAINS: [&str; 4] = ["circle", "leaf", "flower", "hourglass"];

/// A domain `Ω = {φ > 0}` described by an analytic level-set function.
///
/// The raw function handed to [`LevelSetDomain::new`] may use either sign
/// convention; it is evaluated at the interior seed and negated if needed so
/// that [`LevelSetDomain::phi`] is always positive inside.
#[derive(Clone)]
pub struct LevelSetDomain {
    name: String,
    phi: ScalarField,
    gradient: Option<VectorField>,
    seed: Vec2,
    sign: f64,
    circle: Option<(Vec2, f64)>,
}

impl fmt::Debug for LevelSetDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LevelSetDomain")
            .field("name", &self.name)
            .field("seed", &self.seed)
            .field("negated", &self.normalized_sign())
            .field("analytic_gradient", &self.gradient.is_some())
            .field("circle", &self.circle)
            .finish()
    }
}

impl LevelSetDomain {
    pub fn new(
        name: impl Into<String>,
        phi: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
        interior_seed: Vec2,
    ) -> Result<Self, GeometryError> {
        let raw = phi(interior_seed);
        if raw == 0.0 || !raw.is_finite() {
            return Err(GeometryError::DegenerateSeed(interior_seed));
        }
        Ok(LevelSetDomain {
            name: name.into(),
            phi: Arc::new(phi),
            gradient: None,
            seed: interior_seed,
            sign: raw.signum(),
            circle: None,
        })
    }

    /// Attaches the analytic gradient of the raw level set (before sign
    /// normalization).
    pub fn with_gradient(mut self, grad: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(grad));
        self
    }

    /// Marks the domain as a disc so normals are computed radially.
    pub fn with_exact_circle(mut self, center: Vec2, radius: f64) -> Self {
        self.circle = Some((center, radius));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn interior_seed(&self) -> Vec2 {
        self.seed
    }

    /// True when the raw level set was negated during normalization.
    pub fn normalized_sign(&self) -> bool {
        self.sign < 0.0
    }

    pub fn circle(&self) -> Option<(Vec2, f64)> {
        self.circle
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn phi(&self, p: Vec2) -> f64 {
        self.sign * (self.phi)(p)
    }

    /// Gradient of the normalized level set: analytic when available,
    /// otherwise centred differences with step `h / 2`.
    pub fn gradient(&self, p: Vec2, h: f64) -> Vec2 {
        match &self.gradient {
            Some(g) => self.sign * g(p),
            None => {
                let d = 0.5 * h;
                let ex = Vec2::new(d, 0.0);
                let ey = Vec2::new(0.0, d);
                Vec2::new(
                    (self.phi(p + ex) - self.phi(p - ex)) / (2.0 * d),
                    (self.phi(p + ey) - self.phi(p - ey)) / (2.0 * d),
                )
            }
        }
    }
}

/// Outward unit normal `-∇φ/|∇φ|` at `p` (exactly radial for circles).
///
/// `h` is only used as the finite-difference step when the domain carries no
/// analytic gradient.
pub fn normal_at(domain: &LevelSetDomain, p: Vec2, h: f64) -> Result<Vec2, GeometryError> {
    if let Some((center, _)) = domain.circle {
        let d = p - center;
        let r = d.norm();
        if r == 0.0 {
            return Err(GeometryError::DegenerateGeometry(p));
        }
        return Ok(d / r);
    }
    let g = domain.gradient(p, h);
    let len = g.norm();
    if !(len > 1e-14) {
        return Err(GeometryError::DegenerateGeometry(p));
    }
    Ok(-g / len)
}

/// Builds one of the four benchmark domains used in the comparison study.
pub fn make_domain(name: &str) -> Result<LevelSetDomain, GeometryError> {
    match name {
        "circle" => circle(Vec2::zeros(), 0.8),
        "leaf" => leaf(),
        "flower" => flower(),
        "hourglass" => hourglass(),
        other => Err(GeometryError::UnknownDomain(other.to_string())),
    }
}

fn circle(center: Vec2, radius: f64) -> Result<LevelSetDomain, GeometryError> {
    Ok(LevelSetDomain::new(
        "circle",
        move |p: Vec2| radius - (p - center).norm(),
        center,
    )?
    .with_gradient(move |p: Vec2| {
        let d = p - center;
        let r = d.norm();
        if r == 0.0 {
            Vec2::zeros()
        } else {
            -d / r
        }
    })
    .with_exact_circle(center, radius))
}

// Intersection of two discs of radius 0.7 centred at (∓0.25 cos π/4, 0).
fn leaf() -> Result<LevelSetDomain, GeometryError> {
    const R0: f64 = 0.7;
    let c1 = Vec2::new(-0.25 * FRAC_PI_4.cos(), 0.0);
    let c2 = Vec2::new(0.25 * FRAC_PI_4.sin(), 0.0);
    let phi = move |p: Vec2| ((p - c1).norm() - R0).max((p - c2).norm() - R0);
    let grad = move |p: Vec2| {
        let (d1, d2) = (p - c1, p - c2);
        let d = if d1.norm() - R0 >= d2.norm() - R0 {
            d1
        } else {
            d2
        };
        let r = d.norm();
        if r == 0.0 {
            Vec2::zeros()
        } else {
            d / r
        }
    };
    Ok(LevelSetDomain::new("leaf", phi, Vec2::zeros())?.with_gradient(grad))
}

fn shifted_origin() -> Vec2 {
    Vec2::new(0.03 * 3f64.sqrt(), 0.04 * 2f64.sqrt())
}

// R - 0.52 - (Y⁵ + 5X⁴Y - 10X²Y³) / (5R⁵); the quintic equals R⁵ sin 5ϑ, so
// the level set is R - 0.52 - sin(5ϑ)/5 in polar coordinates about the shift.
fn flower() -> Result<LevelSetDomain, GeometryError> {
    let o = shifted_origin();
    let phi = move |p: Vec2| {
        let d = p - o;
        let r = d.norm();
        if r == 0.0 {
            return -0.52;
        }
        let (x, y) = (d.x, d.y);
        let quintic = y.powi(5) + 5.0 * x.powi(4) * y - 10.0 * x * x * y.powi(3);
        r - 0.52 - quintic / (5.0 * r.powi(5))
    };
    let grad = move |p: Vec2| {
        let d = p - o;
        let r2 = d.norm_squared();
        if r2 == 0.0 {
            return Vec2::zeros();
        }
        let r = r2.sqrt();
        let angle = d.y.atan2(d.x);
        let grad_r = d / r;
        let grad_angle = Vec2::new(-d.y, d.x) / r2;
        grad_r - (5.0 * angle).cos() * grad_angle
    };
    Ok(LevelSetDomain::new("flower", phi, o)?.with_gradient(grad))
}

// 256Y⁴ - 16X⁴ - 128Y² + 36X²: two lobes meeting at the saddle point, so the
// seed sits inside the upper lobe rather than at the shifted origin.
fn hourglass() -> Result<LevelSetDomain, GeometryError> {
    let o = shifted_origin();
    let phi = move |p: Vec2| {
        let (x, y) = (p.x - o.x, p.y - o.y);
        256.0 * y.powi(4) - 16.0 * x.powi(4) - 128.0 * y * y + 36.0 * x * x
    };
    let grad = move |p: Vec2| {
        let (x, y) = (p.x - o.x, p.y - o.y);
        Vec2::new(72.0 * x - 64.0 * x.powi(3), 1024.0 * y.powi(3) - 256.0 * y)
    };
    Ok(LevelSetDomain::new("hourglass", phi, o + Vec2::new(0.0, 0.4))?.with_gradient(grad))
}
