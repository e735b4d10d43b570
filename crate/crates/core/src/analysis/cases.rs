use std::fmt;
use std::sync::Arc;

use crate::Vec2;

use super::AnalysisError;

pub const BUILTIN_CASES: [&str; 4] = ["paper_sin", "linear", "quadratic", "constant"];

/// Source and boundary data of a Poisson problem `-Δu = f`.
pub trait ProblemData: Sync {
    fn source(&self, p: Vec2) -> f64;
    fn dirichlet(&self, p: Vec2) -> f64;
    /// Flux `∂u/∂n` at `p` for the outward unit normal `n`.
    fn neumann(&self, p: Vec2, n: Vec2) -> f64;
}

type ScalarFn = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;

/// An exact solution `u` with its gradient and `f = -Δu`.
#[derive(Clone)]
pub struct ManufacturedCase {
    name: String,
    u: ScalarFn,
    grad: VectorFn,
    f: ScalarFn,
}

impl fmt::Debug for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManufacturedCase")
            .field("name", &self.name)
            .finish()
    }
}

impl ManufacturedCase {
    pub fn new(
        name: impl Into<String>,
        u: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static,
        f: impl Fn(Vec2) -> f64 + Send + Sync + 'static,
    ) -> Self {
        ManufacturedCase {
            name: name.into(),
            u: Arc::new(u),
            grad: Arc::new(grad),
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn u(&self, p: Vec2) -> f64 {
        (self.u)(p)
    }

    pub fn grad(&self, p: Vec2) -> Vec2 {
        (self.grad)(p)
    }

    pub fn f(&self, p: Vec2) -> f64 {
        (self.f)(p)
    }
}

impl ProblemData for ManufacturedCase {
    fn source(&self, p: Vec2) -> f64 {
        self.f(p)
    }

    fn dirichlet(&self, p: Vec2) -> f64 {
        self.u(p)
    }

    fn neumann(&self, p: Vec2, n: Vec2) -> f64 {
        self.grad(p).dot(&n)
    }
}

pub fn make_case(name: &str) -> Result<ManufacturedCase, AnalysisError> {
    let case = match name {
        "paper_sin" => ManufacturedCase::new(
            name,
            |p| p.x.sin() * p.y.sin(),
            |p| Vec2::new(p.x.cos() * p.y.sin(), p.x.sin() * p.y.cos()),
            |p| 2.0 * p.x.sin() * p.y.sin(),
        ),
        "linear" => {
            ManufacturedCase::new(name, |p| 1.0 + p.x + p.y, |_| Vec2::new(1.0, 1.0), |_| 0.0)
        }
        "quadratic" => {
            ManufacturedCase::new(name, |p| p.x * p.x + p.y * p.y, |p| 2.0 * p, |_| -4.0)
        }
        "constant" => ManufacturedCase::new(name, |_| 1.0, |_| Vec2::zeros(), |_| 0.0),
        _ => return Err(AnalysisError::UnknownCase(name.to_string())),
    };
    Ok(case)
}
