use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dot, norm2, CsrMatrix, LinearSolveHandle};

const SEED: u64 = 0x00c0_ffee;
const MAX_ITER: usize = 500;
const RESIDUAL_TOL: f64 = 1e-3;

/// Estimate of `κ₂(A) = σ_max / σ_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondEstimate {
    pub value: f64,
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// Both eigen-iterations met the residual criterion.
    pub converged: bool,
}

fn start_vector(n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    x
}

/// Power iteration for the dominant eigenvalue of a symmetric positive
/// semidefinite operator. Stops once `‖My - μx‖ ≤ tol μ` with `y = Mx` and
/// `μ = xᵀy`.
fn dominant_eigenvalue(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> (f64, bool) {
    let mut x = start_vector(n);
    let mut mu = 0.0;
    for _ in 0..MAX_ITER {
        let y = apply(&x);
        mu = dot(&x, &y);
        let r: f64 = y
            .iter()
            .zip(&x)
            .map(|(yi, xi)| (yi - mu * xi).powi(2))
            .sum::<f64>()
            .sqrt();
        if r <= RESIDUAL_TOL * mu.abs() {
            return (mu, true);
        }
        let ny = norm2(&y);
        if ny == 0.0 || !ny.is_finite() {
            return (mu, false);
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    (mu, false)
}

/// `σ_max` from power iteration on `AᵀA`, `σ_min` from inverse iteration with
/// the factorization `lu` of `A`.
pub fn estimate_cond2(a: &CsrMatrix, lu: &dyn LinearSolveHandle) -> CondEstimate {
    let n = a.dim();
    assert_eq!(n, lu.dim(), "factorization dimension must match the matrix");
    let at = a.transpose();
    let (lmax, conv_max) = dominant_eigenvalue(n, |x| at.mul(&a.mul(x)));
    let (lmin_inv, conv_min) = dominant_eigenvalue(n, |x| lu.solve(&lu.solve_transpose(x)));
    let sigma_max = lmax.max(0.0).sqrt();
    let sigma_min = if lmin_inv > 0.0 {
        1.0 / lmin_inv.sqrt()
    } else {
        0.0
    };
    CondEstimate {
        value: sigma_max / sigma_min,
        sigma_max,
        sigma_min,
        converged: conv_max && conv_min,
    }
}
