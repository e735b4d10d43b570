/// One-dimensional Lagrange weights on the upwind stencil `0, 1, .., p` (in
/// units of the stencil spacing) evaluated at offset `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagrangeWeights {
    pub p: usize,
    l: [f64; 3],
    l_prime: [f64; 3],
}

impl LagrangeWeights {
    /// Interpolation weights, `p + 1` entries.
    pub fn l(&self) -> &[f64] {
        &self.l[..=self.p]
    }

    /// Derivative weights including the `1/h` factor, `p + 1` entries.
    pub fn l_prime(&self) -> &[f64] {
        &self.l_prime[..=self.p]
    }
}

/// Weights of the degree-`p` interpolant on nodes spaced `h` apart.
///
/// # Panics
/// If `p ∉ {1, 2}` or `θ ∉ [0, p]`.
pub fn lagrange_weights(theta: f64, p: usize, h: f64) -> LagrangeWeights {
    assert!(
        theta >= 0.0 && theta <= p as f64,
        "stencil offset {theta} outside [0, {p}]"
    );
    let t = theta;
    let (l, d) = match p {
        1 => ([1.0 - t, t, 0.0], [-1.0, 1.0, 0.0]),
        2 => (
            [
                (1.0 - t) * (2.0 - t) / 2.0,
                t * (2.0 - t),
                t * (t - 1.0) / 2.0,
            ],
            [
                (2.0 * t - 3.0) / 2.0,
                2.0 * (1.0 - t),
                (2.0 * t - 1.0) / 2.0,
            ],
        ),
        _ => panic!("stencil order {p} not supported"),
    };
    LagrangeWeights {
        p,
        l,
        l_prime: d.map(|v| v / h),
    }
}
