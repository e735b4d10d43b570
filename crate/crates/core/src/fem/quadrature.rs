use crate::Vec2;

/// Points and weights of a rule on a reference element; weights sum to the
/// reference measure (1 for both the unit-area-normalised triangle and the
/// unit segment).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Barycentric coordinates on triangles, `(t, 0)` on segments.
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Six-point symmetric rule, exact for polynomials of degree 4.
    pub fn triangle() -> Self {
        const A1: f64 = 0.445_948_490_915_964_886;
        const W1: f64 = 0.223_381_589_678_011_466;
        const A2: f64 = 0.091_576_213_509_770_743;
        const W2: f64 = 0.109_951_743_655_321_868;
        let b1 = 1.0 - 2.0 * A1;
        let b2 = 1.0 - 2.0 * A2;
        QuadratureRule {
            points: vec![
                [b1, A1, A1],
                [A1, b1, A1],
                [A1, A1, b1],
                [b2, A2, A2],
                [A2, b2, A2],
                [A2, A2, b2],
            ],
            weights: vec![W1, W1, W1, W2, W2, W2],
            degree: 4,
        }
    }

    /// Three-point Gauss-Legendre on `[0, 1]`, exact for degree 5.
    pub fn segment() -> Self {
        let d = 0.5 * (0.6f64).sqrt();
        QuadratureRule {
            points: vec![[0.5 - d, 0.0, 0.0], [0.5, 0.0, 0.0], [0.5 + d, 0.0, 0.0]],
            weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            degree: 5,
        }
    }

    /// Physical points and weights on triangle `t`.
    pub fn on_triangle<'a>(&'a self, t: &'a [Vec2; 3]) -> impl Iterator<Item = (Vec2, f64)> + 'a {
        let area = 0.5 * ((t[1] - t[0]).perp(&(t[2] - t[0]))).abs();
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(l, w)| (t[0] * l[0] + t[1] * l[1] + t[2] * l[2], w * area))
    }

    /// Physical points and weights on the segment `a → b`.
    pub fn on_segment(&self, a: Vec2, b: Vec2) -> impl Iterator<Item = (Vec2, f64)> + '_ {
        let len = (b - a).norm();
        self.points
            .iter()
            .zip(&self.weights)
            .map(move |(l, w)| (a + (b - a) * l[0], w * len))
    }
}
