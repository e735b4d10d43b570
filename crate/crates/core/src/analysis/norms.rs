use std::fmt;

use serde::{Deserialize, Serialize};

use crate::Vec2;

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub const ALL: [Norm; 3] = [Norm::L1, Norm::L2, Norm::Linf];

    /// Weighted norm of nonnegative samples.
    fn eval(&self, values: impl Iterator<Item = (f64, f64)>) -> f64 {
        match self {
            Norm::L1 => values.map(|(v, w)| w * v).sum(),
            Norm::L2 => values.map(|(v, w)| w * v * v).sum::<f64>().sqrt(),
            Norm::Linf => values.map(|(v, _)| v).fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        })
    }
}

fn check_lengths(a: usize, b: usize, w: usize) -> Result<(), AnalysisError> {
    if a != b {
        return Err(AnalysisError::LengthMismatch(a, b));
    }
    if a != w {
        return Err(AnalysisError::LengthMismatch(a, w));
    }
    Ok(())
}

fn ratio(num: f64, den: f64, norm: Norm) -> Result<f64, AnalysisError> {
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(AnalysisError::ZeroReference(norm))
    }
}

/// `‖f_h - f‖ / ‖f‖` over weighted samples (`weights` are the measures the
/// samples stand for; ignored for `L∞`).
pub fn relative_error(
    approx: &[f64],
    exact: &[f64],
    weights: &[f64],
    norm: Norm,
) -> Result<f64, AnalysisError> {
    check_lengths(approx.len(), exact.len(), weights.len())?;
    let w = weights.iter().copied();
    let num = norm.eval(
        approx
            .iter()
            .zip(exact)
            .map(|(a, e)| (a - e).abs())
            .zip(w.clone()),
    );
    let den = norm.eval(exact.iter().map(|e| e.abs()).zip(w));
    ratio(num, den, norm)
}

/// [`relative_error`] for vector fields, using the Euclidean magnitude at
/// each sample.
pub fn relative_error_vec(
    approx: &[Vec2],
    exact: &[Vec2],
    weights: &[f64],
    norm: Norm,
) -> Result<f64, AnalysisError> {
    check_lengths(approx.len(), exact.len(), weights.len())?;
    let w = weights.iter().copied();
    let num = norm.eval(
        approx
            .iter()
            .zip(exact)
            .map(|(a, e)| (a - e).norm())
            .zip(w.clone()),
    );
    let den = norm.eval(exact.iter().map(|e| e.norm()).zip(w));
    ratio(num, den, norm)
}

/// `log₂(err_coarse / err_fine)`; `None` unless both errors are positive.
pub fn observed_order(err_coarse: f64, err_fine: f64) -> Option<f64> {
    (err_coarse > 0.0 && err_fine > 0.0 && err_coarse.is_finite() && err_fine.is_finite())
        .then(|| (err_coarse / err_fine).log2())
}

/// Least-squares slope of `log err` against `log h`.
pub fn fitted_order(h: &[f64], err: &[f64]) -> Option<f64> {
    if h.len() != err.len() || h.len() < 2 || err.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return None;
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
