use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    dot, norm2, relative_residual, solve_direct, CsrMatrix, Ilu0, Preconditioner,
    PreconditionerKind, SolveReport, SolverError,
};

/// Systems smaller than this fall back to a direct solve when BiCGSTAB
/// fails to converge.
pub const DIRECT_FALLBACK_LIMIT: usize = 200_000;

const MAX_RESTARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Target relative residual `‖Ax - b‖₂ / ‖b‖₂`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

fn check_dims(a: &CsrMatrix, b: &[f64]) -> Result<(), SolverError> {
    if a.dim() != b.len() {
        return Err(SolverError::DimensionMismatch {
            matrix: a.dim(),
            vector: b.len(),
        });
    }
    Ok(())
}

fn residual_vec(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let ax = a.mul(x);
    b.iter().zip(&ax).map(|(p, q)| p - q).collect()
}

/// Preconditioned conjugate gradients for symmetric positive definite `A`.
///
/// Convergence is declared on the true residual; if the recursive residual
/// has drifted, the iteration restarts from the current iterate. Negative
/// curvature does not stop the iteration; it is reported in the note.
pub fn solve_cg(
    a: &CsrMatrix,
    b: &[f64],
    precond: PreconditionerKind,
    opts: &KrylovOptions,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    check_dims(a, b)?;
    let start = Instant::now();
    let n = b.len();
    let method = format!("cg-{}", precond.label());
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((
            x,
            SolveReport {
                method,
                iterations: 0,
                final_residual: 0.0,
                converged: true,
                wall_time: start.elapsed().as_secs_f64(),
                note: None,
            },
        ));
    }
    let m = precond.build(a);
    let mut iterations = 0;
    let mut restarts = 0;
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut note = None;
    let mut negative_curvature = false;
    'outer: loop {
        m.apply(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < opts.max_iter {
            a.matvec(&p, &mut q);
            let pq = dot(&p, &q);
            if pq == 0.0 || !pq.is_finite() {
                note = Some("breakdown: zero curvature along search direction".into());
                break 'outer;
            }
            // a few small negative eigenvalues (unfitted Nitsche systems with
            // small cuts) leave the Lanczos recurrence intact
            negative_curvature |= pq < 0.0;
            let alpha = rz / pq;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            iterations += 1;
            if norm2(&r) <= opts.tol * nb {
                r = residual_vec(a, &x, b);
                if norm2(&r) <= opts.tol * nb || restarts >= MAX_RESTARTS {
                    break 'outer;
                }
                restarts += 1;
                continue 'outer;
            }
            m.apply(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        break;
    }
    let final_residual = relative_residual(a, &x, b);
    if note.is_none() {
        let mut parts = Vec::new();
        if negative_curvature {
            parts.push("negative curvature encountered; operator is indefinite".to_string());
        }
        if restarts > 0 {
            parts.push(format!("{restarts} restart(s) on true residual"));
        }
        note = (!parts.is_empty()).then(|| parts.join("; "));
    }
    let report = SolveReport {
        method,
        iterations,
        final_residual,
        converged: final_residual <= opts.tol,
        wall_time: start.elapsed().as_secs_f64(),
        note,
    };
    Ok((x, report))
}

/// BiCGSTAB with a right-applied preconditioner. Returns the iterate and the
/// iteration count; stops early on breakdown.
fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    m: &dyn Preconditioner,
    opts: &KrylovOptions,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            break;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        m.apply(&p, &mut p_hat);
        a.matvec(&p_hat, &mut v);
        let rv = dot(&r_hat, &v);
        if rv == 0.0 || !rv.is_finite() {
            break;
        }
        alpha = rho / rv;
        let s: Vec<f64> = r.iter().zip(&v).map(|(ri, vi)| ri - alpha * vi).collect();
        if norm2(&s) <= opts.tol * nb {
            for i in 0..n {
                x[i] += alpha * p_hat[i];
            }
            break;
        }
        m.apply(&s, &mut s_hat);
        a.matvec(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 || !tt.is_finite() {
            break;
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm2(&r) <= opts.tol * nb || omega == 0.0 {
            break;
        }
    }
    (x, iterations)
}

/// Solves a general sparse system with ILU(0)-preconditioned BiCGSTAB,
/// falling back to a direct solve below [`DIRECT_FALLBACK_LIMIT`] unknowns
/// when the iteration does not reach `opts.tol`.
pub fn solve_nonsymmetric(
    a: &CsrMatrix,
    b: &[f64],
    opts: &KrylovOptions,
) -> Result<(Vec<f64>, SolveReport), SolverError> {
    check_dims(a, b)?;
    let start = Instant::now();
    let n = b.len();
    let failure = match Ilu0::new(a) {
        Ok(ilu) => {
            let (x, iterations) = bicgstab(a, b, &ilu, opts);
            let final_residual = relative_residual(a, &x, b);
            let report = SolveReport {
                method: "bicgstab-ilu0".into(),
                iterations,
                final_residual,
                converged: final_residual <= opts.tol,
                wall_time: start.elapsed().as_secs_f64(),
                note: None,
            };
            if report.converged || n >= DIRECT_FALLBACK_LIMIT {
                return Ok((x, report));
            }
            format!("bicgstab stalled at residual {final_residual:e} after {iterations} iterations")
        }
        Err(e) => {
            if n >= DIRECT_FALLBACK_LIMIT {
                return Err(e);
            }
            format!("ILU(0) failed: {e}")
        }
    };
    let (x, mut report) = solve_direct(a, b)?;
    report.note = Some(format!("{failure}; direct fallback"));
    report.wall_time = start.elapsed().as_secs_f64();
    Ok((x, report))
}
