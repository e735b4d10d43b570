use serde::{Deserialize, Serialize};

use super::{CsrMatrix, SolverError};

pub trait Preconditioner {
    /// Applies the approximate inverse: `z = M⁻¹ r`.
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum PreconditionerKind {
    None,
    Jacobi,
    /// Symmetric SOR with relaxation factor `omega` in (0, 2).
    Sor {
        omega: f64,
    },
}

impl PreconditionerKind {
    pub const DEFAULT_OMEGA: f64 = 1.5;

    pub fn label(&self) -> &'static str {
        match self {
            PreconditionerKind::None => "none",
            PreconditionerKind::Jacobi => "jacobi",
            PreconditionerKind::Sor { .. } => "sor",
        }
    }

    pub(crate) fn build<'a>(&self, a: &'a CsrMatrix) -> Box<dyn Preconditioner + Sync + 'a> {
        match *self {
            PreconditionerKind::None => Box::new(IdentityPrecond),
            PreconditionerKind::Jacobi => Box::new(Jacobi::new(a)),
            PreconditionerKind::Sor { omega } => Box::new(Ssor::new(a, omega)),
        }
    }
}

struct IdentityPrecond;

impl Preconditioner for IdentityPrecond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &CsrMatrix) -> Self {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Jacobi { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// Symmetric successive over-relaxation:
/// `M = (D + ωL) D⁻¹ (D + ωU) / (ω (2 - ω))`, symmetric positive definite
/// whenever `A` is.
pub struct Ssor<'a> {
    a: &'a CsrMatrix,
    diag: Vec<f64>,
    omega: f64,
}

impl<'a> Ssor<'a> {
    pub fn new(a: &'a CsrMatrix, omega: f64) -> Self {
        assert!(
            omega > 0.0 && omega < 2.0,
            "SOR relaxation factor must lie in (0, 2)"
        );
        let diag = a
            .diagonal()
            .into_iter()
            .map(|d| if d != 0.0 { d } else { 1.0 })
            .collect();
        Ssor { a, diag, omega }
    }
}

impl Preconditioner for Ssor<'_> {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let w = self.omega;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let (cols, vals) = self.a.row(i);
            let mut s = r[i];
            for (&c, &v) in cols.iter().zip(vals) {
                if c < i {
                    s -= w * v * y[c];
                }
            }
            y[i] = s / self.diag[i];
        }
        for i in (0..n).rev() {
            let (cols, vals) = self.a.row(i);
            let mut s = self.diag[i] * y[i];
            for (&c, &v) in cols.iter().zip(vals) {
                if c > i {
                    s -= w * v * z[c];
                }
            }
            z[i] = s / self.diag[i];
        }
        let scale = w * (2.0 - w);
        z.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Incomplete LU factorization with the sparsity pattern of `A`.
pub struct Ilu0 {
    lu: CsrMatrix,
    diag_pos: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self, SolverError> {
        let n = a.dim();
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let mut vals = a.values().to_vec();
        let mut diag_pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[p] == i {
                    diag_pos[i] = p;
                }
            }
            if diag_pos[i] == usize::MAX {
                return Err(SolverError::ZeroPivot { row: i });
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = p;
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                let k = col_idx[p];
                if k >= i {
                    break;
                }
                let pivot = vals[diag_pos[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(SolverError::ZeroPivot { row: k });
                }
                let factor = vals[p] / pivot;
                vals[p] = factor;
                for q in diag_pos[k] + 1..row_ptr[k + 1] {
                    let j = col_idx[q];
                    if pos[j] != usize::MAX {
                        vals[pos[j]] -= factor * vals[q];
                    }
                }
            }
            for p in row_ptr[i]..row_ptr[i + 1] {
                pos[col_idx[p]] = usize::MAX;
            }
            let d = vals[diag_pos[i]];
            if d == 0.0 || !d.is_finite() {
                return Err(SolverError::ZeroPivot { row: i });
            }
        }
        let rows = (0..n)
            .map(|i| {
                (row_ptr[i]..row_ptr[i + 1])
                    .map(|p| (col_idx[p], vals[p]))
                    .collect()
            })
            .collect();
        let lu = CsrMatrix::from_rows(n, rows);
        Ok(Ilu0 { lu, diag_pos })
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = r.len();
        let vals = self.lu.values();
        let cols = self.lu.col_idx();
        let ptr = self.lu.row_ptr();
        for i in 0..n {
            let mut s = r[i];
            for p in ptr[i]..self.diag_pos[i] {
                s -= vals[p] * z[cols[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag_pos[i] + 1..ptr[i + 1] {
                s -= vals[p] * z[cols[p]];
            }
            z[i] = s / vals[self.diag_pos[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ilu0_is_exact_for_tridiagonal() {
        // no fill-in for tridiagonal matrices, so ILU(0) = LU
        let a = CsrMatrix::from_dense(&[
            vec![4.0, -1.0, 0.0, 0.0],
            vec![-2.0, 4.0, -1.0, 0.0],
            vec![0.0, -1.0, 4.0, -3.0],
            vec![0.0, 0.0, -1.0, 4.0],
        ]);
        let ilu = Ilu0::new(&a).unwrap();
        let x = [1.0, 2.0, -1.0, 0.5];
        let b = a.mul(&x);
        let mut z = vec![0.0; 4];
        ilu.apply(&b, &mut z);
        for (p, q) in z.iter().zip(x) {
            assert!((p - q).abs() < 1e-14);
        }
    }

    #[test]
    fn ssor_with_unit_omega_on_diagonal_is_jacobi() {
        let a = CsrMatrix::from_diagonal(&[2.0, 4.0, 8.0]);
        let s = Ssor::new(&a, 1.0);
        let mut z = vec![0.0; 3];
        s.apply(&[2.0, 4.0, 8.0], &mut z);
        assert_eq!(z, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn ssor_is_symmetric() {
        let a = CsrMatrix::from_dense(&[
            vec![4.0, -1.0, -1.0],
            vec![-1.0, 4.0, -1.0],
            vec![-1.0, -1.0, 4.0],
        ]);
        let s = Ssor::new(&a, 1.5);
        let mut m = vec![vec![0.0; 3]; 3];
        for j in 0..3 {
            let mut e = vec![0.0; 3];
            e[j] = 1.0;
            let mut z = vec![0.0; 3];
            s.apply(&e, &mut z);
            for i in 0..3 {
                m[i][j] = z[i];
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j] - m[j][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ilu0_missing_diagonal() {
        let a = CsrMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(
            Ilu0::new(&a),
            Err(SolverError::ZeroPivot { row: 0 })
        ));
    }
}
