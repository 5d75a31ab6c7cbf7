//! Small dense kernels shared by the prior, objective and analysis modules.
//!
//! Every positive-definiteness decision in the crate goes through
//! [`SpdFactor::new`]: a matrix counts as PD iff its Cholesky pivots all
//! exceed `PIVOT_RTOL * max_diag`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative pivot threshold for the symmetric factorization.
pub const PIVOT_RTOL: f64 = 1e-12;

/// Relative asymmetry tolerated on input covariances.
const SYMMETRY_RTOL: f64 = 1e-9;

/// Lower Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    l: DMatrix<f64>,
}

impl SpdFactor {
    /// Factors `a`, reading only its lower triangle. `name` labels the error.
    pub fn new(a: &DMatrix<f64>, name: &str) -> Result<Self> {
        let n = a.nrows();
        if n != a.ncols() || n == 0 {
            return Err(Error::NotPositiveDefinite {
                matrix: name.to_string(),
            });
        }
        let max_diag = (0..n).map(|i| a[(i, i)]).fold(f64::NEG_INFINITY, f64::max);
        let threshold = PIVOT_RTOL * max_diag.max(0.0);
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut pivot = a[(j, j)];
            for p in 0..j {
                pivot -= l[(j, p)] * l[(j, p)];
            }
            if !pivot.is_finite() || pivot <= threshold {
                return Err(Error::NotPositiveDefinite {
                    matrix: name.to_string(),
                });
            }
            let d = pivot.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)];
                }
                l[(i, j)] = s / d;
            }
        }
        Ok(Self { l })
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        self.l.solve_lower_triangular_mut(&mut x);
        self.l.tr_solve_lower_triangular_mut(&mut x);
        x
    }

    /// Solves `L Y = B`, so that `Yᵀ Y = Bᵀ A⁻¹ B`.
    pub fn half_solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut y = b.clone();
        self.l.solve_lower_triangular_mut(&mut y);
        y
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        symmetrize(&self.solve(&DMatrix::identity(n, n)))
    }
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Checks symmetry and positive definiteness of a user-supplied covariance.
pub fn require_spd(a: &DMatrix<f64>, name: &str) -> Result<SpdFactor> {
    let scale = max_abs(a).max(1.0);
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::NotPositiveDefinite {
            matrix: name.to_string(),
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (a[(i, j)] - a[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                return Err(Error::NotPositiveDefinite {
                    matrix: name.to_string(),
                });
            }
        }
    }
    SpdFactor::new(&symmetrize(a), name)
}

/// Largest singular value.
pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().max()
}

/// `‖a − b‖_F / max(‖b‖_F, tiny)`.
pub fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_matches_dense_determinant() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let f = SpdFactor::new(&a, "a").unwrap();
        assert!((f.log_det() - a.determinant().ln()).abs() < 1e-12);
        let inv = f.inverse();
        assert!(rel_frobenius(&(&a * inv), &DMatrix::identity(3, 3)) < 1e-12);
    }

    #[test]
    fn zero_and_indefinite_rejected() {
        assert!(SpdFactor::new(&DMatrix::zeros(1, 1), "V_1").is_err());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            SpdFactor::new(&a, "x"),
            Err(Error::NotPositiveDefinite { matrix }) if matrix == "x"
        ));
    }

    #[test]
    fn pivot_threshold_is_relative() {
        // second pivot is 1e-14 relative to the largest diagonal
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert!(SpdFactor::new(&a, "x").is_err());
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-10]);
        assert!(SpdFactor::new(&b, "x").is_ok());
    }

    #[test]
    fn asymmetric_input_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.0, 2.0]);
        assert!(require_spd(&a, "W").is_err());
    }

    #[test]
    fn spectral_norm_of_stack() {
        let a = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 4.0]);
        assert!((spectral_norm(&a) - 4.0).abs() < 1e-12);
    }
}
