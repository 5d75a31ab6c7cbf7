use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{symmetrize, SpdFactor};

/// Symmetric block tri-diagonal matrix with `K` diagonal `n×n` blocks and
/// `K − 1` super-diagonal blocks; block `(k+1, k)` is `upper[k]ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiagonal {
    diag: Vec<DMatrix<f64>>,
    upper: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn new(diag: Vec<DMatrix<f64>>, upper: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = diag.len();
        if k == 0 {
            return Err(Error::InvalidArgument("block tri-diagonal needs at least one block".into()));
        }
        let n = diag[0].nrows();
        let bad_shape = |m: &DMatrix<f64>| m.nrows() != n || m.ncols() != n;
        if upper.len() != k - 1 || diag.iter().any(bad_shape) || upper.iter().any(bad_shape) {
            return Err(Error::InvalidArgument(format!(
                "inconsistent block shapes: {k} diagonal blocks, {} upper blocks",
                upper.len()
            )));
        }
        let diag = diag.iter().map(symmetrize).collect();
        Ok(Self { diag, upper })
    }

    pub fn block_dim(&self) -> usize {
        self.diag[0].nrows()
    }

    pub fn block_count(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[DMatrix<f64>] {
        &self.diag
    }

    pub fn upper(&self) -> &[DMatrix<f64>] {
        &self.upper
    }

    /// Adds `delta` to diagonal block `k`, keeping it symmetric.
    pub fn add_to_diag(&mut self, k: usize, delta: &DMatrix<f64>) {
        self.diag[k] += delta;
        self.diag[k] = symmetrize(&self.diag[k]);
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.block_dim();
        let k = self.block_count();
        let mut out = DMatrix::zeros(n * k, n * k);
        for (j, d) in self.diag.iter().enumerate() {
            out.view_mut((j * n, j * n), (n, n)).copy_from(d);
        }
        for (j, u) in self.upper.iter().enumerate() {
            out.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(u);
            out.view_mut(((j + 1) * n, j * n), (n, n)).copy_from(&u.transpose());
        }
        out
    }

    /// Log-determinant by the block forward recursion
    /// `D₁ = diag₁`, `D_k = diag_k − upper_{k−1}ᵀ D_{k−1}⁻¹ upper_{k−1}`.
    pub fn log_det(&self) -> Result<f64> {
        self.log_det_with(|_| None)
    }

    /// Same recursion with `extra(k)` added to diagonal block `k` on the fly,
    /// so callers can evaluate `J + blockdiag(extra)` without copying `J`.
    pub fn log_det_with<F>(&self, extra: F) -> Result<f64>
    where
        F: Fn(usize) -> Option<DMatrix<f64>>,
    {
        let mut total = 0.0;
        let mut schur: Option<DMatrix<f64>> = None;
        for (k, d) in self.diag.iter().enumerate() {
            let mut block = match extra(k) {
                Some(e) => d + e,
                None => d.clone(),
            };
            if let Some(s) = schur.take() {
                block -= s;
            }
            let factor = SpdFactor::new(&symmetrize(&block), &format!("D_{}", k + 1))?;
            total += factor.log_det();
            if let Some(u) = self.upper.get(k) {
                let y = factor.half_solve(u);
                schur = Some(y.transpose() * y);
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_scalar_blocks() {
        let j = BlockTridiagonal::new(
            vec![DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 1.0)],
            vec![DMatrix::from_element(1, 1, -1.0)],
        )
        .unwrap();
        assert!(j.log_det().unwrap().abs() < 1e-15);
        assert_eq!(
            j.to_dense(),
            DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.0])
        );
    }

    #[test]
    fn identity_has_zero_logdet() {
        let j = BlockTridiagonal::new(
            vec![DMatrix::identity(3, 3); 4],
            vec![DMatrix::zeros(3, 3); 3],
        )
        .unwrap();
        assert_eq!(j.log_det().unwrap(), 0.0);
    }

    #[test]
    fn indefinite_reports_failing_block() {
        let j = BlockTridiagonal::new(
            vec![DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.0)],
            vec![DMatrix::from_element(1, 1, -2.0)],
        )
        .unwrap();
        match j.log_det() {
            Err(Error::NotPositiveDefinite { matrix }) => assert_eq!(matrix, "D_2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn shape_errors() {
        assert!(BlockTridiagonal::new(vec![], vec![]).is_err());
        assert!(BlockTridiagonal::new(
            vec![DMatrix::identity(2, 2); 2],
            vec![DMatrix::identity(2, 2); 2]
        )
        .is_err());
    }
}
