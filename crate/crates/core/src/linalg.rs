//! Small complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative singular-value threshold below which a matrix is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Ratio of smallest to largest singular value (0 for an all-zero matrix).
pub fn singular_value_ratio(m: &CMatrix) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

/// Fails with [`Error::RankDeficient`] unless `m` has full rank `min(rows, cols)`.
pub fn ensure_full_rank(m: &CMatrix) -> Result<()> {
    let ratio = singular_value_ratio(m);
    if ratio < RANK_TOLERANCE || !ratio.is_finite() {
        return Err(Error::RankDeficient { ratio });
    }
    Ok(())
}

/// Moore-Penrose pseudoinverse via SVD. The input must have full rank.
pub fn pinv(m: &CMatrix) -> Result<CMatrix> {
    let svd = m.clone().svd(true, true);
    let max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let min = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if max == 0.0 { 0.0 } else { min / max };
    if ratio < RANK_TOLERANCE {
        return Err(Error::RankDeficient { ratio });
    }
    svd.pseudo_inverse(RANK_TOLERANCE * max)
        .map_err(|_| Error::RankDeficient { ratio })
}

/// Inverse of a Hermitian positive-definite matrix through its Cholesky factor.
pub fn hpd_inverse(m: &CMatrix) -> Result<CMatrix> {
    ensure_full_rank(m)?;
    match m.clone().cholesky() {
        Some(chol) => Ok(chol.inverse()),
        None => Err(Error::RankDeficient {
            ratio: singular_value_ratio(m),
        }),
    }
}

/// Squared Frobenius norm.
pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Real diagonal matrix as a complex matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&v| Complex64::new(v, 0.0)),
    ))
}
