//! Cholesky factors of the centering projector P = I - J/m, in closed form
//! and via a generic rank-revealing numerical factorization.

use super::matrix::{dot, DenseMatrix, LinAlgError};

/// Closed-form lower Cholesky factor L of `P_m = I_m - J_m/m` with
/// nonnegative diagonal, so `L L^T = P_m` and the last column of L is zero
/// (P_m has rank m-1).
///
/// In 1-based indexing: `L[i][i] = sqrt((m-i)/(m-i+1))` for `i < m`,
/// `L[m][m] = 0`, and `L[i][j] = -1/sqrt((m-j+1)(m-j))` below the diagonal.
pub fn cholesky_p(m: usize) -> Result<DenseMatrix, LinAlgError> {
    if m < 2 {
        return Err(LinAlgError::TooSmall { min: 2, got: m });
    }
    let mf = m as f64;
    Ok(DenseMatrix::from_fn(m, m, |r, c| {
        if r == c {
            if r + 1 < m {
                let i = (r + 1) as f64;
                ((mf - i) / (mf - i + 1.0)).sqrt()
            } else {
                0.0
            }
        } else if c < r {
            // sqrt of the reciprocal, not reciprocal of the sqrt: at m = 2
            // this makes the subdiagonal bit-equal to the diagonal.
            let j = (c + 1) as f64;
            -(1.0 / ((mf - j + 1.0) * (mf - j))).sqrt()
        } else {
            0.0
        }
    }))
}

/// The centering projector `P_m = I_m - J_m/m` itself.
pub fn centering_projector(m: usize) -> DenseMatrix {
    let inv = 1.0 / m as f64;
    DenseMatrix::from_fn(m, m, |i, j| if i == j { 1.0 - inv } else { -inv })
}

/// Numerical Cholesky of a symmetric positive semidefinite matrix.
///
/// Pivots with magnitude at most `pivot_tol` are treated as exact zeros and
/// leave their column zero, which for PSD inputs produces the unique lower
/// factor with nonnegative diagonal. A pivot below `-pivot_tol.sqrt()` means
/// the input was not PSD to working precision.
pub fn cholesky_psd(a: &DenseMatrix, pivot_tol: f64) -> Result<DenseMatrix, LinAlgError> {
    if a.rows() != a.cols() {
        return Err(LinAlgError::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let ljj_sq = {
            let row_j = &l.row(j)[..j];
            a.get(j, j) - dot(row_j, row_j)
        };
        if ljj_sq > pivot_tol {
            let ljj = ljj_sq.sqrt();
            l.set(j, j, ljj);
            for i in j + 1..n {
                let s = a.get(i, j) - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l.set(i, j, s / ljj);
            }
        } else if ljj_sq > -pivot_tol.sqrt() {
            // Zero pivot: the column stays zero.
        } else {
            return Err(LinAlgError::NotPositiveSemidefinite {
                index: j,
                value: ljj_sq,
            });
        }
    }
    Ok(l)
}
