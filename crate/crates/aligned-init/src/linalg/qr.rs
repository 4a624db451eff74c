//! Thin Householder QR. Factorization works on the transposed operand so
//! every inner loop runs over contiguous rows.

use super::matrix::{axpy, dot, DenseMatrix, LinAlgError};

/// Pivot magnitudes below this are treated as rank deficiency.
pub const DEFAULT_PIVOT_TOL: f64 = 1e-12;

/// Result of a thin QR: `q` has orthonormal columns, `r` is upper triangular,
/// and `q * r` reconstructs the input.
#[derive(Clone, Debug)]
pub struct QrFactors {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

/// Thin QR of an `n x m` matrix with `n >= m` via Householder reflections.
///
/// Columns whose subdiagonal part is already zero are passed through
/// unreflected, so upper-triangular inputs (the identity in particular)
/// factor as themselves.
pub fn qr_thin(a: &DenseMatrix) -> Result<QrFactors, LinAlgError> {
    qr_thin_with_tol(a, DEFAULT_PIVOT_TOL)
}

pub fn qr_thin_with_tol(a: &DenseMatrix, pivot_tol: f64) -> Result<QrFactors, LinAlgError> {
    let n = a.rows();
    let m = a.cols();
    if n < m {
        return Err(LinAlgError::WideMatrix { rows: n, cols: m });
    }

    // wt holds the transpose: wt row j is column j of the working matrix.
    let mut wt = a.transpose();
    // Householder vectors with their beta = 2 / v'v; None marks a skipped column.
    let mut reflectors: Vec<Option<(Vec<f64>, f64)>> = Vec::with_capacity(m);

    for k in 0..m {
        let col = &wt.row(k)[k..];
        let x0 = col[0];
        let tail2 = dot(&col[1..], &col[1..]);
        if tail2 == 0.0 {
            if x0.abs() < pivot_tol {
                return Err(LinAlgError::RankDeficient {
                    index: k,
                    magnitude: x0.abs(),
                });
            }
            reflectors.push(None);
            continue;
        }

        let norm = (x0 * x0 + tail2).sqrt();
        if norm < pivot_tol {
            return Err(LinAlgError::RankDeficient {
                index: k,
                magnitude: norm,
            });
        }
        // alpha takes the sign opposite to x0 so v = x - alpha*e1 never cancels.
        let alpha = if x0 > 0.0 { -norm } else { norm };
        let mut v = col.to_vec();
        v[0] = x0 - alpha;
        let beta = 2.0 / dot(&v, &v);

        for j in k..m {
            let row = &mut wt.row_mut(j)[k..];
            let s = beta * dot(&v, row);
            axpy(-s, &v, row);
        }
        // The reflected pivot column is (alpha, 0, ..., 0) analytically; store it exactly.
        let row_k = &mut wt.row_mut(k)[k..];
        row_k[0] = alpha;
        for entry in &mut row_k[1..] {
            *entry = 0.0;
        }
        reflectors.push(Some((v, beta)));
        if alpha.abs() < pivot_tol {
            return Err(LinAlgError::RankDeficient {
                index: k,
                magnitude: alpha.abs(),
            });
        }
    }

    let r = DenseMatrix::from_fn(m, m, |i, j| if i <= j { wt.get(j, i) } else { 0.0 });

    // Accumulate Q = H_0 ... H_{m-1} restricted to the first m columns of I_n,
    // applying reflectors in reverse. qt row j is column j of Q.
    let mut qt = DenseMatrix::zeros(m, n);
    for j in 0..m {
        qt.set(j, j, 1.0);
    }
    for k in (0..m).rev() {
        if let Some((v, beta)) = &reflectors[k] {
            // Columns j < k of Q still equal e_j, which reflectors at k leave fixed.
            for j in k..m {
                let row = &mut qt.row_mut(j)[k..];
                let s = beta * dot(v, row);
                axpy(-s, v, row);
            }
        }
    }

    Ok(QrFactors {
        q: qt.transpose(),
        r,
    })
}

/// Flip the sign of each `q` column whose `r` diagonal is negative.
///
/// For Gaussian inputs this yields a draw from the Haar distribution on
/// orthonormal frames, and it pins the convention that a unit first column
/// of the input reappears as `+v` in the output.
pub fn sign_correct(factors: &QrFactors) -> DenseMatrix {
    let mut q = factors.q.clone();
    let signs: Vec<f64> = (0..factors.r.rows())
        .map(|j| if factors.r.get(j, j) < 0.0 { -1.0 } else { 1.0 })
        .collect();
    for i in 0..q.rows() {
        let row = q.row_mut(i);
        for (j, s) in signs.iter().enumerate() {
            row[j] *= s;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn max_abs_offdiag_gram(q: &DenseMatrix) -> f64 {
        let g = q.matmul_tn(q).unwrap();
        let mut worst = 0.0_f64;
        for i in 0..g.rows() {
            for j in 0..g.cols() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).abs());
            }
        }
        worst
    }

    #[test]
    fn identity_factors_as_itself() {
        let i3 = DenseMatrix::identity(3);
        let f = qr_thin(&i3).unwrap();
        assert_eq!(f.q, i3);
        assert_eq!(f.r, i3);
    }

    #[test]
    fn column_swap_matrix_factors_exactly() {
        let a = DenseMatrix::from_vec(3, 2, vec![0.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let f = qr_thin(&a).unwrap();
        assert_eq!(
            f.q.as_slice(),
            &[0.0, 1.0, 1.0, 0.0, 0.0, 0.0],
            "q should reproduce the permuted columns"
        );
        assert_eq!(f.r, DenseMatrix::identity(2));
    }

    #[test]
    fn random_tall_matrix_reconstructs() {
        for (rows, cols, seed) in [(8, 3, 1), (20, 20, 2), (64, 5, 3)] {
            let a = gaussian(rows, cols, seed);
            let f = qr_thin(&a).unwrap();
            let qr = f.q.matmul(&f.r).unwrap();
            assert!(qr.max_abs_diff(&a).unwrap() < 1e-13);
            assert!(max_abs_offdiag_gram(&f.q) < 1e-13);
            for i in 0..cols {
                for j in 0..i {
                    assert_eq!(f.r.get(i, j), 0.0);
                }
            }
        }
    }

    #[test]
    fn wide_input_is_rejected() {
        let a = DenseMatrix::zeros(2, 3);
        assert!(matches!(qr_thin(&a), Err(LinAlgError::WideMatrix { .. })));
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        let mut a = gaussian(6, 3, 7);
        for i in 0..6 {
            let v = a.get(i, 0);
            a.set(i, 2, v);
        }
        match qr_thin(&a) {
            Err(LinAlgError::RankDeficient { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn sign_correct_flips_negative_diagonal_columns() {
        let f = QrFactors {
            q: DenseMatrix::identity(2),
            r: DenseMatrix::from_vec(2, 2, vec![-1.0, 0.0, 0.0, 1.0]).unwrap(),
        };
        let c = sign_correct(&f);
        assert_eq!(c.as_slice(), &[-1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn sign_correct_recovers_unit_first_column() {
        // First column is the normalized all-ones vector of length 4.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = DenseMatrix::from_fn(4, 3, |_, j| {
            if j == 0 {
                0.5
            } else {
                StandardNormal.sample(&mut rng)
            }
        });
        let q = sign_correct(&qr_thin(&a).unwrap());
        for i in 0..4 {
            assert_eq!(q.get(i, 0), 0.5, "row {i}");
        }
    }

    #[test]
    fn sign_corrected_gram_stays_orthonormal() {
        let a = gaussian(50, 12, 21);
        let q = sign_correct(&qr_thin(&a).unwrap());
        assert!(max_abs_offdiag_gram(&q) < 1e-13);
    }
}
