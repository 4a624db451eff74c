//! Closed-form 2x3 members of the aligned set, pinned entrywise, together
//! with the two factorizations that reconstruct them.

use aligned_init::linalg::cholesky_p;
use aligned_init::{alignment_score, validate_membership, DenseMatrix};

const TOL: f64 = 1e-12;

/// The hand-derived reference member of the (2,3) aligned set.
fn reference_member() -> DenseMatrix {
    let s6 = 6f64.sqrt();
    let s3 = 3f64.sqrt();
    DenseMatrix::from_rows(&[
        vec![(s6 - s3) / 6.0, (s6 - s3) / 6.0, (s6 + 2.0 * s3) / 6.0],
        vec![(s6 + s3) / 6.0, (s6 + s3) / 6.0, (s6 - 2.0 * s3) / 6.0],
    ])
    .unwrap()
}

/// The same member with its rows exchanged, which is again a member.
fn row_swapped_member() -> DenseMatrix {
    let w = reference_member();
    DenseMatrix::from_rows(&[w.row(1).to_vec(), w.row(0).to_vec()]).unwrap()
}

#[test]
fn reference_member_passes_validation() {
    let report = validate_membership(&reference_member(), TOL);
    assert!(report.passes, "reference member failed: {report:?}");
    assert!(report.semi_orthogonality <= TOL);
    assert!(report.forward_alignment <= TOL);
    assert!(report.adjoint_alignment <= TOL);
}

#[test]
fn row_swap_is_also_a_member() {
    let report = validate_membership(&row_swapped_member(), TOL);
    assert!(report.passes, "row-swapped member failed: {report:?}");
}

#[test]
fn objective_value_is_sqrt_mn() {
    assert!((alignment_score(&reference_member()) - 6f64.sqrt()).abs() <= TOL);
    assert!((alignment_score(&row_swapped_member()) - 6f64.sqrt()).abs() <= TOL);
}

/// U V^T with the sign-consistent U reproduces the reference entrywise.
#[test]
fn two_frame_product_reproduces_reference() {
    let s2 = 0.5f64.sqrt();
    let s3 = 1.0 / 3f64.sqrt();
    let s6 = 1.0 / 6f64.sqrt();
    let u = DenseMatrix::from_rows(&[vec![s2, -s2], vec![s2, s2]]).unwrap();
    let v = DenseMatrix::from_rows(&[
        vec![s3, s6],
        vec![s3, s6],
        vec![s3, -2.0 * s6],
    ])
    .unwrap();
    let w = u.matmul_nt(&v).unwrap();
    assert!(w.max_abs_diff(&reference_member()).unwrap() <= TOL);
}

/// Flipping the sign of U's second column exchanges the rows of the
/// product; both products are members.
#[test]
fn opposite_frame_sign_gives_the_row_swap() {
    let s2 = 0.5f64.sqrt();
    let s3 = 1.0 / 3f64.sqrt();
    let s6 = 1.0 / 6f64.sqrt();
    let u = DenseMatrix::from_rows(&[vec![s2, s2], vec![s2, -s2]]).unwrap();
    let v = DenseMatrix::from_rows(&[
        vec![s3, s6],
        vec![s3, s6],
        vec![s3, -2.0 * s6],
    ])
    .unwrap();
    let w = u.matmul_nt(&v).unwrap();
    assert!(w.max_abs_diff(&row_swapped_member()).unwrap() <= TOL);
}

/// L Q + xi_2 xi_3^T with the closed-form Cholesky factor reproduces the
/// reference; the free sign of Q's non-ones row selects between the
/// reference and its row swap.
#[test]
fn cholesky_construction_reproduces_reference() {
    let l = cholesky_p(2).unwrap();
    let s3 = 1.0 / 3f64.sqrt();
    let s6 = 1.0 / 6f64.sqrt();
    let q = DenseMatrix::from_rows(&[
        vec![-s6, -s6, 2.0 * s6],
        vec![s3, s3, s3],
    ])
    .unwrap();
    let mut w = l.matmul(&q).unwrap();
    w.add_scalar(1.0 / 6f64.sqrt());
    assert!(w.max_abs_diff(&reference_member()).unwrap() <= TOL);

    let q_flipped = DenseMatrix::from_rows(&[
        vec![s6, s6, -2.0 * s6],
        vec![s3, s3, s3],
    ])
    .unwrap();
    let mut w_flipped = l.matmul(&q_flipped).unwrap();
    w_flipped.add_scalar(1.0 / 6f64.sqrt());
    assert!(w_flipped.max_abs_diff(&row_swapped_member()).unwrap() <= TOL);
}

/// The m = 2 Cholesky factor is bit-exact against its closed form.
#[test]
fn cholesky_factor_m2_is_exact() {
    let l = cholesky_p(2).unwrap();
    let s = 0.5f64.sqrt();
    assert_eq!(l.as_slice(), &[s, 0.0, -s, 0.0]);
}
