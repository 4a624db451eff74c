//! Minimal dense linear algebra: row-major matrices, thin Householder QR
//! with a deterministic sign convention, and Cholesky factors of the
//! centering projector.

mod cholesky;
mod matrix;
mod qr;

pub use cholesky::{centering_projector, cholesky_p, cholesky_psd};
pub use matrix::{axpy, dot, DenseMatrix, LinAlgError};
pub use qr::{qr_thin, qr_thin_with_tol, sign_correct, QrFactors, DEFAULT_PIVOT_TOL};
