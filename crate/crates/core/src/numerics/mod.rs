//! Dense linear algebra: a row-major matrix, Householder QR and a
//! one-sided Jacobi SVD.

mod matrix;
mod qr;
mod svd;

pub use matrix::{column_mean_center, dot, matmul, matmul_nt, matmul_tn, norm, DenseMatrix};
pub(crate) use matrix::axpy;
pub use qr::HouseholderQr;
pub use svd::{svd, Svd, MAX_SWEEPS, ROTATION_TOLERANCE};
