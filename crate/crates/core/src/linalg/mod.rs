//! Linear algebra kernels: dense tall-thin matrices, CSR sparse matrices,
//! Householder QR, Jacobi eigen/SVD for small cores, Lanczos bidiagonalization
//! for truncated SVD of implicit operators, and randomized sketching.

pub mod audit;
mod eig;
mod lanczos;
mod mat;
mod qr;
mod rsvd;
mod sparse;
mod svd;

pub use eig::{psd_sqrt, subspace_eig, sym_eig};
pub use lanczos::{lanczos_svd, LinOp, TruncatedSvd};
pub use mat::{dot, norm2, Mat};
pub use qr::thin_qr;
pub use rsvd::{
    gaussian_test_matrix, randomized_range, randomized_svd, rank_k_pinv, PinvFactors,
};
pub use sparse::{CsrMatrix, Dedup};
pub use svd::{dense_svd, Svd};
