//! Spectral primitives: truncated SVD, symmetric dilation, norms and
//! orthogonal alignment.

pub mod dense;
mod dilation;
mod operator;
mod procrustes;
mod svd;

pub use dense::{jacobi_svd, symmetric_eigen, DenseSvd};
pub use dilation::{dilate, DilatedMatrix};
pub use operator::{CsrMatrix, LinearOperator, LowRankUpdate};
pub use procrustes::{align_orthogonal, projection_distance};
pub use svd::{
    dense_operator_norm, frobenius_norm, max_principal_sine, operator_norm, operator_norm_with,
    orthonormalize, principal_cosines, krylov_svd, truncated_svd, SvdMethod, SvdOptions,
    DENSE_CUTOFF,
};
