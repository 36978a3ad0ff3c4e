use ndarray::{Array2, ArrayView2};

use super::dense::jacobi_svd;
use super::svd::frobenius_norm;

/// Orthogonal Procrustes alignment: the `k x k` orthogonal `Q` minimizing
/// `||z_hat - z_ref Q||_F`, together with the attained minimum.
pub fn align_orthogonal(z_hat: ArrayView2<f64>, z_ref: ArrayView2<f64>) -> (Array2<f64>, f64) {
    let m = z_ref.t().dot(&z_hat);
    let svd = jacobi_svd(m.view());
    let q = svd.u.dot(&svd.v.t());
    let error = frobenius_norm((&z_hat - &z_ref.dot(&q)).view());
    (q, error)
}

/// `||z z^T - y y^T||_F` for orthonormal bases, without forming the projections.
pub fn projection_distance(z: ArrayView2<f64>, y: ArrayView2<f64>) -> f64 {
    let cross = z.t().dot(&y);
    let cross_sq: f64 = cross.iter().map(|v| v * v).sum();
    let value = (z.ncols() + y.ncols()) as f64 - 2.0 * cross_sq;
    value.max(0.0).sqrt()
}
