use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::dense::{complete_basis, jacobi_svd};
use super::operator::{CsrMatrix, LinearOperator};
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::types::TruncatedSvd;

/// Largest `min(n1, n2)` for which `SvdMethod::Auto` uses the dense solver.
pub const DENSE_CUTOFF: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SvdMethod {
    /// Dense Jacobi up to [`DENSE_CUTOFF`], block Krylov above.
    Auto,
    Dense,
    Krylov,
}

#[derive(Clone, Debug)]
pub struct SvdOptions {
    /// Residual tolerance relative to the leading singular value.
    pub tol: f64,
    /// Cap on the number of Krylov blocks.
    pub max_iter: usize,
    /// Block width beyond `k`.
    pub oversample: usize,
    pub seed: u64,
    pub method: SvdMethod,
}

impl Default for SvdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            oversample: 4,
            seed: 0,
            method: SvdMethod::Auto,
        }
    }
}

/// The `k` leading singular triplets of `a`.
pub fn truncated_svd(a: ArrayView2<f64>, k: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (n1, n2) = a.dim();
    check_rank(n1, n2, k, opts)?;
    let dense = match opts.method {
        SvdMethod::Dense => true,
        SvdMethod::Krylov => false,
        SvdMethod::Auto => n1.min(n2) <= DENSE_CUTOFF,
    };
    if dense {
        let full = jacobi_svd(a);
        return Ok(TruncatedSvd {
            u: full.u.slice(s![.., ..k]).to_owned(),
            sigma: full.sigma.slice(s![..k]).to_owned(),
            v: full.v.slice(s![.., ..k]).to_owned(),
        });
    }
    let nnz = a.iter().filter(|&&v| v != 0.0).count();
    if nnz * 4 < n1 * n2 {
        krylov_svd(&CsrMatrix::from_dense(a), k, opts)
    } else {
        krylov_svd(&a, k, opts)
    }
}

fn check_rank(n1: usize, n2: usize, k: usize, opts: &SvdOptions) -> Result<()> {
    if k == 0 || k > n1.min(n2) {
        return Err(Error::validation(format!(
            "cannot take {k} singular triplets of a {n1} x {n2} matrix"
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    Ok(())
}

/// Block Krylov method with full reorthogonalization.
///
/// The basis lives on the shorter side of the matrix and grows by blocks of
/// `k + oversample` vectors, each block being `A^T A` (or `A A^T`) applied to
/// the previous one. A Rayleigh-Ritz step is taken whenever the basis has grown
/// by a fifth; the iteration stops once `||A^T u_i - sigma_i v_i|| <= tol *
/// sigma_1` for all `i < k` (`A v_i = sigma_i u_i` holds by construction), or
/// when the basis spans the whole side and the Ritz values are exact. Blocks
/// make repeated singular values (up to the block width) safe.
pub fn krylov_svd<O: LinearOperator + ?Sized>(
    op: &O,
    k: usize,
    opts: &SvdOptions,
) -> Result<TruncatedSvd> {
    let (n1, n2) = op.shape();
    check_rank(n1, n2, k, opts)?;
    if n1 < n2 {
        let t = krylov_tall(&Transposed(op), k, opts)?;
        return Ok(TruncatedSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    krylov_tall(op, k, opts)
}

struct Transposed<'a, O: ?Sized>(&'a O);

impl<O: LinearOperator + ?Sized> LinearOperator for Transposed<'_, O> {
    fn shape(&self) -> (usize, usize) {
        let (r, c) = self.0.shape();
        (c, r)
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.0.apply_transpose(x)
    }

    fn apply_transpose(&self, y: ArrayView2<f64>) -> Array2<f64> {
        self.0.apply(y)
    }
}

// n1 >= n2: the basis is kept as rows of an `m x n2` matrix.
fn krylov_tall<O: LinearOperator + ?Sized>(op: &O, k: usize, opts: &SvdOptions) -> Result<TruncatedSvd> {
    let (n1, n2) = op.shape();
    let width = (k + opts.oversample).min(n2);
    let mut rng = substream(opts.seed, &[Purpose::SvdStart as u64]);
    let mut random_block = |rows: usize| {
        Array2::from_shape_simple_fn((rows, n2), || rng.sample::<f64, _>(StandardNormal))
    };

    let mut basis = Array2::<f64>::zeros((0, n2));
    let mut image = Array2::<f64>::zeros((0, n1));
    let mut block = random_block(width);
    let mut next_check = (2 * width).min(n2);
    for _ in 0..=opts.max_iter {
        let mut fresh = extend_basis(&basis, block);
        if fresh.nrows() == 0 && basis.nrows() < n2 {
            // invariant subspace: restart in the orthogonal complement
            fresh = extend_basis(&basis, random_block(width));
        }
        let ab = op.apply(fresh.t()).reversed_axes();
        basis.append(ndarray::Axis(0), fresh.view()).expect("matching widths");
        image.append(ndarray::Axis(0), ab.view()).expect("matching widths");
        let m = basis.nrows();

        if m >= next_check || m >= n2 || fresh.nrows() == 0 {
            let (svd, exact) = (ritz(&basis, &image, k), m >= n2);
            let scale = svd.sigma[0];
            if exact || scale == 0.0 || back_residual(op, &svd) <= opts.tol * scale {
                return Ok(svd);
            }
            next_check = (m + m / 5).max(m + 1).min(n2);
        }
        let (m, l) = (basis.nrows(), ab.nrows());
        block = op.apply_transpose(image.slice(s![m - l.., ..]).t()).reversed_axes();
    }
    Err(Error::NoConvergence {
        max_iter: opts.max_iter,
    })
}

/// Projects the rows of `block` off the rows of `basis` (twice) and
/// orthonormalizes them, dropping rows that are numerically dependent.
fn extend_basis(basis: &Array2<f64>, mut block: Array2<f64>) -> Array2<f64> {
    let before: Vec<f64> = block.outer_iter().map(|r| r.dot(&r).sqrt()).collect();
    for _ in 0..2 {
        if basis.nrows() > 0 {
            let coef = block.dot(&basis.t());
            block -= &coef.dot(basis);
        }
    }
    let mut kept: Vec<Array1<f64>> = Vec::new();
    for (row, b) in block.outer_iter().zip(before) {
        let mut r = row.to_owned();
        for _ in 0..2 {
            for q in &kept {
                let p = q.dot(&r);
                r.scaled_add(-p, q);
            }
        }
        let nrm = r.dot(&r).sqrt();
        if nrm > 1e-10 * b && nrm > 0.0 {
            kept.push(r / nrm);
        }
    }
    let mut out = Array2::zeros((kept.len(), basis.ncols()));
    for (mut dst, src) in out.outer_iter_mut().zip(&kept) {
        dst.assign(src);
    }
    out
}

// Rayleigh-Ritz on span(basis): eigenvectors of the Gram matrix of the image
// give the right vectors; singular values are recomputed as norms so they stay
// accurate to working precision relative to sigma_1.
fn ritz(basis: &Array2<f64>, image: &Array2<f64>, k: usize) -> TruncatedSvd {
    let m = image.nrows();
    let gram = image.dot(&image.t());
    let eig = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_fn(m, m, |i, j| gram[[i, j]]));
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let y = Array2::from_shape_fn((m, k), |(i, j)| eig.eigenvectors[(i, order[j])]);
    let v = basis.t().dot(&y);
    let mut u = image.t().dot(&y);
    let mut sigma = Array1::zeros(k);
    let norms: Vec<f64> = u.columns().into_iter().map(|c| c.dot(&c).sqrt()).collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    let mut missing = Vec::new();
    for j in 0..k {
        if norms[j] > 1e-12 * top && norms[j] > 0.0 {
            sigma[j] = norms[j];
            u.column_mut(j).mapv_inplace(|x| x / norms[j]);
        } else {
            u.column_mut(j).fill(0.0);
            missing.push(j);
        }
    }
    // the Gram route loses orthogonality only for tiny sigma; restore it
    let mut u = reorthonormalize(u, &missing);
    complete_basis(&mut u, &missing);
    TruncatedSvd { u, sigma, v }
}

fn reorthonormalize(mut u: Array2<f64>, skip: &[usize]) -> Array2<f64> {
    for j in 0..u.ncols() {
        if skip.contains(&j) {
            continue;
        }
        for i in (0..j).filter(|i| !skip.contains(i)) {
            let p = u.column(i).dot(&u.column(j));
            let qi = u.column(i).to_owned();
            u.column_mut(j).scaled_add(-p, &qi);
        }
        let n = u.column(j).dot(&u.column(j)).sqrt();
        u.column_mut(j).mapv_inplace(|x| x / n);
    }
    u
}

fn back_residual<O: LinearOperator + ?Sized>(op: &O, svd: &TruncatedSvd) -> f64 {
    let atu = op.apply_transpose(svd.u.view());
    let mut worst: f64 = 0.0;
    for i in 0..svd.sigma.len() {
        let r = &atu.column(i) - &(&svd.v.column(i) * svd.sigma[i]);
        worst = worst.max(r.dot(&r).sqrt());
    }
    worst
}

/// Orthonormalizes the columns in place (modified Gram-Schmidt, two passes).
/// Columns that vanish are replaced so the result always has orthonormal columns.
pub fn orthonormalize(x: &mut Array2<f64>) {
    let l = x.ncols();
    let mut missing = Vec::new();
    for j in 0..l {
        let before = {
            let c = x.column(j);
            c.dot(&c).sqrt()
        };
        for _ in 0..2 {
            for i in 0..j {
                if missing.contains(&i) {
                    continue;
                }
                let proj = x.column(i).dot(&x.column(j));
                let qi = x.column(i).to_owned();
                x.column_mut(j).scaled_add(-proj, &qi);
            }
        }
        let nrm = {
            let c = x.column(j);
            c.dot(&c).sqrt()
        };
        if nrm <= 1e-12 * before.max(f64::MIN_POSITIVE) || nrm == 0.0 {
            x.column_mut(j).fill(0.0);
            missing.push(j);
        } else {
            x.column_mut(j).mapv_inplace(|v| v / nrm);
        }
    }
    complete_basis(x, &missing);
}

/// Largest singular value of `a`, to a residual tolerance `tol` relative to itself.
pub fn operator_norm<O: LinearOperator + ?Sized>(a: &O, tol: f64) -> Result<f64> {
    operator_norm_with(a, tol, 0)
}

pub fn operator_norm_with<O: LinearOperator + ?Sized>(a: &O, tol: f64, seed: u64) -> Result<f64> {
    let (n1, n2) = a.shape();
    if n1.min(n2) <= 64 {
        // small problems: materialize along the short side and solve densely
        let dense = if n1 <= n2 {
            a.apply_transpose(Array2::<f64>::eye(n1).view())
        } else {
            a.apply(Array2::<f64>::eye(n2).view())
        };
        return Ok(jacobi_svd(dense.view()).sigma[0]);
    }
    let opts = SvdOptions {
        tol,
        max_iter: 5000,
        oversample: 8,
        seed,
        method: SvdMethod::Krylov,
    };
    Ok(krylov_svd(a, 1, &opts)?.sigma[0])
}

/// Operator norm of a dense matrix, exact for `min(n1, n2) <= DENSE_CUTOFF`.
pub fn dense_operator_norm(a: ArrayView2<f64>, tol: f64) -> Result<f64> {
    if a.nrows().min(a.ncols()) <= DENSE_CUTOFF {
        return Ok(jacobi_svd(a).sigma[0]);
    }
    operator_norm(&a, tol)
}

pub fn frobenius_norm(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Cosines of the principal angles between the column spans of two
/// orthonormal bases, in nonincreasing order.
pub fn principal_cosines(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array1<f64> {
    let m = a.t().dot(&b);
    jacobi_svd(m.view()).sigma.mapv(|c| c.min(1.0))
}

/// Sine of the largest principal angle between the spans of two orthonormal
/// bases of equal width; this is the operator norm of the difference of the
/// two orthogonal projections. Computed from `b - a a^T b` for accuracy at
/// small angles.
pub fn max_principal_sine(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    let residual = &b - &a.dot(&a.t().dot(&b));
    jacobi_svd(residual.view()).sigma[0].min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn diagonal_matrix_truncates_to_leading_entries() {
        let a = array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        for method in [SvdMethod::Dense, SvdMethod::Krylov] {
            let opts = SvdOptions {
                method,
                ..Default::default()
            };
            let svd = truncated_svd(a.view(), 2, &opts).unwrap();
            assert!((svd.sigma[0] - 3.0).abs() < 1e-10);
            assert!((svd.sigma[1] - 2.0).abs() < 1e-10);
            let rec = svd.reconstruct();
            let want = array![[3.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 0.0]];
            assert!((&rec - &want).iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn rank_one_matrix_has_single_nonzero_value() {
        let u = array![0.6, 0.8, 0.0];
        let v = array![0.0, 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0];
        let a = u.view().insert_axis(ndarray::Axis(1)).dot(&v.view().insert_axis(ndarray::Axis(0)));
        for method in [SvdMethod::Dense, SvdMethod::Krylov] {
            let opts = SvdOptions {
                method,
                ..Default::default()
            };
            let svd = truncated_svd(a.view(), 3, &opts).unwrap();
            assert!((svd.sigma[0] - 1.0).abs() < 1e-12);
            assert!(svd.sigma[1].abs() < 1e-12 && svd.sigma[2].abs() < 1e-12);
            let gram = svd.u.t().dot(&svd.u);
            assert!((&gram - &Array2::<f64>::eye(3)).iter().all(|x| x.abs() < 1e-8));
        }
    }

    #[test]
    fn zero_matrix_is_handled() {
        let a = Array2::<f64>::zeros((5, 4));
        let svd = truncated_svd(
            a.view(),
            2,
            &SvdOptions {
                method: SvdMethod::Krylov,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(svd.sigma.to_vec(), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_rank() {
        let a = Array2::<f64>::zeros((3, 4));
        assert!(truncated_svd(a.view(), 4, &SvdOptions::default()).is_err());
        assert!(truncated_svd(a.view(), 0, &SvdOptions::default()).is_err());
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&array![[5.0, 0.0], [0.0, 2.0]], 1e-12).unwrap() - 5.0).abs() < 1e-12);
        assert!((operator_norm(&array![[0.0, 1.0], [1.0, 0.0]], 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let ones = Array2::<f64>::ones((100, 100));
        assert!((operator_norm(&ones, 1e-12).unwrap() - 100.0).abs() < 1e-9);
        let sub = operator_norm_with(&ones, 1e-10, 3).unwrap();
        assert!((sub - 100.0).abs() < 1e-9);
    }

    #[test]
    fn orthonormalize_repairs_dependent_columns() {
        let mut x = array![[1.0, 2.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]];
        orthonormalize(&mut x);
        let gram = x.t().dot(&x);
        assert!((&gram - &Array2::<f64>::eye(3)).iter().all(|v| v.abs() < 1e-12));
    }
}
