//! Dense factorizations: one-sided Jacobi SVD for small inputs and a
//! symmetric eigensolver (nalgebra's tridiagonal QR) with sorted output.

use ndarray::{Array1, Array2, ArrayView2};

const EPS: f64 = f64::EPSILON;
const MAX_SWEEPS: usize = 80;

/// Thin SVD `a = u diag(sigma) v^T` with `min(m, n)` triplets, sigma nonincreasing.
#[derive(Clone, Debug)]
pub struct DenseSvd {
    pub u: Array2<f64>,
    pub sigma: Array1<f64>,
    pub v: Array2<f64>,
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn jacobi_svd(a: ArrayView2<f64>) -> DenseSvd {
    let (m, n) = a.dim();
    if m < n {
        let t = jacobi_svd(a.t());
        return DenseSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
    }
    // columns of the tall matrix, stored contiguously
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j).to_vec()).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for (x, y) in cp.iter().zip(cq) {
                        al += x * x;
                        be += y * y;
                        ga += x * y;
                    }
                    (al, be, ga)
                };
                if gamma == 0.0 || gamma.abs() <= EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = cols.iter().map(|c| norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let sigma_max = norms.iter().copied().fold(0.0, f64::max);
    let mut u = Array2::zeros((m, n));
    let mut v = Array2::zeros((n, n));
    let mut sigma = Array1::zeros(n);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        sigma[dst] = s;
        for (i, x) in vcols[src].iter().enumerate() {
            v[[i, dst]] = *x;
        }
        if s > 0.0 && s > sigma_max * 1e-300 {
            for (i, x) in cols[src].iter().enumerate() {
                u[[i, dst]] = x / s;
            }
        } else {
            sigma[dst] = 0.0;
            missing.push(dst);
        }
    }
    complete_basis(&mut u, &missing);
    DenseSvd { u, sigma, v }
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Fills the listed columns of `u` with unit vectors orthogonal to all other
/// columns, drawing candidates from the standard basis.
pub(crate) fn complete_basis(u: &mut Array2<f64>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let m = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut candidate = 0;
    for &col in missing {
        loop {
            assert!(candidate < m, "cannot complete an orthonormal basis");
            let mut e = Array1::<f64>::zeros(m);
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for &j in &filled {
                    let proj = u.column(j).dot(&e);
                    e.scaled_add(-proj, &u.column(j));
                }
            }
            let nrm = e.dot(&e).sqrt();
            if nrm > 1e-8 {
                u.column_mut(col).assign(&(e / nrm));
                filled.push(col);
                break;
            }
        }
    }
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in nonincreasing
/// order with matching eigenvector columns.
pub fn symmetric_eigen(a: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen needs a square matrix");
    let eig = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = Array2::from_shape_fn((n, n), |(i, c)| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn max_abs(a: &Array2<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn jacobi_svd_reconstructs() {
        let a = array![[1.0, 2.0, 0.5], [-3.0, 0.1, 4.0], [2.0, 2.0, 2.0], [0.0, 1.0, -1.0]];
        for m in [a.clone(), a.t().to_owned()] {
            let svd = jacobi_svd(m.view());
            let rec = (&svd.u * &svd.sigma).dot(&svd.v.t());
            assert!(max_abs(&(&rec - &m)) < 1e-13);
            let k = svd.sigma.len();
            assert!(max_abs(&(svd.u.t().dot(&svd.u) - Array2::<f64>::eye(k))) < 1e-13);
            assert!(max_abs(&(svd.v.t().dot(&svd.v) - Array2::<f64>::eye(k))) < 1e-13);
            assert!(svd.sigma.windows(2).into_iter().all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn jacobi_svd_completes_basis_for_rank_deficient_input() {
        let a = array![[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let svd = jacobi_svd(a.view());
        assert_eq!(svd.sigma.to_vec(), vec![1.0, 0.0, 0.0]);
        assert!(max_abs(&(svd.u.t().dot(&svd.u) - Array2::<f64>::eye(3))) < 1e-13);
    }

    #[test]
    fn symmetric_eigen_of_small_matrix() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, -1.0]];
        let (vals, vecs) = symmetric_eigen(a.view());
        let want = [3.0, 1.0, -1.0];
        for (v, w) in vals.iter().zip(want) {
            assert!((v - w).abs() < 1e-13);
        }
        let rec = (&vecs * &vals).dot(&vecs.t());
        assert!(max_abs(&(&rec - &a)) < 1e-13);
    }
}
