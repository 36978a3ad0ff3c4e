use ndarray::{s, Array1, Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::dense::symmetric_eigen;
use super::operator::LinearOperator;
use super::svd::{orthonormalize, SvdOptions};
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};

/// The symmetric dilation `[[0, A], [A^T, 0]]` of a rectangular matrix,
/// applied as an operator without materializing the zero blocks.
#[derive(Clone, Copy, Debug)]
pub struct DilatedMatrix<'a> {
    block: ArrayView2<'a, f64>,
}

pub fn dilate(a: ArrayView2<'_, f64>) -> DilatedMatrix<'_> {
    DilatedMatrix { block: a }
}

impl<'a> DilatedMatrix<'a> {
    pub fn size(&self) -> usize {
        self.block.nrows() + self.block.ncols()
    }

    pub fn block(&self) -> ArrayView2<'a, f64> {
        self.block
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let (n1, n2) = self.block.dim();
        let mut m = Array2::zeros((n1 + n2, n1 + n2));
        m.slice_mut(s![..n1, n1..]).assign(&self.block);
        m.slice_mut(s![n1.., ..n1]).assign(&self.block.t());
        m
    }

    /// Eigenpairs for the `k` largest (signed) eigenvalues, i.e. `+sigma_1..+sigma_k`.
    ///
    /// Runs subspace iteration on the dilation itself, tracking the `2k`
    /// eigenvalues of largest magnitude so that each `+sigma_i` is separated
    /// from its mirror `-sigma_i` by the Rayleigh-Ritz step.
    pub fn top_eigenpairs(&self, k: usize, opts: &SvdOptions) -> Result<(Array1<f64>, Array2<f64>)> {
        let (n1, n2) = self.block.dim();
        if k == 0 || k > n1.min(n2) {
            return Err(Error::validation(format!(
                "cannot take {k} eigenpairs of the dilation of a {n1} x {n2} matrix"
            )));
        }
        let n = self.size();
        let tracked = 2 * k;
        let width = (tracked + opts.oversample).min(n);
        let mut rng = substream(opts.seed, &[Purpose::SvdStart as u64, 1]);
        let mut x = Array2::from_shape_simple_fn((n, width), || rng.sample::<f64, _>(StandardNormal));
        orthonormalize(&mut x);

        for _ in 0..=opts.max_iter {
            let y = self.apply(x.view());
            let h = x.t().dot(&y);
            let h = (&h + &h.t()) * 0.5;
            let (vals, w) = symmetric_eigen(h.view());
            let mut order: Vec<usize> = (0..vals.len()).collect();
            order.sort_by(|&i, &j| vals[j].abs().total_cmp(&vals[i].abs()).then(i.cmp(&j)));
            let ritz = x.dot(&w);
            let image = y.dot(&w);
            let scale = vals[order[0]].abs();
            let worst = order[..tracked.min(order.len())]
                .iter()
                .map(|&i| {
                    let r = &image.column(i) - &(&ritz.column(i) * vals[i]);
                    r.dot(&r).sqrt()
                })
                .fold(0.0, f64::max);
            if worst <= opts.tol * scale || scale == 0.0 {
                // `vals` is sorted nonincreasing, so the leading columns are the top signed ones
                return Ok((
                    vals.slice(s![..k]).to_owned(),
                    ritz.slice(s![.., ..k]).to_owned(),
                ));
            }
            let mut next = Array2::zeros((n, width));
            for (dst, &src) in order.iter().enumerate() {
                next.column_mut(dst).assign(&image.column(src));
            }
            orthonormalize(&mut next);
            x = next;
        }
        Err(Error::NoConvergence {
            max_iter: opts.max_iter,
        })
    }
}

impl LinearOperator for DilatedMatrix<'_> {
    fn shape(&self) -> (usize, usize) {
        (self.size(), self.size())
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let n1 = self.block.nrows();
        let mut out = Array2::zeros((self.size(), x.ncols()));
        out.slice_mut(s![..n1, ..])
            .assign(&self.block.dot(&x.slice(s![n1.., ..])));
        out.slice_mut(s![n1.., ..])
            .assign(&self.block.t().dot(&x.slice(s![..n1, ..])));
        out
    }

    fn apply_transpose(&self, y: ArrayView2<f64>) -> Array2<f64> {
        self.apply(y)
    }
}
