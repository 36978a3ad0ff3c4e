use ndarray::{Array2, ArrayView2, Zip};

/// A real matrix that is only accessed through products with blocks of vectors.
pub trait LinearOperator: Sync {
    fn shape(&self) -> (usize, usize);

    /// `A x` for an `ncols x l` block `x`.
    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64>;

    /// `A^T y` for an `nrows x l` block `y`.
    fn apply_transpose(&self, y: ArrayView2<f64>) -> Array2<f64>;
}

impl LinearOperator for ArrayView2<'_, f64> {
    fn shape(&self) -> (usize, usize) {
        self.dim()
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.dot(&x)
    }

    fn apply_transpose(&self, y: ArrayView2<f64>) -> Array2<f64> {
        self.t().dot(&y)
    }
}

impl LinearOperator for Array2<f64> {
    fn shape(&self) -> (usize, usize) {
        self.dim()
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        self.dot(&x)
    }

    fn apply_transpose(&self, y: ArrayView2<f64>) -> Array2<f64> {
        self.t().dot(&y)
    }
}

/// Compressed sparse row storage of a real matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_dense(a: ArrayView2<f64>) -> Self {
        let (nrows, ncols) = a.dim();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in a.outer_iter() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }
}

impl LinearOperator for CsrMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let l = x.ncols();
        let mut out = Array2::zeros((self.nrows, l));
        for (i, mut orow) in out.outer_iter_mut().enumerate() {
            for p in self.indptr[i]..self.indptr[i + 1] {
                orow.scaled_add(self.values[p], &x.row(self.indices[p]));
            }
        }
        out
    }

    fn apply_transpose(&self, y: ArrayView2<f64>) -> Array2<f64> {
        let l = y.ncols();
        let mut out = Array2::zeros((self.ncols, l));
        for i in 0..self.nrows {
            let yrow = y.row(i);
            for p in self.indptr[i]..self.indptr[i + 1] {
                out.row_mut(self.indices[p]).scaled_add(self.values[p], &yrow);
            }
        }
        out
    }
}

/// `base - left * right^T`, for a low-rank correction of a (sparse) operator.
pub struct LowRankUpdate<'a, O: LinearOperator> {
    pub base: &'a O,
    pub left: ArrayView2<'a, f64>,
    pub right: ArrayView2<'a, f64>,
}

impl<O: LinearOperator> LinearOperator for LowRankUpdate<'_, O> {
    fn shape(&self) -> (usize, usize) {
        self.base.shape()
    }

    fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = self.base.apply(x);
        let correction = self.left.dot(&self.right.t().dot(&x));
        Zip::from(&mut out).and(&correction).for_each(|o, c| *o -= c);
        out
    }

    fn apply_transpose(&self, y: ArrayView2<f64>) -> Array2<f64> {
        let mut out = self.base.apply_transpose(y);
        let correction = self.right.dot(&self.left.t().dot(&y));
        Zip::from(&mut out).and(&correction).for_each(|o, c| *o -= c);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn csr_matches_dense_products() {
        let a = array![[0.0, 1.0, 0.0], [2.0, 0.0, 3.0]];
        let csr = CsrMatrix::from_dense(a.view());
        assert_eq!(csr.nnz(), 3);
        let x = array![[1.0, 0.5], [2.0, -1.0], [3.0, 4.0]];
        assert_eq!(csr.apply(x.view()), a.dot(&x));
        let y = array![[1.0], [-2.0]];
        assert_eq!(csr.apply_transpose(y.view()), a.t().dot(&y));
    }

    #[test]
    fn low_rank_update_matches_dense() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let left = array![[1.0], [0.0], [2.0]];
        let right = array![[0.5], [1.0]];
        let op = LowRankUpdate {
            base: &a,
            left: left.view(),
            right: right.view(),
        };
        let dense = &a - &left.dot(&right.t());
        let x = array![[1.0], [-1.0]];
        assert_eq!(op.apply(x.view()), dense.dot(&x));
        let y = array![[1.0], [2.0], [3.0]];
        assert_eq!(op.apply_transpose(y.view()), dense.t().dot(&y));
    }
}
