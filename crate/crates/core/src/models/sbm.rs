use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::types::{BiAdjacency, Membership, SbmSpec};

/// A sampled network together with its planted memberships.
#[derive(Clone, Debug)]
pub struct SbmSample {
    pub adjacency: BiAdjacency,
    pub rows: Membership,
    pub cols: Membership,
}

impl SbmSample {
    /// The mean matrix `P = Z1 B Z2^T` in the sampled node order.
    pub fn mean(&self, spec: &SbmSpec) -> Array2<f64> {
        super::population::block_mean(&spec.connectivity(), &self.rows, &self.cols)
    }
}

/// Planted labels: cluster 1 first, then cluster 2, ..., optionally shuffled.
pub(crate) fn planted_labels(sizes: &[usize], shuffle: bool, seed: u64, side: u64) -> Result<Membership> {
    let mut labels: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(t, &s)| std::iter::repeat_n(t, s))
        .collect();
    if shuffle {
        labels.shuffle(&mut substream(seed, &[Purpose::Shuffle as u64, side]));
    }
    Membership::new(labels, sizes.len())
}

fn memberships(spec: &SbmSpec) -> Result<(Membership, Membership)> {
    let rows = planted_labels(&spec.row_sizes(), spec.shuffle, spec.seed, 0)?;
    let cols = planted_labels(&spec.col_sizes(), spec.shuffle, spec.seed, 1)?;
    Ok((rows, cols))
}

/// Draws `A_ij ~ Bernoulli(B[z1_i, z2_j])` independently.
pub fn sample_sbm(spec: &SbmSpec) -> Result<SbmSample> {
    spec.validate()?;
    let b = spec.connectivity();
    let (rows, cols) = memberships(spec)?;
    let mut rng = substream(spec.seed, &[Purpose::Edges as u64]);
    let mut a = Array2::zeros((spec.n1, spec.n2));
    for (i, mut row) in a.outer_iter_mut().enumerate() {
        let s = rows.labels()[i];
        for (j, x) in row.iter_mut().enumerate() {
            let p = b[[s, cols.labels()[j]]];
            if p > 0.0 && rng.random::<f64>() < p {
                *x = 1.0;
            }
        }
    }
    Ok(SbmSample {
        adjacency: BiAdjacency::from_parts_unchecked(a, false),
        rows,
        cols,
    })
}

/// Symmetric SBM: the upper triangle (diagonal included, self-loops allowed)
/// is drawn independently and mirrored.
pub fn sample_symmetric_sbm(spec: &SbmSpec) -> Result<SbmSample> {
    spec.validate()?;
    if spec.n1 != spec.n2 {
        return Err(Error::validation("a symmetric SBM needs n1 = n2"));
    }
    if spec.proportions_rows != spec.proportions_cols {
        return Err(Error::validation("a symmetric SBM needs identical proportions on both sides"));
    }
    if spec.psi != spec.psi.t() {
        return Err(Error::validation("a symmetric SBM needs a symmetric psi"));
    }
    let b = spec.connectivity();
    let rows = planted_labels(&spec.row_sizes(), spec.shuffle, spec.seed, 0)?;
    let n = spec.n1;
    let mut rng = substream(spec.seed, &[Purpose::Edges as u64]);
    let mut a = Array2::zeros((n, n));
    let z = rows.labels();
    for i in 0..n {
        for j in i..n {
            let p = b[[z[i], z[j]]];
            if p > 0.0 && rng.random::<f64>() < p {
                a[[i, j]] = 1.0;
                a[[j, i]] = 1.0;
            }
        }
    }
    Ok(SbmSample {
        adjacency: BiAdjacency::from_parts_unchecked(a, true),
        cols: rows.clone(),
        rows,
    })
}

/// `psi = b * 1 1^T + (a - b) I_k`, the planted-partition connectivity.
pub fn planted_partition(k: usize, a: f64, b: f64) -> Array2<f64> {
    Array2::from_shape_fn((k, k), |(s, t)| if s == t { a } else { b })
}
