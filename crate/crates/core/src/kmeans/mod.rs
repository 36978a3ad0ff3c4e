//! The k-means step: Lloyd's algorithm with k-means++ seeding, the greedy
//! radius-cover replacement, and checks of the misclassification guarantees.

mod certificate;
mod cover;
mod lloyd;

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::misclassification;
use crate::types::KMeansMatrix;

pub use certificate::{achieved_kappa, lqc_certificate, LqcReport, LqcStatus};
pub use cover::{radius_cover, radius_cover_sweep, RadiusCover, RadiusSweep};
pub use lloyd::{kmeanspp_kappa, lloyd_pp, LloydOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KMeansAlgorithm {
    LloydPp,
    RadiusCover { rho: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub restarts: usize,
    pub max_lloyd_iters: usize,
    /// Seed of the random sub-stream shared by all restarts.
    pub seed: u64,
    pub algorithm: KMeansAlgorithm,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            restarts: 10,
            max_lloyd_iters: 100,
            seed: 0,
            algorithm: KMeansAlgorithm::LloydPp,
        }
    }
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::validation("k must be positive"));
        }
        if self.restarts == 0 {
            return Err(Error::validation("at least one restart is required"));
        }
        if let KMeansAlgorithm::RadiusCover { rho } = self.algorithm {
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::validation("radius must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// `||x_hat - expand(x)||_F`.
pub fn kmeans_objective(x_hat: ArrayView2<f64>, x: &KMeansMatrix) -> Result<f64> {
    if x_hat.dim() != (x.n(), x.dim()) {
        return Err(Error::DimensionMismatch(format!(
            "data is {:?} but the k-means matrix is {} x {}",
            x_hat.dim(),
            x.n(),
            x.dim()
        )));
    }
    Ok(sse(x_hat, x.labels().labels(), x.centers().view()).sqrt())
}

/// Sum of squared distances of each row to its assigned center.
pub(crate) fn sse(x: ArrayView2<f64>, labels: &[usize], centers: ArrayView2<f64>) -> f64 {
    x.outer_iter()
        .zip(labels)
        .map(|(row, &l)| {
            row.iter()
                .zip(centers.row(l))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        })
        .sum()
}

/// Squared Euclidean distances between all pairs of rows.
pub(crate) fn pairwise_sq_distances(x: ArrayView2<f64>) -> Array2<f64> {
    let gram = x.dot(&x.t());
    let norms = gram.diag().to_owned();
    let mut d = Array2::from_shape_fn(gram.dim(), |(i, j)| (norms[i] + norms[j] - 2.0 * gram[[i, j]]).max(0.0));
    d.diag_mut().fill(0.0);
    d
}

/// Runs the configured algorithm on two representations with identical
/// pairwise distances and reports whether the labelings coincide.
pub fn isometry_check(cfg: &KMeansConfig, x: ArrayView2<f64>, y: ArrayView2<f64>) -> Result<bool> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch("inputs have different numbers of rows".into()));
    }
    let dx = pairwise_sq_distances(x).mapv(f64::sqrt);
    let dy = pairwise_sq_distances(y).mapv(f64::sqrt);
    let scale = dx.iter().copied().fold(1.0, f64::max);
    let max_diff = (&dx - &dy).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_diff > 1e-9 * scale {
        return Err(Error::DistanceMismatch { max_diff });
    }
    let (a, b) = match cfg.algorithm {
        KMeansAlgorithm::LloydPp => (lloyd_pp(x, cfg)?.matrix, lloyd_pp(y, cfg)?.matrix),
        KMeansAlgorithm::RadiusCover { rho } => {
            let a = radius_cover(x, cfg.k, rho)?;
            let b = radius_cover(y, cfg.k, rho)?;
            return Ok(a.labels == b.labels);
        }
    };
    Ok(misclassification(a.labels(), b.labels())?.mis_bar == 0.0)
}

/// Mean of each row of `x`.
pub(crate) fn centroid(x: ArrayView2<f64>) -> ndarray::Array1<f64> {
    x.mean_axis(Axis(0)).unwrap_or_else(|| ndarray::Array1::zeros(x.ncols()))
}
