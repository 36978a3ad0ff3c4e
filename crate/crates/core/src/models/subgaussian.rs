use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::population::block_mean;
use super::sbm::planted_labels;
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::types::{largest_remainder, Membership};

/// Block-constant means observed through additive Gaussian noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubGaussianSpec {
    pub n1: usize,
    pub n2: usize,
    pub proportions_rows: Vec<f64>,
    pub proportions_cols: Vec<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub b: Array2<f64>,
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub shuffle: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug)]
pub struct SubGaussianSample {
    pub matrix: Array2<f64>,
    pub rows: Membership,
    pub cols: Membership,
}

impl SubGaussianSpec {
    pub fn balanced(n1: usize, n2: usize, b: Array2<f64>, noise_sigma: f64, seed: u64) -> Self {
        let (k1, k2) = b.dim();
        Self {
            n1,
            n2,
            proportions_rows: vec![1.0 / k1 as f64; k1],
            proportions_cols: vec![1.0 / k2 as f64; k2],
            b,
            noise_sigma,
            seed,
            shuffle: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::validation("n1 and n2 must be positive"));
        }
        if self.b.dim() != (self.proportions_rows.len(), self.proportions_cols.len()) {
            return Err(Error::DimensionMismatch(format!(
                "mean matrix is {:?} but proportions give {} x {}",
                self.b.dim(),
                self.proportions_rows.len(),
                self.proportions_cols.len()
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::validation("noise_sigma must be finite and nonnegative"));
        }
        if self.b.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("mean matrix must be finite"));
        }
        for props in [&self.proportions_rows, &self.proportions_cols] {
            let total: f64 = props.iter().sum();
            if props.is_empty() || props.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::validation("proportions must be a probability vector"));
            }
        }
        Ok(())
    }

    /// `(1/n1 + 1/n2)^{-1}`.
    pub fn harmonic_size(&self) -> f64 {
        1.0 / (1.0 / self.n1 as f64 + 1.0 / self.n2 as f64)
    }
}

/// Entries are the block mean plus independent `N(0, noise_sigma^2)` noise.
pub fn sample_subgaussian(spec: &SubGaussianSpec) -> Result<SubGaussianSample> {
    spec.validate()?;
    let row_sizes = largest_remainder(spec.n1, &spec.proportions_rows);
    let col_sizes = largest_remainder(spec.n2, &spec.proportions_cols);
    let rows = planted_labels(&row_sizes, spec.shuffle, spec.seed, 0)?;
    let cols = planted_labels(&col_sizes, spec.shuffle, spec.seed, 1)?;
    let mut matrix = block_mean(&spec.b, &rows, &cols);
    if spec.noise_sigma > 0.0 {
        let mut rng = substream(spec.seed, &[Purpose::Noise as u64]);
        for x in matrix.iter_mut() {
            *x += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(SubGaussianSample { matrix, rows, cols })
}
