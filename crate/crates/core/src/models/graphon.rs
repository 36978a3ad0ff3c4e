use std::f64::consts::PI;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::types::{BiAdjacency, Membership};

/// A closed-open interval `[lo, hi)` of the unit interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval(pub f64, pub f64);

/// Deviation of the density from its block-constant part.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    #[default]
    None,
    /// `c` everywhere.
    ConstantShift { c: f64 },
    /// `amplitude * (2x - 1)(2y - 1)`.
    SeparableProduct { amplitude: f64 },
    /// `amplitude * sin(2 pi f x) sin(2 pi f y)`.
    SinusoidalBump { amplitude: f64, frequency: f64 },
}

impl Perturbation {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Perturbation::None => 0.0,
            Perturbation::ConstantShift { c } => c,
            Perturbation::SeparableProduct { amplitude } => amplitude * (2.0 * x - 1.0) * (2.0 * y - 1.0),
            Perturbation::SinusoidalBump {
                amplitude,
                frequency,
            } => amplitude * (2.0 * PI * frequency * x).sin() * (2.0 * PI * frequency * y).sin(),
        }
    }
}

/// Inhomogeneous random graph with edge probabilities `rho0(X_i, Y_j) / n`,
/// where `rho0` is block-constant on the partition plus a perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphonSpec {
    pub n: usize,
    pub row_partition: Vec<Interval>,
    pub col_partition: Vec<Interval>,
    #[serde(with = "crate::serde_matrix")]
    pub psi_block: Array2<f64>,
    #[serde(default)]
    pub perturbation: Perturbation,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct GraphonSample {
    pub adjacency: BiAdjacency,
    /// Labels given by the interval containing each latent position.
    pub rows: Membership,
    pub cols: Membership,
    pub latent_rows: Vec<f64>,
    pub latent_cols: Vec<f64>,
    /// Number of probabilities that fell outside `[0, 1]` and were clipped.
    pub clipped: usize,
}

impl GraphonSpec {
    /// Equal-width partitions of `[0, 1]` on both sides.
    pub fn uniform(n: usize, psi_block: Array2<f64>, perturbation: Perturbation, seed: u64) -> Self {
        let (k1, k2) = psi_block.dim();
        Self {
            n,
            row_partition: equal_partition(k1),
            col_partition: equal_partition(k2),
            psi_block,
            perturbation,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::validation("graphon sample size must be positive"));
        }
        check_partition(&self.row_partition, "row")?;
        check_partition(&self.col_partition, "column")?;
        if self.psi_block.dim() != (self.row_partition.len(), self.col_partition.len()) {
            return Err(Error::DimensionMismatch(format!(
                "psi_block is {:?} but partitions have {} and {} intervals",
                self.psi_block.dim(),
                self.row_partition.len(),
                self.col_partition.len()
            )));
        }
        if self.psi_block.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation("psi_block must be finite and nonnegative"));
        }
        Ok(())
    }

    /// The block-constant part `rho0~(x, y)`.
    pub fn block_density(&self, x: f64, y: f64) -> f64 {
        self.psi_block[[locate(&self.row_partition, x), locate(&self.col_partition, y)]]
    }

    pub fn density(&self, x: f64, y: f64) -> f64 {
        self.block_density(x, y) + self.perturbation.eval(x, y)
    }

    /// `sup rho0~`, the degree scale of the block-constant part.
    pub fn degree_scale(&self) -> f64 {
        self.psi_block.iter().copied().fold(0.0, f64::max)
    }
}

fn equal_partition(k: usize) -> Vec<Interval> {
    (0..k)
        .map(|t| Interval(t as f64 / k as f64, (t + 1) as f64 / k as f64))
        .collect()
}

fn check_partition(parts: &[Interval], side: &str) -> Result<()> {
    let bad = || Error::validation(format!("{side} partition must tile [0, 1] with consecutive intervals"));
    let (first, last) = match (parts.first(), parts.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(bad()),
    };
    if first.0 != 0.0 || (last.1 - 1.0).abs() > 1e-12 {
        return Err(bad());
    }
    if parts.iter().any(|iv| !(iv.0 < iv.1)) {
        return Err(bad());
    }
    if parts.windows(2).any(|w| (w[0].1 - w[1].0).abs() > 1e-12) {
        return Err(bad());
    }
    Ok(())
}

fn locate(parts: &[Interval], x: f64) -> usize {
    parts
        .iter()
        .position(|iv| x < iv.1)
        .unwrap_or(parts.len() - 1)
}

/// Draws latent uniforms on both sides and edges `Bernoulli(rho0(X_i, Y_j) / n)`.
pub fn sample_graphon(spec: &GraphonSpec) -> Result<GraphonSample> {
    spec.validate()?;
    let n = spec.n;
    let latent = |side: u64| -> Vec<f64> {
        let mut rng = substream(spec.seed, &[Purpose::Latent as u64, side]);
        (0..n).map(|_| rng.random::<f64>()).collect()
    };
    let xs = latent(0);
    let ys = latent(1);
    let rows = Membership::new(
        xs.iter().map(|&x| locate(&spec.row_partition, x)).collect(),
        spec.row_partition.len(),
    )?;
    let cols = Membership::new(
        ys.iter().map(|&y| locate(&spec.col_partition, y)).collect(),
        spec.col_partition.len(),
    )?;

    let mut rng = substream(spec.seed, &[Purpose::Edges as u64]);
    let mut clipped = 0;
    let mut a = Array2::zeros((n, n));
    for (i, mut row) in a.outer_iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let raw = spec.density(xs[i], ys[j]) / n as f64;
            let p = raw.clamp(0.0, 1.0);
            if p != raw {
                clipped += 1;
            }
            if p > 0.0 && rng.random::<f64>() < p {
                *entry = 1.0;
            }
        }
    }
    if clipped > 0 {
        log::warn!("{clipped} graphon edge probabilities were clipped to [0, 1]");
    }
    Ok(GraphonSample {
        adjacency: BiAdjacency::from_parts_unchecked(a, false),
        rows,
        cols,
        latent_rows: xs,
        latent_cols: ys,
        clipped,
    })
}

/// Monte Carlo estimate of `||rho0~ - rho0||_{L4}` over the unit square.
pub fn l4_deviation(spec: &GraphonSpec, samples: usize, seed: u64) -> f64 {
    let mut rng = substream(seed, &[Purpose::Latent as u64, 2]);
    let mut total = 0.0;
    for _ in 0..samples {
        let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
        total += (spec.density(x, y) - spec.block_density(x, y)).powi(4);
    }
    (total / samples.max(1) as f64).powf(0.25)
}
