use ndarray::ArrayView2;
use rand::Rng;
use rayon::prelude::*;

use super::{centroid, kmeans_objective, KMeansConfig};
use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::types::{KMeansMatrix, Membership};

/// Result of the best restart.
#[derive(Clone, Debug)]
pub struct LloydOutcome {
    pub matrix: KMeansMatrix,
    /// `||x_hat - expand(matrix)||_F`.
    pub objective: f64,
    /// Approximation factor guaranteed in expectation by k-means++ seeding,
    /// in Frobenius-norm form.
    pub kappa_bound: f64,
    pub restart_objectives: Vec<f64>,
    pub best_restart: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Sum of squared distances after every Lloyd step of the best restart.
    pub trace: Vec<f64>,
}

/// `sqrt(8 (ln k + 2))`: k-means++ seeding is within `8 (ln k + 2)` of the
/// optimal sum of squares in expectation.
pub fn kmeanspp_kappa(k: usize) -> f64 {
    (8.0 * ((k as f64).ln() + 2.0)).sqrt()
}

/// Points stored row-major in a flat buffer.
struct Points<'a> {
    data: &'a [f64],
    dim: usize,
}

impl Points<'_> {
    fn len(&self) -> usize {
        self.data.len() / self.dim.max(1)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

struct Run {
    labels: Vec<usize>,
    sse: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Lloyd's algorithm from k-means++ seeds, best of `cfg.restarts` restarts.
///
/// Points are visited in an order fixed by their distance to the centroid, so
/// the result depends only on pairwise distances (given the seed), not on the
/// input order or on rigid motions of the data. Restarts run in parallel; the
/// lowest objective wins, with near-ties (relative 1e-9) going to the lowest
/// restart index.
pub fn lloyd_pp(x_hat: ArrayView2<f64>, cfg: &KMeansConfig) -> Result<LloydOutcome> {
    cfg.validate()?;
    let (n, dim) = x_hat.dim();
    if n < cfg.k {
        return Err(Error::validation(format!("cannot form {} clusters from {n} points", cfg.k)));
    }
    if x_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("k-means input contains non-finite values"));
    }
    let c = centroid(x_hat);
    let keys: Vec<f64> = x_hat
        .outer_iter()
        .map(|r| r.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]).then(i.cmp(&j)));
    let mut data = Vec::with_capacity(n * dim);
    for &i in &order {
        data.extend(x_hat.row(i).iter());
    }
    let points = Points { data: &data, dim };

    let runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run(&points, cfg, r))
        .collect();
    let restart_objectives: Vec<f64> = runs.iter().map(|r| r.sse.sqrt()).collect();
    let best_value = restart_objectives.iter().copied().fold(f64::INFINITY, f64::min);
    let best_restart = restart_objectives
        .iter()
        .position(|&v| v <= best_value + 1e-9 * best_value)
        .unwrap_or(0);
    let best = &runs[best_restart];

    let mut labels = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        labels[i] = best.labels[pos];
    }
    let matrix = KMeansMatrix::from_means(x_hat, Membership::new(labels, cfg.k)?)?;
    let objective = kmeans_objective(x_hat, &matrix)?;
    Ok(LloydOutcome {
        matrix,
        objective,
        kappa_bound: kmeanspp_kappa(cfg.k),
        restart_objectives,
        best_restart,
        iterations: best.iterations,
        converged: best.converged,
        trace: best.trace.clone(),
    })
}

fn run(points: &Points, cfg: &KMeansConfig, restart: usize) -> Run {
    let (n, dim, k) = (points.len(), points.dim, cfg.k);
    let mut rng = substream(cfg.seed, &[Purpose::KMeans as u64, restart as u64]);
    let mut centers = vec![0.0; k * dim];
    let mut active = vec![false; k];

    // k-means++ seeding
    let first = rng.random_range(0..n);
    centers[..dim].copy_from_slice(points.row(first));
    active[0] = true;
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(first))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        if !(total > 0.0) {
            break;
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w > 0.0 {
                acc += w;
                pick = Some(i);
                if acc > u {
                    break;
                }
            }
        }
        let p = pick.expect("positive total weight");
        centers[c * dim..(c + 1) * dim].copy_from_slice(points.row(p));
        active[c] = true;
        for (i, w) in d2.iter_mut().enumerate() {
            *w = w.min(sq_dist(points.row(i), points.row(p)));
        }
    }

    let (mut labels, mut dist) = assign(points, &centers, &active);
    let mut sse: f64 = dist.iter().sum();
    let mut trace = vec![sse];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_lloyd_iters {
        iterations += 1;
        update_centers(points, &labels, &mut centers, &mut active);
        // recompute distances to the updated centers, then repair empty clusters
        for i in 0..n {
            dist[i] = sq_dist(points.row(i), &centers[labels[i] * dim..(labels[i] + 1) * dim]);
        }
        for j in 0..k {
            if active[j] {
                continue;
            }
            let (far, &far_d) = dist
                .iter()
                .enumerate()
                .fold((0, &-1.0), |best, cur| if *cur.1 > *best.1 { cur } else { best });
            if far_d <= 0.0 {
                break;
            }
            centers[j * dim..(j + 1) * dim].copy_from_slice(points.row(far));
            active[j] = true;
            dist[far] = 0.0;
        }
        let (next, next_dist) = assign(points, &centers, &active);
        let next_sse: f64 = next_dist.iter().sum();
        debug_assert!(
            next_sse <= sse * (1.0 + 1e-12) + 1e-12,
            "Lloyd objective increased from {sse} to {next_sse}"
        );
        trace.push(next_sse);
        dist = next_dist;
        sse = next_sse;
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    // objective of the final labels against their own means
    update_centers(points, &labels, &mut centers, &mut active);
    let final_sse = (0..n)
        .map(|i| sq_dist(points.row(i), &centers[labels[i] * dim..(labels[i] + 1) * dim]))
        .sum();
    Run {
        labels,
        sse: final_sse,
        trace,
        iterations,
        converged,
    }
}

/// Nearest active center for every point; ties go to the lowest index.
fn assign(points: &Points, centers: &[f64], active: &[bool]) -> (Vec<usize>, Vec<f64>) {
    let dim = points.dim;
    (0..points.len())
        .map(|i| {
            let row = points.row(i);
            let mut best = (usize::MAX, f64::INFINITY);
            for (j, _) in active.iter().enumerate().filter(|(_, &a)| a) {
                let d = sq_dist(row, &centers[j * dim..(j + 1) * dim]);
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .unzip()
}

/// Moves every nonempty cluster's center to its mean; empty clusters become inactive.
fn update_centers(points: &Points, labels: &[usize], centers: &mut [f64], active: &mut [bool]) {
    let dim = points.dim;
    let mut counts = vec![0usize; active.len()];
    centers.fill(0.0);
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (c, x) in centers[l * dim..(l + 1) * dim].iter_mut().zip(points.row(i)) {
            *c += x;
        }
    }
    for (j, &cnt) in counts.iter().enumerate() {
        active[j] = cnt > 0;
        if cnt > 0 {
            for c in &mut centers[j * dim..(j + 1) * dim] {
                *c /= cnt as f64;
            }
        }
    }
}
