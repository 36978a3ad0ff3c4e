use ndarray::ArrayView2;
use serde::Serialize;

use super::{kmeans_objective, pairwise_sq_distances};
use crate::error::{Error, Result};
use crate::types::{KMeansMatrix, Membership};

/// Output of the greedy radius cover.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadiusCover {
    /// Cluster of each point, `None` for points left unlabeled.
    pub labels: Vec<Option<usize>>,
    pub clusters: Vec<Vec<usize>>,
    pub unlabeled: Vec<usize>,
}

/// Greedy k-means replacement: `k` times, pick the surviving point whose
/// `rho`-ball holds the most surviving points (lowest index on ties), make
/// that ball a cluster and remove it. Points never covered stay unlabeled.
pub fn radius_cover(x_hat: ArrayView2<f64>, k: usize, rho: f64) -> Result<RadiusCover> {
    if k == 0 {
        return Err(Error::validation("k must be positive"));
    }
    if !(rho > 0.0) {
        return Err(Error::validation("radius must be positive"));
    }
    let n = x_hat.nrows();
    let d2 = pairwise_sq_distances(x_hat);
    let r2 = rho * rho;
    let mut alive = vec![true; n];
    let mut labels = vec![None; n];
    let mut clusters = Vec::with_capacity(k);
    for r in 0..k {
        let mut best: Option<(usize, usize)> = None;
        for i in (0..n).filter(|&i| alive[i]) {
            let size = (0..n).filter(|&j| alive[j] && d2[[i, j]] <= r2).count();
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((i, size));
            }
        }
        let Some((center, _)) = best else {
            clusters.push(Vec::new());
            continue;
        };
        let members: Vec<usize> = (0..n).filter(|&j| alive[j] && d2[[center, j]] <= r2).collect();
        for &j in &members {
            alive[j] = false;
            labels[j] = Some(r);
        }
        clusters.push(members);
    }
    let unlabeled = (0..n).filter(|&i| alive[i]).collect();
    Ok(RadiusCover {
        labels,
        clusters,
        unlabeled,
    })
}

/// Radius cover repeated over `rho_i = i * rho1`, `i = 1..=ceil(ln n)`, with
/// unlabeled points attached to the nearest cluster mean; the labeling with
/// the smallest k-means objective is kept. Experimental.
#[derive(Clone, Debug)]
pub struct RadiusSweep {
    pub rho: f64,
    pub matrix: KMeansMatrix,
    pub objective: f64,
}

pub fn radius_cover_sweep(x_hat: ArrayView2<f64>, k: usize, rho1: f64) -> Result<RadiusSweep> {
    let n = x_hat.nrows();
    let steps = ((n.max(2) as f64).ln().ceil() as usize).max(1);
    let mut best: Option<RadiusSweep> = None;
    for i in 1..=steps {
        let rho = i as f64 * rho1;
        let cover = radius_cover(x_hat, k, rho)?;
        let partial: Vec<usize> = cover.labels.iter().map(|l| l.unwrap_or(0)).collect();
        // means over the labeled points only
        let labeled: Vec<usize> = (0..n).filter(|&i| cover.labels[i].is_some()).collect();
        let centers = if labeled.is_empty() {
            ndarray::Array2::zeros((k, x_hat.ncols()))
        } else {
            let sub = x_hat.select(ndarray::Axis(0), &labeled);
            let sub_labels: Vec<usize> = labeled.iter().map(|&i| partial[i]).collect();
            KMeansMatrix::from_means(sub.view(), Membership::new(sub_labels, k)?)?
                .centers()
                .clone()
        };
        let nonempty: Vec<bool> = cover.clusters.iter().map(|c| !c.is_empty()).collect();
        let completed: Vec<usize> = (0..n)
            .map(|i| {
                cover.labels[i].unwrap_or_else(|| {
                    (0..k)
                        .filter(|&t| nonempty[t])
                        .map(|t| {
                            let d = (&x_hat.row(i) - &centers.row(t)).mapv(|v| v * v).sum();
                            (t, d)
                        })
                        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
                        .0
                })
            })
            .collect();
        let matrix = KMeansMatrix::from_means(x_hat, Membership::new(completed, k)?)?;
        let objective = kmeans_objective(x_hat, &matrix)?;
        if best.as_ref().is_none_or(|b| objective < b.objective) {
            best = Some(RadiusSweep { rho, matrix, objective });
        }
    }
    Ok(best.expect("at least one radius is tried"))
}
