use ndarray::ArrayView2;
use serde::Serialize;

use super::kmeans_objective;
use crate::error::{Error, Result};
use crate::metrics::misclassification;
use crate::types::KMeansMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LqcStatus {
    /// The separation condition holds and the misclassification bounds hold.
    Holds,
    /// The separation condition holds but a bound is violated.
    Violated,
    /// The separation condition fails; no bound is claimed.
    ConditionNotMet,
}

/// Both sides of the misclassification guarantee for a k-means step.
#[derive(Clone, Debug, Serialize)]
pub struct LqcReport {
    /// `||x_hat - expand(x_star)||_F`.
    pub epsilon: f64,
    pub kappa: f64,
    /// `4 (1 + kappa)^2 eps^2 / (delta_r^2 n_r)` for every cluster of `x_star`;
    /// the condition requires each to be below 1.
    pub condition: Vec<f64>,
    pub mis_bar: f64,
    pub mis_per_cluster: Vec<f64>,
    /// `4 (1 + kappa)^2 eps^2 / (n delta_min^2)`.
    pub bound: f64,
    /// `4 (1 + kappa)^2 eps^2 / (n_r delta_r^2)`.
    pub bound_per_cluster: Vec<f64>,
    pub status: LqcStatus,
}

/// Per-run approximation factor `d_F(x_hat, x_tilde) / d_F(x_hat, x_star)`;
/// `x_tilde` lies in the kappa-approximate set for any kappa at least this.
pub fn achieved_kappa(x_hat: ArrayView2<f64>, x_star: &KMeansMatrix, x_tilde: &KMeansMatrix) -> Result<f64> {
    let num = kmeans_objective(x_hat, x_tilde)?;
    let den = kmeans_objective(x_hat, x_star)?;
    Ok(if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    })
}

/// Checks that `x_tilde` misclassifies relative to `x_star` no more than the
/// guarantee allows whenever the data `x_hat` is close enough to `x_star`.
pub fn lqc_certificate(
    x_star: &KMeansMatrix,
    x_hat: ArrayView2<f64>,
    x_tilde: &KMeansMatrix,
    kappa: f64,
) -> Result<LqcReport> {
    if !(kappa >= 0.0) {
        return Err(Error::validation("kappa must be nonnegative"));
    }
    let sizes = x_star.labels().cluster_sizes();
    if sizes.iter().any(|&s| s == 0) {
        return Err(Error::validation("the reference k-means matrix must have k nonempty clusters"));
    }
    let sep = x_star.center_separation()?;
    let epsilon = kmeans_objective(x_hat, x_star)?;
    let n = x_star.n() as f64;
    let scale = if epsilon == 0.0 {
        0.0
    } else {
        4.0 * (1.0 + kappa).powi(2) * epsilon * epsilon
    };
    let deltas: Vec<f64> = sep.per_cluster.iter().map(|d| d.unwrap_or(f64::INFINITY)).collect();
    let condition: Vec<f64> = deltas
        .iter()
        .zip(&sizes)
        .map(|(d, &nr)| scale / (d * d * nr as f64))
        .collect();
    let bound_per_cluster = condition.clone();
    let bound = scale / (n * sep.min * sep.min);
    let mis = misclassification(x_star.labels(), x_tilde.labels())?;
    let status = if !condition.iter().all(|&c| c < 1.0) {
        LqcStatus::ConditionNotMet
    } else if mis.mis_bar <= bound
        && mis
            .per_cluster
            .iter()
            .zip(&bound_per_cluster)
            .all(|(m, b)| m <= b)
    {
        LqcStatus::Holds
    } else {
        LqcStatus::Violated
    };
    Ok(LqcReport {
        epsilon,
        kappa,
        condition,
        mis_bar: mis.mis_bar,
        mis_per_cluster: mis.per_cluster,
        bound,
        bound_per_cluster,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kmeans::{lloyd_pp, KMeansConfig};
    use crate::types::Membership;
    use ndarray::array;
    use rand::{Rng, SeedableRng};

    fn star() -> KMeansMatrix {
        let labels = Membership::new((0..30).map(|i| i % 3).collect(), 3).unwrap();
        KMeansMatrix::new(labels, array![[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]]).unwrap()
    }

    #[test]
    fn exact_data_gives_zero_error() {
        let x = star();
        let r = lqc_certificate(&x, x.expand().view(), &x, 1.0).unwrap();
        assert_eq!(r.epsilon, 0.0);
        assert_eq!(r.mis_bar, 0.0);
        assert_eq!(r.status, LqcStatus::Holds);
    }

    #[test]
    fn small_noise_satisfies_bound() {
        let x = star();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut hat = x.expand();
        for mut row in hat.outer_iter_mut() {
            let angle: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            row[0] += angle.cos();
            row[1] += angle.sin();
        }
        let out = lloyd_pp(hat.view(), &KMeansConfig::new(3, 1)).unwrap();
        let kappa = achieved_kappa(hat.view(), &x, &out.matrix).unwrap();
        let r = lqc_certificate(&x, hat.view(), &out.matrix, kappa).unwrap();
        assert_ne!(r.status, LqcStatus::Violated);
    }

    #[test]
    fn large_perturbation_is_gated() {
        let x = star();
        let hat = x.expand() * 0.0;
        let r = lqc_certificate(&x, hat.view(), &x, 1.0).unwrap();
        assert_eq!(r.status, LqcStatus::ConditionNotMet);
    }
}
