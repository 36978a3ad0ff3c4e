use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::jacobi_svd;
use crate::types::{Membership, SbmSpec};
use super::sbm::planted_labels;

/// Reduced SVD of the mean matrix `P = Z1 B Z2^T` assembled from the SVD of the
/// small `k1 x k2` matrix `N1^{1/2} B N2^{1/2}`.
#[derive(Clone, Debug)]
pub struct PopulationSvd {
    /// `Z1bar U_psi`, `n1 x k`.
    pub left: Array2<f64>,
    pub sigma: Array1<f64>,
    /// `Z2bar V_psi`, `n2 x k`.
    pub right: Array2<f64>,
    pub u_psi: Array2<f64>,
    pub v_psi: Array2<f64>,
    /// `N1^{1/2} B N2^{1/2}`.
    pub b_bar: Array2<f64>,
}

impl PopulationSvd {
    /// Builds the factors for connectivity `b` and the given memberships.
    pub fn new(b: &Array2<f64>, rows: &Membership, cols: &Membership) -> Result<Self> {
        if b.dim() != (rows.k(), cols.k()) {
            return Err(Error::DimensionMismatch(format!(
                "connectivity is {:?} but memberships have {} and {} clusters",
                b.dim(),
                rows.k(),
                cols.k()
            )));
        }
        let z1 = rows.normalized()?;
        let z2 = cols.normalized()?;
        let s1: Vec<f64> = rows.cluster_sizes().iter().map(|&s| (s as f64).sqrt()).collect();
        let s2: Vec<f64> = cols.cluster_sizes().iter().map(|&s| (s as f64).sqrt()).collect();
        let b_bar = Array2::from_shape_fn(b.dim(), |(s, t)| s1[s] * b[[s, t]] * s2[t]);
        let k = rows.k().min(cols.k());
        let svd = jacobi_svd(b_bar.view());
        let u_psi = svd.u.slice(ndarray::s![.., ..k]).to_owned();
        let v_psi = svd.v.slice(ndarray::s![.., ..k]).to_owned();
        Ok(Self {
            left: z1.dot(&u_psi),
            sigma: svd.sigma.slice(ndarray::s![..k]).to_owned(),
            right: z2.dot(&v_psi),
            u_psi,
            v_psi,
            b_bar,
        })
    }

    pub fn reconstruct(&self) -> Array2<f64> {
        (&self.left * &self.sigma).dot(&self.right.t())
    }

    /// Smallest retained singular value `sigma_k`.
    pub fn sigma_k(&self) -> f64 {
        self.sigma[self.sigma.len() - 1]
    }
}

/// Population SVD for the spec's canonical (unshuffled) node order.
pub fn population_svd(spec: &SbmSpec) -> Result<PopulationSvd> {
    spec.validate()?;
    let rows = planted_labels(&spec.row_sizes(), false, 0, 0)?;
    let cols = planted_labels(&spec.col_sizes(), false, 0, 1)?;
    PopulationSvd::new(&spec.connectivity(), &rows, &cols)
}

/// `Z1 B Z2^T`.
pub fn block_mean(b: &Array2<f64>, rows: &Membership, cols: &Membership) -> Array2<f64> {
    let (z1, z2) = (rows.labels(), cols.labels());
    Array2::from_shape_fn((z1.len(), z2.len()), |(i, j)| b[[z1[i], z2[j]]])
}

/// Separation and scale constants of a block model.
#[derive(Clone, Debug, Serialize)]
pub struct SeparationConstants {
    /// `min_{s != t} sum_l pi_2l (psi_sl - psi_tl)^2`.
    pub psi_min_sq: f64,
    /// As `psi_min_sq` with the inner sum weighted by `pi_1t`.
    pub psi_tilde_min_sq: f64,
    pub sigma_k: f64,
    pub d: f64,
    pub d_av: f64,
    /// Row mean parameters `Lambda_sl = B_sl n_2l`.
    #[serde(with = "crate::serde_matrix")]
    pub lambda: Array2<f64>,
    pub lambda_min_sq: f64,
}

/// Minima over distinct cluster pairs are `+inf` when there is a single row cluster.
pub fn separation_constants(spec: &SbmSpec) -> Result<SeparationConstants> {
    spec.validate()?;
    let psi = &spec.psi;
    let (pi1, pi2) = (&spec.proportions_rows, &spec.proportions_cols);
    let k1 = spec.k1();
    let b = spec.connectivity();
    let n2 = spec.col_sizes();
    let lambda = Array2::from_shape_fn(b.dim(), |(s, l)| b[[s, l]] * n2[l] as f64);

    let mut psi_min_sq = f64::INFINITY;
    let mut psi_tilde_min_sq = f64::INFINITY;
    let mut lambda_min_sq = f64::INFINITY;
    for s in 0..k1 {
        for t in 0..k1 {
            if s == t {
                continue;
            }
            let weighted: f64 = (0..spec.k2())
                .map(|l| pi2[l] * (psi[[s, l]] - psi[[t, l]]).powi(2))
                .sum();
            psi_min_sq = psi_min_sq.min(weighted);
            psi_tilde_min_sq = psi_tilde_min_sq.min(pi1[t] * weighted);
            let gap = &lambda.row(s) - &lambda.row(t);
            lambda_min_sq = lambda_min_sq.min(gap.dot(&gap));
        }
    }
    Ok(SeparationConstants {
        psi_min_sq,
        psi_tilde_min_sq,
        sigma_k: population_svd(spec)?.sigma_k(),
        d: spec.degree_scale(),
        d_av: spec.average_degree(),
        lambda,
        lambda_min_sq,
    })
}

/// Block averages `B~ = N1^{-1} Z1^T P Z2 N2^{-1}` and the block-constant
/// approximation `P~ = Z1 B~ Z2^T`.
pub fn sbm_approximation(
    p: &Array2<f64>,
    rows: &Membership,
    cols: &Membership,
) -> Result<(Array2<f64>, Array2<f64>)> {
    if p.dim() != (rows.len(), cols.len()) {
        return Err(Error::DimensionMismatch(format!(
            "mean matrix is {:?} but memberships cover {} x {} nodes",
            p.dim(),
            rows.len(),
            cols.len()
        )));
    }
    let (n1, n2) = (rows.cluster_sizes(), cols.cluster_sizes());
    for sizes in [&n1, &n2] {
        if let Some(t) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyCluster { label: t + 1 });
        }
    }
    let mut sums = Array2::<f64>::zeros((rows.k(), cols.k()));
    for ((i, j), &v) in p.indexed_iter() {
        sums[[rows.labels()[i], cols.labels()[j]]] += v;
    }
    let b = Array2::from_shape_fn(sums.dim(), |(s, t)| sums[[s, t]] / (n1[s] * n2[t]) as f64);
    let approx = block_mean(&b, rows, cols);
    Ok((b, approx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::planted_partition;
    use ndarray::array;

    fn sbpp() -> SbmSpec {
        SbmSpec::balanced(300, 300, planted_partition(3, 6.0, 1.0), 0)
    }

    #[test]
    fn planted_partition_spectrum() {
        let svd = population_svd(&sbpp()).unwrap();
        // B-bar = (n/k) B = psi / k for balanced equal sides
        let want = [8.0 / 3.0, 5.0 / 3.0, 5.0 / 3.0];
        for (s, w) in svd.sigma.iter().zip(want) {
            assert!((s - w).abs() < 1e-12, "{s} vs {w}");
        }
        assert!((svd.sigma_k() - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn population_svd_reconstructs_mean() {
        let spec = sbpp();
        let svd = population_svd(&spec).unwrap();
        let rows = planted_labels(&spec.row_sizes(), false, 0, 0).unwrap();
        let cols = planted_labels(&spec.col_sizes(), false, 0, 1).unwrap();
        let p = block_mean(&spec.connectivity(), &rows, &cols);
        let err = (&svd.reconstruct() - &p).mapv(|v| v * v).sum().sqrt();
        assert!(err <= 1e-10 * p.mapv(|v| v * v).sum().sqrt());
        let gram = svd.left.t().dot(&svd.left);
        assert!((&gram - &Array2::<f64>::eye(3)).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn single_column_cluster_gives_rank_one() {
        let spec = SbmSpec::balanced(10, 12, array![[2.0], [5.0]], 0);
        let svd = population_svd(&spec).unwrap();
        assert_eq!(svd.sigma.len(), 1);
    }

    #[test]
    fn planted_partition_separation() {
        let c = separation_constants(&sbpp()).unwrap();
        assert!((c.psi_min_sq - 50.0 / 3.0).abs() < 1e-12);
        assert!((3.0 * c.psi_tilde_min_sq - c.psi_min_sq).abs() < 1e-12);
        assert!((c.sigma_k - 5.0 / 3.0).abs() < 1e-12);
        assert!((c.d - 6.0).abs() < 1e-12);
        assert!((c.d_av - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn lambda_from_connectivity() {
        let b = array![[0.5, 0.1], [0.1, 0.5]];
        let spec = SbmSpec::from_connectivity(20, 20, vec![0.5, 0.5], vec![0.5, 0.5], &b, 0);
        let c = separation_constants(&spec).unwrap();
        assert!((&c.lambda - &array![[5.0, 1.0], [1.0, 5.0]]).iter().all(|v| v.abs() < 1e-12));
        assert!((c.lambda_min_sq - 32.0).abs() < 1e-9);
    }

    #[test]
    fn identical_rows_have_no_separation() {
        let spec = SbmSpec::balanced(10, 10, array![[1.0, 2.0], [1.0, 2.0]], 0);
        assert_eq!(separation_constants(&spec).unwrap().psi_min_sq, 0.0);
    }

    #[test]
    fn block_average_examples() {
        let rows = Membership::new(vec![0, 0, 1, 1], 2).unwrap();
        let cols = Membership::new(vec![0, 0, 1, 1], 2).unwrap();
        let p = array![
            [1.0, 0.0, 0.0, 1.0],
            [0.0, 1.0, 1.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 1.0]
        ];
        let (b, approx) = sbm_approximation(&p, &rows, &cols).unwrap();
        assert!(b.iter().all(|&v| (v - 0.5).abs() < 1e-15));
        let (_, again) = sbm_approximation(&approx, &rows, &cols).unwrap();
        assert_eq!(approx, again);

        let block = block_mean(&array![[0.3, 0.1], [0.2, 0.7]], &rows, &cols);
        let (_, fixed) = sbm_approximation(&block, &rows, &cols).unwrap();
        assert!((&fixed - &block).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn block_average_is_projection_product() {
        let rows = Membership::new(vec![0, 1, 0, 1, 1], 2).unwrap();
        let cols = Membership::new(vec![1, 0, 2, 2], 3).unwrap();
        let p = Array2::from_shape_fn((5, 4), |(i, j)| ((i * 3 + j * 5) % 7) as f64 / 7.0);
        let (_, approx) = sbm_approximation(&p, &rows, &cols).unwrap();
        let z1 = rows.normalized().unwrap();
        let z2 = cols.normalized().unwrap();
        let projected = z1.dot(&z1.t()).dot(&p).dot(&z2.dot(&z2.t()));
        assert!((&projected - &approx).iter().all(|v| v.abs() < 1e-12));
    }
}
