//! Domain types shared across the crate: memberships, k-means matrices,
//! bi-adjacency matrices, block model specifications and truncated SVDs.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cluster assignment for one side of the network.
///
/// Labels are stored zero-based (`0..k`). Text and JSON formats use the
/// one-based convention; see [`crate::io`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MembershipRepr", into = "MembershipRepr")]
pub struct Membership {
    labels: Vec<usize>,
    k: usize,
}

/// JSON form: one-based labels and the number of clusters.
#[derive(Serialize, Deserialize)]
struct MembershipRepr {
    labels: Vec<usize>,
    k: usize,
}

impl TryFrom<MembershipRepr> for Membership {
    type Error = Error;

    fn try_from(repr: MembershipRepr) -> Result<Self> {
        Membership::from_one_based(&repr.labels, repr.k)
    }
}

impl From<Membership> for MembershipRepr {
    fn from(m: Membership) -> Self {
        MembershipRepr {
            labels: m.one_based(),
            k: m.k,
        }
    }
}

impl Membership {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::validation("number of clusters must be positive"));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::validation(format!(
                "label {} of node {i} exceeds k = {k}",
                l + 1
            )));
        }
        Ok(Self { labels, k })
    }

    /// Builds a membership from one-based labels in `1..=k`.
    pub fn from_one_based(labels: &[usize], k: usize) -> Result<Self> {
        if labels.iter().any(|&l| l == 0) {
            return Err(Error::validation("one-based labels must be >= 1"));
        }
        Self::new(labels.iter().map(|&l| l - 1).collect(), k)
    }

    /// Zero-based labels with `k` inferred as `max + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let k = labels.iter().copied().max().map_or(1, |m| m + 1);
        Self { labels, k }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l + 1).collect()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn nonempty_clusters(&self) -> usize {
        self.cluster_sizes().iter().filter(|&&s| s > 0).count()
    }

    /// Binary `n x k` matrix with a single one per row.
    pub fn to_matrix(&self) -> Array2<f64> {
        let mut z = Array2::zeros((self.len(), self.k));
        for (i, &l) in self.labels.iter().enumerate() {
            z[[i, l]] = 1.0;
        }
        z
    }

    /// `Z N^{-1/2}`, which has orthonormal columns when every cluster is nonempty.
    pub fn normalized(&self) -> Result<Array2<f64>> {
        let sizes = self.cluster_sizes();
        if let Some(t) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::EmptyCluster { label: t + 1 });
        }
        let mut z = Array2::zeros((self.len(), self.k));
        for (i, &l) in self.labels.iter().enumerate() {
            z[[i, l]] = 1.0 / (sizes[l] as f64).sqrt();
        }
        Ok(z)
    }

    /// Membership of the nodes listed in `order`: node `j` of the result is
    /// node `order[j]` of `self`.
    pub fn reindexed(&self, order: &[usize]) -> Self {
        Self {
            labels: order.iter().map(|&i| self.labels[i]).collect(),
            k: self.k,
        }
    }
}

/// A matrix with at most `k` distinct rows, stored as labels plus centers.
///
/// Row `t` of `centers` is the center of cluster `t`. Unused labels carry a
/// zero center row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KMeansMatrixRepr", into = "KMeansMatrixRepr")]
pub struct KMeansMatrix {
    labels: Membership,
    centers: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct KMeansMatrixRepr {
    labels: Vec<usize>,
    centers: Vec<Vec<f64>>,
}

impl TryFrom<KMeansMatrixRepr> for KMeansMatrix {
    type Error = Error;

    fn try_from(repr: KMeansMatrixRepr) -> Result<Self> {
        let centers = crate::serde_matrix::from_rows(&repr.centers)?;
        let labels = Membership::from_one_based(&repr.labels, centers.nrows())?;
        KMeansMatrix::new(labels, centers)
    }
}

impl From<KMeansMatrix> for KMeansMatrixRepr {
    fn from(x: KMeansMatrix) -> Self {
        KMeansMatrixRepr {
            labels: x.labels.one_based(),
            centers: crate::serde_matrix::to_rows(&x.centers),
        }
    }
}

/// Per-cluster center separation and its minimum over clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterSeparation {
    /// `None` for clusters without members.
    pub per_cluster: Vec<Option<f64>>,
    pub min: f64,
}

impl KMeansMatrix {
    pub fn new(labels: Membership, centers: Array2<f64>) -> Result<Self> {
        if labels.k() != centers.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "membership has k = {} but {} centers were given",
                labels.k(),
                centers.nrows()
            )));
        }
        Ok(Self { labels, centers })
    }

    /// Centers as the cluster means of the rows of `x`; empty clusters get zero centers.
    pub fn from_means(x: ArrayView2<f64>, labels: Membership) -> Result<Self> {
        if x.nrows() != labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} labels",
                x.nrows(),
                labels.len()
            )));
        }
        let mut centers = Array2::zeros((labels.k(), x.ncols()));
        let sizes = labels.cluster_sizes();
        for (row, &l) in x.outer_iter().zip(labels.labels()) {
            let mut c = centers.row_mut(l);
            c += &row;
        }
        for (mut c, &s) in centers.outer_iter_mut().zip(&sizes) {
            if s > 0 {
                c /= s as f64;
            }
        }
        Ok(Self { labels, centers })
    }

    pub fn labels(&self) -> &Membership {
        &self.labels
    }

    pub fn centers(&self) -> &Array2<f64> {
        &self.centers
    }

    pub fn k(&self) -> usize {
        self.labels.k()
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.centers.ncols()
    }

    /// The `n x d` matrix `Z R` whose row `i` is the center of node `i`.
    pub fn expand(&self) -> Array2<f64> {
        let mut x = Array2::zeros((self.n(), self.dim()));
        for (mut row, &l) in x.outer_iter_mut().zip(self.labels.labels()) {
            row.assign(&self.centers.row(l));
        }
        x
    }

    pub fn center_separation(&self) -> Result<CenterSeparation> {
        let sizes = self.labels.cluster_sizes();
        let active: Vec<usize> = (0..self.k()).filter(|&t| sizes[t] > 0).collect();
        if active.len() < 2 {
            return Err(Error::validation(
                "center separation needs at least two nonempty clusters",
            ));
        }
        let mut per_cluster = vec![None; self.k()];
        for &r in &active {
            let mut best = f64::INFINITY;
            for &l in &active {
                if l == r {
                    continue;
                }
                let d = row_distance(self.centers.row(r), self.centers.row(l));
                if d == 0.0 {
                    return Err(Error::DegenerateCenters {
                        first: r.min(l) + 1,
                        second: r.max(l) + 1,
                    });
                }
                best = best.min(d);
            }
            per_cluster[r] = Some(best);
        }
        let min = per_cluster
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Ok(CenterSeparation { per_cluster, min })
    }
}

pub(crate) fn row_distance(a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Observed bi-adjacency matrix, binary when sampled and weighted in `[0, 1]`
/// after regularization.
#[derive(Clone, Debug, PartialEq)]
pub struct BiAdjacency {
    entries: Array2<f64>,
    symmetric: bool,
}

impl BiAdjacency {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::validation("adjacency must have at least one row and column"));
        }
        if let Some(((i, j), v)) = entries
            .indexed_iter()
            .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
        {
            return Err(Error::validation(format!(
                "adjacency entry ({i}, {j}) = {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            entries,
            symmetric: false,
        })
    }

    pub fn new_symmetric(entries: Array2<f64>) -> Result<Self> {
        let mut a = Self::new(entries)?;
        if a.n_rows() != a.n_cols() {
            return Err(Error::validation("symmetric adjacency must be square"));
        }
        let e = &a.entries;
        for i in 0..e.nrows() {
            for j in (i + 1)..e.ncols() {
                if e[[i, j]] != e[[j, i]] {
                    return Err(Error::validation(format!(
                        "adjacency not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        a.symmetric = true;
        Ok(a)
    }

    pub(crate) fn from_parts_unchecked(entries: Array2<f64>, symmetric: bool) -> Self {
        Self { entries, symmetric }
    }

    pub fn n_rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> Array2<f64> {
        self.entries
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn is_binary(&self) -> bool {
        self.entries.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    pub fn row_degrees(&self) -> Array1<f64> {
        self.entries.sum_axis(Axis(1))
    }

    pub fn col_degrees(&self) -> Array1<f64> {
        self.entries.sum_axis(Axis(0))
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|&&v| v != 0.0).count()
    }

    pub fn transpose(&self) -> Self {
        Self {
            entries: self.entries.t().to_owned(),
            symmetric: self.symmetric,
        }
    }
}

/// Generative description of a (bipartite) stochastic block model.
///
/// The connectivity is given in the rescaled form `psi`; edge probabilities
/// are `B = psi / sqrt(n1 n2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub n1: usize,
    pub n2: usize,
    pub proportions_rows: Vec<f64>,
    pub proportions_cols: Vec<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub psi: Array2<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Shuffle node order so that indices carry no label information.
    #[serde(default = "default_true")]
    pub shuffle: bool,
}

fn default_true() -> bool {
    true
}

impl SbmSpec {
    /// Balanced clusters on both sides.
    pub fn balanced(n1: usize, n2: usize, psi: Array2<f64>, seed: u64) -> Self {
        let (k1, k2) = psi.dim();
        Self {
            n1,
            n2,
            proportions_rows: vec![1.0 / k1 as f64; k1],
            proportions_cols: vec![1.0 / k2 as f64; k2],
            psi,
            seed,
            shuffle: true,
        }
    }

    /// Builds the spec from edge probabilities `B` instead of `psi`.
    pub fn from_connectivity(
        n1: usize,
        n2: usize,
        proportions_rows: Vec<f64>,
        proportions_cols: Vec<f64>,
        b: &Array2<f64>,
        seed: u64,
    ) -> Self {
        let scale = ((n1 * n2) as f64).sqrt();
        Self {
            n1,
            n2,
            proportions_rows,
            proportions_cols,
            psi: b * scale,
            seed,
            shuffle: true,
        }
    }

    pub fn k1(&self) -> usize {
        self.proportions_rows.len()
    }

    pub fn k2(&self) -> usize {
        self.proportions_cols.len()
    }

    /// `min(k1, k2)`, the maximal rank of the mean matrix.
    pub fn rank(&self) -> usize {
        self.k1().min(self.k2())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::validation("n1 and n2 must be positive"));
        }
        if self.psi.dim() != (self.k1(), self.k2()) {
            return Err(Error::DimensionMismatch(format!(
                "psi is {:?} but proportions give {} x {}",
                self.psi.dim(),
                self.k1(),
                self.k2()
            )));
        }
        for (side, props) in [("row", &self.proportions_rows), ("column", &self.proportions_cols)] {
            if props.is_empty() {
                return Err(Error::validation(format!("{side} proportions are empty")));
            }
            if props.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::validation(format!("{side} proportions must be nonnegative")));
            }
            let total: f64 = props.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::validation(format!(
                    "{side} proportions sum to {total}, expected 1"
                )));
            }
        }
        for ((row, col), &value) in self.connectivity().indexed_iter() {
            if !(value.is_finite() && (0.0..=1.0).contains(&value)) {
                return Err(Error::InvalidProbability { row, col, value });
            }
        }
        for sizes in [self.row_sizes(), self.col_sizes()] {
            if let Some(t) = sizes.iter().position(|&s| s == 0) {
                return Err(Error::EmptyCluster { label: t + 1 });
            }
        }
        Ok(())
    }

    pub fn row_sizes(&self) -> Vec<usize> {
        largest_remainder(self.n1, &self.proportions_rows)
    }

    pub fn col_sizes(&self) -> Vec<usize> {
        largest_remainder(self.n2, &self.proportions_cols)
    }

    /// Edge probability matrix `B = psi / sqrt(n1 n2)`.
    pub fn connectivity(&self) -> Array2<f64> {
        &self.psi / ((self.n1 * self.n2) as f64).sqrt()
    }

    /// Degree scale `d = sqrt(n2 / n1) * max(psi)`, equal to `n2 * max(P)`.
    pub fn degree_scale(&self) -> f64 {
        let max = self.psi.iter().copied().fold(0.0, f64::max);
        (self.n2 as f64 / self.n1 as f64).sqrt() * max
    }

    /// `d_av = sum_ij pi_1i pi_2j psi_ij`.
    pub fn average_degree(&self) -> f64 {
        let mut total = 0.0;
        for (s, &p1) in self.proportions_rows.iter().enumerate() {
            for (t, &p2) in self.proportions_cols.iter().enumerate() {
                total += p1 * p2 * self.psi[[s, t]];
            }
        }
        total
    }
}

/// Sizes `n_t` with `sum n_t = n`, rounding `pi_t * n` by the largest remainder
/// rule (ties go to the lower index).
pub fn largest_remainder(n: usize, proportions: &[f64]) -> Vec<usize> {
    let raw: Vec<f64> = proportions.iter().map(|p| p * n as f64).collect();
    let mut sizes: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..proportions.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = raw[a] - raw[a].floor();
        let fb = raw[b] - raw[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &t in order.iter().take(n.saturating_sub(assigned)) {
        sizes[t] += 1;
    }
    sizes
}

/// The `k` leading singular triplets of a matrix.
#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    pub u: Array2<f64>,
    pub sigma: Array1<f64>,
    pub v: Array2<f64>,
}

impl TruncatedSvd {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        self.scaled_left().dot(&self.v.t())
    }

    /// `U diag(sigma)`, the embedding used by the reduced-rank pipelines.
    pub fn scaled_left(&self) -> Array2<f64> {
        &self.u * &self.sigma
    }

    pub fn scaled_right(&self) -> Array2<f64> {
        &self.v * &self.sigma
    }
}
