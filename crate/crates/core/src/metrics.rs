//! Clustering quality: permutation-matched misclassification rates and NMI.

use ndarray::Array2;
use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{KMeansMatrix, Membership};

/// Largest side for which label matching enumerates all permutations.
pub const EXHAUSTIVE_MAX: usize = 8;

/// Co-occurrence counts of two labelings, zero-padded to a square matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Array2<usize>,
    n: usize,
}

impl ConfusionMatrix {
    /// Rows index the labels of `z`, columns those of `z_prime`.
    pub fn new(z: &Membership, z_prime: &Membership) -> Result<Self> {
        check_lengths(z.len(), z_prime.len())?;
        let m = z.k().max(z_prime.k());
        let mut counts = Array2::zeros((m, m));
        for (&a, &b) in z.labels().iter().zip(z_prime.labels()) {
            counts[[a, b]] += 1;
        }
        Ok(Self { counts, n: z.len() })
    }

    /// Wraps raw counts, padding with zeros to a square matrix.
    pub fn from_counts(raw: &Array2<usize>) -> Self {
        let m = raw.nrows().max(raw.ncols());
        let mut counts = Array2::zeros((m, m));
        counts.slice_mut(ndarray::s![..raw.nrows(), ..raw.ncols()]).assign(raw);
        let n = counts.sum();
        Self { counts, n }
    }

    pub fn counts(&self) -> &Array2<usize> {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn size(&self) -> usize {
        self.counts.nrows()
    }

    /// `sum_r counts[r, perm[r]]`.
    pub fn matched(&self, perm: &[usize]) -> usize {
        perm.iter().enumerate().map(|(r, &c)| self.counts[[r, c]]).sum()
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!(
            "labelings cover {a} and {b} nodes"
        )));
    }
    Ok(())
}

/// Permutation `perm` (row `r` matched to column `perm[r]`) maximizing the
/// matched count: exhaustive search up to [`EXHAUSTIVE_MAX`] labels, an
/// optimal assignment solver above.
pub fn permutation_match(c: &ConfusionMatrix) -> Vec<usize> {
    if c.size() <= EXHAUSTIVE_MAX {
        permutation_match_exhaustive(c)
    } else {
        permutation_match_assignment(c)
    }
}

/// Enumerates permutations in lexicographic order; the first optimum wins.
pub fn permutation_match_exhaustive(c: &ConfusionMatrix) -> Vec<usize> {
    fn search(
        c: &Array2<usize>,
        row: usize,
        used: &mut [bool],
        current: &mut Vec<usize>,
        score: usize,
        best: &mut (usize, Vec<usize>),
    ) {
        let m = c.nrows();
        if row == m {
            if score > best.0 || best.1.is_empty() {
                *best = (score, current.clone());
            }
            return;
        }
        for col in 0..m {
            if !used[col] {
                used[col] = true;
                current.push(col);
                search(c, row + 1, used, current, score + c[[row, col]], best);
                current.pop();
                used[col] = false;
            }
        }
    }
    let m = c.size();
    let mut best = (0, Vec::new());
    search(c.counts(), 0, &mut vec![false; m], &mut Vec::with_capacity(m), 0, &mut best);
    best.1
}

/// Hungarian-method assignment.
pub fn permutation_match_assignment(c: &ConfusionMatrix) -> Vec<usize> {
    if c.size() == 0 {
        return Vec::new();
    }
    let weights = Matrix::from_rows(
        c.counts()
            .outer_iter()
            .map(|row| row.iter().map(|&v| v as i64).collect::<Vec<_>>()),
    )
    .expect("confusion matrix rows have equal length");
    kuhn_munkres(&weights).1
}

/// Permutation-minimized misclassification rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Misclassification {
    /// Fraction of all nodes misclassified.
    pub mis_bar: f64,
    /// Fraction misclassified within each cluster of the reference labeling
    /// (0 for empty clusters).
    pub per_cluster: Vec<f64>,
    /// Worst nonempty cluster.
    pub mis_inf: f64,
    /// Reference label `r` is matched to estimated label `permutation[r]`.
    pub permutation: Vec<usize>,
}

fn rates(c: &ConfusionMatrix, sizes: &[usize], n: usize) -> Misclassification {
    let perm = permutation_match(c);
    let matched = c.matched(&perm);
    let per_cluster: Vec<f64> = sizes
        .iter()
        .enumerate()
        .map(|(r, &nr)| {
            if nr == 0 {
                0.0
            } else {
                1.0 - c.counts()[[r, perm[r]]] as f64 / nr as f64
            }
        })
        .collect();
    let mis_inf = sizes
        .iter()
        .zip(&per_cluster)
        .filter(|(&nr, _)| nr > 0)
        .map(|(_, &m)| m)
        .fold(0.0, f64::max);
    let mis_bar = if n == 0 { 0.0 } else { 1.0 - matched as f64 / n as f64 };
    debug_assert!({
        let weighted: f64 = sizes.iter().zip(&per_cluster).map(|(&nr, m)| nr as f64 * m).sum();
        n == 0 || (weighted / n as f64 - mis_bar).abs() < 1e-12
    });
    Misclassification {
        mis_bar,
        per_cluster,
        mis_inf,
        permutation: perm,
    }
}

/// Misclassification of `z_prime` relative to the reference `z`.
pub fn misclassification(z: &Membership, z_prime: &Membership) -> Result<Misclassification> {
    let c = ConfusionMatrix::new(z, z_prime)?;
    let mut sizes = z.cluster_sizes();
    sizes.resize(c.size(), 0);
    let mut out = rates(&c, &sizes, z.len());
    out.per_cluster.truncate(z.k());
    Ok(out)
}

/// As [`misclassification`], with unlabeled estimates (`None`) counted as errors.
pub fn misclassification_partial(
    z: &Membership,
    estimate: &[Option<usize>],
    k: usize,
) -> Result<Misclassification> {
    check_lengths(z.len(), estimate.len())?;
    let m = z.k().max(k);
    let mut counts = Array2::zeros((m, m));
    for (&a, b) in z.labels().iter().zip(estimate) {
        if let Some(b) = *b {
            if b >= k {
                return Err(Error::validation(format!("estimated label {} exceeds k = {k}", b + 1)));
            }
            counts[[a, b]] += 1;
        }
    }
    let c = ConfusionMatrix { counts, n: z.len() };
    let mut sizes = z.cluster_sizes();
    sizes.resize(m, 0);
    let mut out = rates(&c, &sizes, z.len());
    out.per_cluster.truncate(z.k());
    Ok(out)
}

pub fn misclassification_kmeans(x: &KMeansMatrix, x_prime: &KMeansMatrix) -> Result<Misclassification> {
    misclassification(x.labels(), x_prime.labels())
}

/// Normalized mutual information `I / sqrt(H H')` (natural logarithms).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Nmi {
    pub value: f64,
    /// Set when one labeling has zero entropy; `value` is then 0.
    pub degenerate: bool,
}

pub fn nmi(z: &Membership, z_prime: &Membership) -> Result<Nmi> {
    let c = ConfusionMatrix::new(z, z_prime)?;
    let n = z.len() as f64;
    let counts = c.counts();
    let row: Vec<f64> = counts.outer_iter().map(|r| r.sum() as f64).collect();
    let col: Vec<f64> = counts.columns().into_iter().map(|c| c.sum() as f64).collect();
    let entropy = |v: &[f64]| -> f64 {
        v.iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| {
                let p = x / n;
                -p * p.ln()
            })
            .sum()
    };
    let (h1, h2) = (entropy(&row), entropy(&col));
    if h1 <= 0.0 || h2 <= 0.0 {
        return Ok(Nmi {
            value: 0.0,
            degenerate: true,
        });
    }
    let mut mutual = 0.0;
    for ((a, b), &cnt) in counts.indexed_iter() {
        if cnt > 0 {
            let pab = cnt as f64 / n;
            mutual += pab * (pab * n * n / (row[a] * col[b])).ln();
        }
    }
    Ok(Nmi {
        value: (mutual / (h1 * h2).sqrt()).clamp(0.0, 1.0),
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn m(labels: &[usize], k: usize) -> Membership {
        Membership::from_one_based(labels, k).unwrap()
    }

    #[test]
    fn misclassification_examples() {
        let z = m(&[1, 1, 2, 2], 2);
        assert_eq!(misclassification(&z, &z).unwrap().mis_bar, 0.0);
        assert_eq!(misclassification(&z, &m(&[2, 2, 1, 1], 2)).unwrap().mis_bar, 0.0);
        let r = misclassification(&z, &m(&[1, 2, 2, 2], 2)).unwrap();
        assert_eq!(r.mis_bar, 0.25);
        assert_eq!(r.per_cluster, vec![0.5, 0.0]);
        assert_eq!(r.mis_inf, 0.5);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert!(matches!(
            misclassification(&m(&[1, 2], 2), &m(&[1], 2)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn unequal_cluster_counts_are_padded() {
        let z = m(&[1, 1, 2, 2, 3, 3], 3);
        let r = misclassification(&z, &m(&[1, 1, 1, 1, 2, 2], 2)).unwrap();
        assert!((r.mis_bar - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.per_cluster.len(), 3);
    }

    #[test]
    fn unlabeled_points_count_as_errors() {
        let z = m(&[1, 1, 2, 2], 2);
        let r = misclassification_partial(&z, &[Some(1), None, Some(0), Some(0)], 2).unwrap();
        assert_eq!(r.mis_bar, 0.25);
        assert_eq!(r.per_cluster, vec![0.5, 0.0]);
    }

    #[test]
    fn kmeans_delegation() {
        let x = KMeansMatrix::new(m(&[1, 1, 2, 2], 2), array![[0.0], [1.0]]).unwrap();
        let y = KMeansMatrix::new(m(&[1, 2, 2, 2], 2), array![[5.0], [7.0]]).unwrap();
        assert_eq!(misclassification_kmeans(&x, &y).unwrap().mis_bar, 0.25);
        assert_eq!(misclassification_kmeans(&x, &x).unwrap().mis_bar, 0.0);
    }

    #[test]
    fn matching_examples() {
        let diag = ConfusionMatrix::from_counts(&array![[5, 1, 0], [0, 4, 1], [1, 0, 6]]);
        assert_eq!(permutation_match(&diag), vec![0, 1, 2]);
        let anti = ConfusionMatrix::from_counts(&array![[0, 0, 5], [0, 5, 0], [5, 0, 0]]);
        assert_eq!(permutation_match(&anti), vec![2, 1, 0]);
    }

    #[test]
    fn exhaustive_and_assignment_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let k = rng.random_range(1..=6);
            let raw = Array2::from_shape_simple_fn((k, k), || rng.random_range(0..30usize));
            let c = ConfusionMatrix::from_counts(&raw);
            let a = permutation_match_exhaustive(&c);
            let b = permutation_match_assignment(&c);
            assert_eq!(c.matched(&a), c.matched(&b));
        }
    }

    #[test]
    fn nmi_examples() {
        let z = m(&[1, 1, 2, 2, 3], 3);
        assert!((nmi(&z, &z).unwrap().value - 1.0).abs() < 1e-12);
        assert!((nmi(&z, &m(&[3, 3, 1, 1, 2], 3)).unwrap().value - 1.0).abs() < 1e-12);
        let flat = nmi(&z, &m(&[1, 1, 1, 1, 1], 1)).unwrap();
        assert_eq!(flat, Nmi { value: 0.0, degenerate: true });
    }

    #[test]
    fn nmi_of_independent_labels_is_small() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let n = 10_000;
        let a = Membership::new((0..n).map(|_| rng.random_range(0..4)).collect(), 4).unwrap();
        let b = Membership::new((0..n).map(|_| rng.random_range(0..4)).collect(), 4).unwrap();
        assert!(nmi(&a, &b).unwrap().value <= 0.01);
    }

    #[test]
    fn nmi_grows_as_partition_is_refined_toward_truth() {
        let truth = m(&[1, 1, 2, 2, 3, 3, 4, 4], 4);
        let coarse = m(&[1, 1, 1, 1, 1, 1, 2, 2], 2);
        let finer = m(&[1, 1, 1, 1, 2, 2, 3, 3], 3);
        let a = nmi(&truth, &coarse).unwrap().value;
        let b = nmi(&truth, &finer).unwrap().value;
        let c = nmi(&truth, &truth).unwrap().value;
        assert!(a <= b && b <= c);
    }

    fn labels(n: usize, k: usize) -> impl Strategy<Value = Membership> {
        proptest::collection::vec(0..k, n).prop_map(move |l| Membership::new(l, k).unwrap())
    }

    proptest! {
        #[test]
        fn mis_is_a_pseudometric(a in labels(12, 3), b in labels(12, 3), c in labels(12, 3)) {
            let ab = misclassification(&a, &b).unwrap().mis_bar;
            let ba = misclassification(&b, &a).unwrap().mis_bar;
            let bc = misclassification(&b, &c).unwrap().mis_bar;
            let ac = misclassification(&a, &c).unwrap().mis_bar;
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
        }

        #[test]
        fn mis_ignores_relabeling(a in labels(15, 4), b in labels(15, 4), shift in 0usize..4) {
            let relabeled = Membership::new(b.labels().iter().map(|&l| (l + shift) % 4).collect(), 4).unwrap();
            let x = misclassification(&a, &b).unwrap();
            let y = misclassification(&a, &relabeled).unwrap();
            prop_assert!((x.mis_bar - y.mis_bar).abs() < 1e-12);
            prop_assert!(x.mis_bar <= 1.0 - 1.0 / 4.0 + 1e-12);
            let weighted: f64 = a.cluster_sizes().iter().zip(&x.per_cluster).map(|(&n, m)| n as f64 * m).sum();
            prop_assert!((weighted / 15.0 - x.mis_bar).abs() < 1e-12);
            let n1 = nmi(&a, &b).unwrap().value;
            let n2 = nmi(&relabeled, &a).unwrap().value;
            prop_assert!((n1 - n2).abs() < 1e-12);
        }
    }
}
