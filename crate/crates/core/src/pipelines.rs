//! End-to-end spectral clustering: regularize, truncate the SVD, run k-means
//! on an embedding of the rows (and/or columns).
//!
//! - `Sc1` clusters the rows of the left singular vectors `U`.
//! - `ScRr` clusters the rows of the rank-k matrix `U S V^T`.
//! - `ScRre` clusters the rows of `U S`, which have the same pairwise
//!   distances as those of `U S V^T` and therefore the same labels.
//! - `Subg` is `ScRre` on the raw matrix, for real-valued noisy data.

use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kmeans::{lloyd_pp, radius_cover, KMeansAlgorithm, KMeansConfig};
use crate::linalg::{
    align_orthogonal, dilate, frobenius_norm, max_principal_sine, orthonormalize, truncated_svd,
    SvdOptions,
};
use crate::models::PopulationSvd;
use crate::regularization::{
    concentration_error_block, regularize_data_driven_with, ConcentrationError, RegularizationReport,
    WeightForm, DEFAULT_TAU,
};
use crate::rng::{derive_seed, Purpose};
use crate::types::{BiAdjacency, Membership, SbmSpec, TruncatedSvd};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pipeline {
    #[serde(rename = "sc1")]
    Sc1,
    #[serde(rename = "scrr")]
    ScRr,
    #[serde(rename = "scrre")]
    ScRre,
    #[serde(rename = "subg")]
    Subg,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Sc1 => "sc1",
            Pipeline::ScRr => "scrr",
            Pipeline::ScRre => "scrre",
            Pipeline::Subg => "subg",
        }
    }
}

impl std::str::FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sc1" => Ok(Pipeline::Sc1),
            "scrr" => Ok(Pipeline::ScRr),
            "scrre" => Ok(Pipeline::ScRre),
            "subg" | "subgaussian" => Ok(Pipeline::Subg),
            _ => Err(Error::validation(format!("unknown pipeline {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterSide {
    #[default]
    Rows,
    Cols,
    Both,
}

impl ClusterSide {
    fn rows(self) -> bool {
        matches!(self, ClusterSide::Rows | ClusterSide::Both)
    }

    fn cols(self) -> bool {
        matches!(self, ClusterSide::Cols | ClusterSide::Both)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k_rows: usize,
    pub k_cols: usize,
    /// Rank of the truncated SVD; `min(k_rows, k_cols)` when absent.
    #[serde(default)]
    pub truncation_k: Option<usize>,
    /// Regularization multiplier; `inf` disables regularization.
    #[serde(default = "default_tau", with = "crate::serde_extended")]
    pub tau: f64,
    #[serde(default)]
    pub weight_form: WeightForm,
    /// Restarts, iteration cap and algorithm of the k-means step. `k` is taken
    /// from `k_rows`/`k_cols` and the seed is derived from `seed`.
    #[serde(default)]
    pub kmeans: KMeansConfig,
    #[serde(default)]
    pub side: ClusterSide,
    #[serde(default = "default_svd_tol")]
    pub svd_tol: f64,
    #[serde(default = "default_svd_max_iter")]
    pub svd_max_iter: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_svd_tol() -> f64 {
    SvdOptions::default().tol
}

fn default_svd_max_iter() -> usize {
    SvdOptions::default().max_iter
}

impl PipelineConfig {
    /// Same number of clusters on both sides, rows clustered, default settings.
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k_rows: k,
            k_cols: k,
            truncation_k: None,
            tau: DEFAULT_TAU,
            weight_form: WeightForm::L1,
            kmeans: KMeansConfig::default(),
            side: ClusterSide::Rows,
            svd_tol: default_svd_tol(),
            svd_max_iter: default_svd_max_iter(),
            seed,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_weight_form(mut self, form: WeightForm) -> Self {
        self.weight_form = form;
        self
    }

    pub fn with_side(mut self, side: ClusterSide) -> Self {
        self.side = side;
        self
    }

    pub fn rank(&self) -> usize {
        self.truncation_k.unwrap_or(self.k_rows.min(self.k_cols))
    }

    pub fn svd_options(&self) -> SvdOptions {
        SvdOptions {
            tol: self.svd_tol,
            max_iter: self.svd_max_iter,
            seed: derive_seed(self.seed, &[Purpose::SvdStart as u64]),
            ..SvdOptions::default()
        }
    }

    fn kmeans_for(&self, k: usize, side: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            seed: derive_seed(self.seed, &[Purpose::KMeans as u64, side]),
            ..self.kmeans.clone()
        }
    }

    pub fn validate(&self, n1: usize, n2: usize) -> Result<()> {
        if self.k_rows == 0 || self.k_cols == 0 {
            return Err(Error::validation("cluster counts must be positive"));
        }
        if self.k_rows > n1 || self.k_cols > n2 {
            return Err(Error::validation(format!(
                "cannot find {} x {} clusters in a {n1} x {n2} matrix",
                self.k_rows, self.k_cols
            )));
        }
        let r = self.rank();
        if r == 0 || r > n1.min(n2) {
            return Err(Error::validation(format!("truncation rank {r} is out of range")));
        }
        if !(self.tau > 0.0) {
            return Err(Error::validation("tau must be positive"));
        }
        self.kmeans.validate()
    }
}

/// Labels and k-means summary for one side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideResult {
    pub labels: Membership,
    /// Frobenius k-means objective on the embedding.
    pub objective: f64,
    /// Expected-case approximation factor of the k-means step (Lloyd only).
    pub kappa_bound: Option<f64>,
    /// Points the radius cover left unlabeled; they are attached to the
    /// nearest cluster in `labels` but count as errors in evaluations.
    pub unlabeled: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub regularize_ms: f64,
    pub svd_ms: f64,
    pub kmeans_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub pipeline: Pipeline,
    pub rows: Option<SideResult>,
    pub cols: Option<SideResult>,
    /// Retained singular values of the (regularized) matrix.
    pub spectrum: Vec<f64>,
    pub regularization: RegularizationReport,
    pub timings: Timings,
    pub config: PipelineConfig,
    pub seed: u64,
}

/// A pipeline result together with the intermediate matrices.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub result: PipelineResult,
    pub regularized: Array2<f64>,
    pub svd: TruncatedSvd,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs a graph pipeline (`Sc1`, `ScRr`, `ScRre`) on an adjacency matrix;
/// `Subg` is accepted and skips regularization.
pub fn run_pipeline(pipeline: Pipeline, a: &BiAdjacency, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let start = Instant::now();
    cfg.validate(a.n_rows(), a.n_cols())?;
    let tau = if pipeline == Pipeline::Subg { f64::INFINITY } else { cfg.tau };
    let (a_re, report) = regularize_data_driven_with(a, tau, cfg.weight_form)?;
    let regularize_ms = ms(start);
    finish(pipeline, a_re.into_entries(), report, cfg, start, regularize_ms)
}

/// The sub-Gaussian pipeline on a real-valued matrix: truncated SVD of the raw
/// data, then k-means on `U S`.
pub fn sc_subgaussian(a: ArrayView2<f64>, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let start = Instant::now();
    cfg.validate(a.nrows(), a.ncols())?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("input contains non-finite values"));
    }
    let report = RegularizationReport {
        tau: f64::INFINITY,
        mode: crate::regularization::RegularizationMode::None,
        weight_form: WeightForm::L1,
        zero_graph: false,
        alpha_row: 0,
        alpha_col: 0,
        alpha_clamped: false,
        dhat_row: f64::INFINITY,
        dhat_col: f64::INFINITY,
        trimmed_rows: Vec::new(),
        trimmed_cols: Vec::new(),
        weights_row: vec![1.0; a.nrows()],
        weights_col: vec![1.0; a.ncols()],
    };
    finish(Pipeline::Subg, a.to_owned(), report, cfg, start, 0.0)
}

pub fn sc1(a: &BiAdjacency, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    run_pipeline(Pipeline::Sc1, a, cfg)
}

pub fn sc_rr(a: &BiAdjacency, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    run_pipeline(Pipeline::ScRr, a, cfg)
}

pub fn sc_rre(a: &BiAdjacency, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    run_pipeline(Pipeline::ScRre, a, cfg)
}

fn finish(
    pipeline: Pipeline,
    a_re: Array2<f64>,
    regularization: RegularizationReport,
    cfg: &PipelineConfig,
    start: Instant,
    regularize_ms: f64,
) -> Result<PipelineOutput> {
    let t = Instant::now();
    let svd = truncated_svd(a_re.view(), cfg.rank(), &cfg.svd_options())?;
    let svd_ms = ms(t);

    let t = Instant::now();
    let embed = |left: bool| -> Array2<f64> {
        let (own, other) = if left { (&svd.u, &svd.v) } else { (&svd.v, &svd.u) };
        match pipeline {
            Pipeline::Sc1 => own.clone(),
            Pipeline::ScRr => (own * &svd.sigma).dot(&other.t()),
            Pipeline::ScRre | Pipeline::Subg => own * &svd.sigma,
        }
    };
    let rows = if cfg.side.rows() {
        Some(cluster(embed(true).view(), &cfg.kmeans_for(cfg.k_rows, 0))?)
    } else {
        None
    };
    let cols = if cfg.side.cols() {
        Some(cluster(embed(false).view(), &cfg.kmeans_for(cfg.k_cols, 1))?)
    } else {
        None
    };
    let kmeans_ms = ms(t);

    let result = PipelineResult {
        pipeline,
        rows,
        cols,
        spectrum: svd.sigma.to_vec(),
        regularization,
        timings: Timings {
            regularize_ms,
            svd_ms,
            kmeans_ms,
            total_ms: ms(start),
        },
        config: cfg.clone(),
        seed: cfg.seed,
    };
    Ok(PipelineOutput {
        result,
        regularized: a_re,
        svd,
    })
}

fn cluster(x: ArrayView2<f64>, cfg: &KMeansConfig) -> Result<SideResult> {
    match cfg.algorithm {
        KMeansAlgorithm::LloydPp => {
            let out = lloyd_pp(x, cfg)?;
            Ok(SideResult {
                labels: out.matrix.labels().clone(),
                objective: out.objective,
                kappa_bound: Some(out.kappa_bound),
                unlabeled: Vec::new(),
            })
        }
        KMeansAlgorithm::RadiusCover { rho } => {
            let cover = radius_cover(x, cfg.k, rho)?;
            let labeled: Vec<usize> = (0..x.nrows()).filter(|&i| cover.labels[i].is_some()).collect();
            let mut labels: Vec<usize> = cover.labels.iter().map(|l| l.unwrap_or(0)).collect();
            if !labeled.is_empty() {
                let sub = x.select(ndarray::Axis(0), &labeled);
                let sub_labels = Membership::new(labeled.iter().map(|&i| labels[i]).collect(), cfg.k)?;
                let means = crate::types::KMeansMatrix::from_means(sub.view(), sub_labels)?;
                let nonempty: Vec<bool> = cover.clusters.iter().map(|c| !c.is_empty()).collect();
                for &i in &cover.unlabeled {
                    let mut best = (0, f64::INFINITY);
                    for t in (0..cfg.k).filter(|&t| nonempty[t]) {
                        let d = (&x.row(i) - &means.centers().row(t)).mapv(|v| v * v).sum();
                        if d < best.1 {
                            best = (t, d);
                        }
                    }
                    labels[i] = best.0;
                }
            }
            let matrix = crate::types::KMeansMatrix::from_means(x, Membership::new(labels, cfg.k)?)?;
            Ok(SideResult {
                objective: crate::kmeans::kmeans_objective(x, &matrix)?,
                labels: matrix.labels().clone(),
                kappa_bound: None,
                unlabeled: cover.unlabeled,
            })
        }
    }
}

/// Ground truth for diagnostics: connectivity and planted memberships.
#[derive(Clone, Copy, Debug)]
pub struct Truth<'a> {
    pub connectivity: &'a Array2<f64>,
    pub rows: &'a Membership,
    pub cols: &'a Membership,
}

/// Perturbation-theory quantities of one run, each paired with its bound.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralDiagnostics {
    pub concentration: ConcentrationError,
    /// `sigma_{k+1}(A_re)`, at most `||A_re - P||` by Weyl's inequality.
    pub sigma_next: f64,
    /// `||A_re^(k) - P||_F`.
    pub truncation_error: f64,
    /// `2 sqrt(2k) ||A_re - P||`.
    pub truncation_bound: f64,
    /// `min_Q ||U - Z1bar U_psi Q||_F`.
    pub alignment_error: f64,
    /// `(2 sqrt(2k) / sigma_k(P)) ||A_re - P||`.
    pub alignment_bound: f64,
    pub population_sigma_k: f64,
}

impl SpectralDiagnostics {
    pub fn weyl_holds(&self) -> bool {
        self.sigma_next <= self.concentration.abs * (1.0 + 1e-9)
    }

    pub fn truncation_holds(&self) -> bool {
        self.truncation_error <= self.truncation_bound * (1.0 + 1e-9)
    }

    pub fn alignment_holds(&self) -> bool {
        self.alignment_error <= self.alignment_bound * (1.0 + 1e-9)
    }
}

/// Compares a run against the population mean `P = Z1 B Z2^T`. Requires the
/// truncation rank to equal the rank of `P`, i.e. `min(k1, k2)`.
pub fn spectral_diagnostics(
    a_re: ArrayView2<f64>,
    svd: &TruncatedSvd,
    truth: Truth<'_>,
    opts: &SvdOptions,
) -> Result<SpectralDiagnostics> {
    let k = svd.k();
    let pop = PopulationSvd::new(truth.connectivity, truth.rows, truth.cols)?;
    if pop.sigma.len() != k {
        return Err(Error::validation(format!(
            "truncation rank {k} differs from the population rank {}",
            pop.sigma.len()
        )));
    }
    let concentration = concentration_error_block(a_re, truth.connectivity, truth.rows, truth.cols)?;
    let (n1, n2) = a_re.dim();
    let sigma_next = if k < n1.min(n2) {
        truncated_svd(a_re, k + 1, opts)?.sigma[k]
    } else {
        0.0
    };
    let p = crate::models::block_mean(truth.connectivity, truth.rows, truth.cols);
    let truncation_error = frobenius_norm((&svd.reconstruct() - &p).view());
    let factor = 2.0 * (2.0 * k as f64).sqrt();
    let (_, alignment_error) = align_orthogonal(svd.u.view(), pop.left.view());
    Ok(SpectralDiagnostics {
        truncation_bound: factor * concentration.abs,
        alignment_bound: factor / pop.sigma_k() * concentration.abs,
        population_sigma_k: pop.sigma_k(),
        concentration,
        sigma_next,
        truncation_error,
        alignment_error,
    })
}

/// Sine of the largest angle between the left singular subspace of the SVD
/// path and the one recovered from the top eigenvectors of the dilation.
pub fn dilation_subspace_gap(a: ArrayView2<f64>, svd: &TruncatedSvd, opts: &SvdOptions) -> Result<f64> {
    let (_, vecs) = dilate(a).top_eigenpairs(svd.k(), opts)?;
    let mut upper = vecs.slice(ndarray::s![..a.nrows(), ..]).to_owned();
    orthonormalize(&mut upper);
    Ok(max_principal_sine(svd.u.view(), upper.view()))
}

/// Incoherence `1 - max_{|I| = 2} ||(U U^T - I)_I||` of a `k1 x k` orthonormal basis.
pub fn incoherence_from_basis(u: ArrayView2<f64>) -> f64 {
    let g = u.dot(&u.t());
    let k1 = g.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..k1 {
        for j in (i + 1)..k1 {
            let (a, b, c) = (g[[i, i]] - 1.0, g[[i, j]], g[[j, j]] - 1.0);
            // eigenvalues of the symmetric 2x2 block [[a, b], [b, c]]
            let mean = 0.5 * (a + c);
            let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            worst = worst.max((mean + radius).abs()).max((mean - radius).abs());
        }
    }
    (1.0 - worst).clamp(0.0, 1.0)
}

/// Incoherence of the left singular basis of `N1^{1/2} B N2^{1/2}`.
pub fn incoherence_rho1(spec: &SbmSpec) -> Result<f64> {
    let pop = crate::models::population_svd(spec)?;
    Ok(incoherence_from_basis(pop.u_psi.view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::misclassification;
    use crate::models::{planted_partition, sample_sbm};
    use ndarray::array;

    fn noiseless(spec: &SbmSpec) -> (BiAdjacency, Membership, Membership) {
        let s = sample_sbm(&SbmSpec {
            psi: Array2::zeros(spec.psi.dim()),
            ..spec.clone()
        })
        .unwrap();
        let p = s.mean(spec);
        (BiAdjacency::new(p).unwrap(), s.rows, s.cols)
    }

    #[test]
    fn noiseless_input_is_recovered_exactly() {
        let spec = SbmSpec::balanced(60, 90, array![[6.0, 1.0, 1.0], [1.0, 6.0, 1.0], [1.0, 1.0, 6.0]] * 5.0, 3);
        let (p, rows, cols) = noiseless(&spec);
        let cfg = PipelineConfig::new(3, 1).with_side(ClusterSide::Both).with_tau(f64::INFINITY);
        for pipeline in [Pipeline::Sc1, Pipeline::ScRr, Pipeline::ScRre, Pipeline::Subg] {
            let out = run_pipeline(pipeline, &p, &cfg).unwrap().result;
            let r = out.rows.unwrap();
            let c = out.cols.unwrap();
            assert_eq!(misclassification(&rows, &r.labels).unwrap().mis_bar, 0.0, "{pipeline:?}");
            assert_eq!(misclassification(&cols, &c.labels).unwrap().mis_bar, 0.0, "{pipeline:?}");
        }
    }

    #[test]
    fn one_sided_column_clustering() {
        // every row its own cluster on side 1; three distinct column profiles
        let n1 = 12;
        let col_labels: Vec<usize> = (0..30).map(|j| j % 3).collect();
        let b = Array2::from_shape_fn((n1, 3), |(i, t)| 0.1 + 0.05 * ((i * 7 + t * 3) % 11) as f64);
        let rows = Membership::new((0..n1).collect(), n1).unwrap();
        let cols = Membership::new(col_labels, 3).unwrap();
        let p = crate::models::block_mean(&b, &rows, &cols);
        let mut cfg = PipelineConfig::new(3, 5).with_side(ClusterSide::Cols).with_tau(f64::INFINITY);
        cfg.k_rows = n1;
        cfg.k_cols = 3;
        let out = sc_rre(&BiAdjacency::new(p).unwrap(), &cfg).unwrap().result;
        assert_eq!(misclassification(&cols, &out.cols.unwrap().labels).unwrap().mis_bar, 0.0);
    }

    #[test]
    fn reduced_and_full_rank_embeddings_agree() {
        for seed in 0..4 {
            let spec = SbmSpec::balanced(150, 200, planted_partition(3, 6.0, 1.0) * 6.0, seed);
            let s = sample_sbm(&spec).unwrap();
            let cfg = PipelineConfig::new(3, seed);
            let a = sc_rr(&s.adjacency, &cfg).unwrap().result.rows.unwrap();
            let b = sc_rre(&s.adjacency, &cfg).unwrap().result.rows.unwrap();
            assert_eq!(misclassification(&a.labels, &b.labels).unwrap().mis_bar, 0.0);
        }
    }

    #[test]
    fn permuting_nodes_permutes_labels() {
        let spec = SbmSpec::balanced(120, 160, planted_partition(3, 6.0, 1.0) * 8.0, 2);
        let s = sample_sbm(&spec).unwrap();
        let cfg = PipelineConfig::new(3, 4);
        let base = sc_rre(&s.adjacency, &cfg).unwrap().result.rows.unwrap().labels;
        let perm: Vec<usize> = (0..120).map(|i| (i * 37) % 120).collect();
        let permuted = s.adjacency.entries().select(ndarray::Axis(0), &perm);
        let out = sc_rre(&BiAdjacency::new(permuted).unwrap(), &cfg).unwrap().result.rows.unwrap().labels;
        // node j of the permuted run is node perm[j] of the original
        assert_eq!(misclassification(&base.reindexed(&perm), &out).unwrap().mis_bar, 0.0);
    }

    #[test]
    fn infinite_tau_disables_regularization() {
        let spec = SbmSpec::balanced(50, 50, planted_partition(2, 6.0, 1.0), 1);
        let s = sample_sbm(&spec).unwrap();
        let out = sc1(&s.adjacency, &PipelineConfig::new(2, 0).with_tau(f64::INFINITY)).unwrap();
        assert_eq!(out.result.regularization.mode, crate::regularization::RegularizationMode::None);
        assert_eq!(&out.regularized, s.adjacency.entries());
        let json = serde_json::to_value(&out.result).unwrap();
        assert_eq!(json["config"]["tau"], "inf");
        assert_eq!(json["pipeline"], "sc1");
    }

    #[test]
    fn dilation_and_svd_paths_span_the_same_subspace() {
        let spec = SbmSpec::balanced(80, 100, planted_partition(3, 6.0, 1.0) * 6.0, 7);
        let s = sample_sbm(&spec).unwrap();
        let out = sc1(&s.adjacency, &PipelineConfig::new(3, 0)).unwrap();
        let gap = dilation_subspace_gap(out.regularized.view(), &out.svd, &SvdOptions::default()).unwrap();
        assert!(gap < 1e-6, "{gap}");
    }

    #[test]
    fn incoherence_examples() {
        let square = array![[0.6, 0.8], [-0.8, 0.6]];
        assert!((incoherence_from_basis(square.view()) - 1.0).abs() < 1e-12);
        let s = 0.5f64.sqrt();
        let repeated = array![[s], [s], [0.0]];
        assert!(incoherence_from_basis(repeated.view()).abs() < 1e-12);
        let spec = SbmSpec::balanced(
            40,
            40,
            array![[5.0, 1.0], [1.0, 5.0], [3.0, 2.0], [2.0, 4.0]],
            0,
        );
        let rho = incoherence_rho1(&spec).unwrap();
        assert!(rho > 0.0 && rho < 1.0, "{rho}");
    }

    #[test]
    fn pipeline_names_parse() {
        for p in [Pipeline::Sc1, Pipeline::ScRr, Pipeline::ScRre, Pipeline::Subg] {
            assert_eq!(p.name().parse::<Pipeline>().unwrap(), p);
        }
        assert!("sc9".parse::<Pipeline>().is_err());
    }
}
