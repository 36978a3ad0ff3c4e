//! Replicated simulation sweeps: two fixed block-model designs (`fig1_*`,
//! `fig2_*`) plus a generic parameter sweep, run on a worker pool with
//! per-replicate random streams.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{array, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kmeans::KMeansConfig;
use crate::metrics::{misclassification, misclassification_partial, nmi};
use crate::models::{sample_graphon, sample_sbm, sample_subgaussian, GraphonSpec, SubGaussianSpec};
use crate::pipelines::{run_pipeline, sc_subgaussian, ClusterSide, Pipeline, PipelineConfig, SideResult};
use crate::regularization::{
    concentration_error_block, regularize_capped_with, regularize_data_driven_with, OracleCaps,
    WeightForm, DEFAULT_TAU,
};
use crate::rng::derive_seed;
use crate::types::{BiAdjacency, Membership, SbmSpec};

/// Default `b` grid of the unequal-diagonal design.
pub const FIG1_B_GRID: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
/// Default `n0` grid of the sparse 3 x 4 design.
pub const FIG2_N0_GRID: [f64; 6] = [50.0, 100.0, 200.0, 300.0, 400.0, 500.0];

/// Unequal-diagonal design: `n2 = 2 n1 = 1000`, four balanced clusters per side,
/// `psi = 2b 1 1^T + diag(16, 16, 16, 2)`.
pub fn fig1_spec(b: f64, seed: u64) -> SbmSpec {
    let psi = Array2::from_elem((4, 4), 2.0 * b) + Array2::from_diag(&array![16.0, 16.0, 16.0, 2.0]);
    SbmSpec::balanced(500, 1000, psi, seed)
}

/// Sparse 3 x 4 design: `n1 = 3 n0`, `n2 = 4 n0`, balanced, and
/// `B = sqrt(log(n1 n2) / (n1 n2)) B0` with `B0 = [[6,1,1,1],[1,6,1,1],[1,1,6,1]] / 2`.
pub fn fig2_spec(n0: usize, seed: u64) -> SbmSpec {
    let b0 = array![[6.0, 1.0, 1.0, 1.0], [1.0, 6.0, 1.0, 1.0], [1.0, 1.0, 6.0, 1.0]] * 0.5;
    let (n1, n2) = (3 * n0, 4 * n0);
    let nn = (n1 * n2) as f64;
    let b = b0 * (nn.ln() / nn).sqrt();
    SbmSpec::from_connectivity(n1, n2, vec![1.0 / 3.0; 3], vec![0.25; 4], &b, seed)
}

/// A model whose parameters a custom sweep varies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelTemplate {
    Sbm(SbmSpec),
    SubGaussian(SubGaussianSpec),
    Graphon(GraphonSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Multiplies `psi` (or the mean matrix, or the graphon blocks).
    PsiScale,
    /// Noise level of a sub-Gaussian model.
    NoiseSigma,
    /// Number of rows; columns scale along (graphons are square).
    N,
    /// Regularization multiplier of every pipeline.
    Tau,
}

impl SweepParameter {
    fn name(self) -> &'static str {
        match self {
            SweepParameter::PsiScale => "psi_scale",
            SweepParameter::NoiseSigma => "noise_sigma",
            SweepParameter::N => "n",
            SweepParameter::Tau => "tau",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExperimentKind {
    #[serde(rename = "fig1_nmi_vs_b")]
    Fig1NmiVsB {
        #[serde(default = "default_b_grid")]
        b_grid: Vec<f64>,
    },
    #[serde(rename = "fig2_nmi_vs_n0")]
    Fig2NmiVsN0 {
        #[serde(default = "default_n0_grid")]
        n0_grid: Vec<usize>,
    },
    #[serde(rename = "fig2_concentration_vs_tau")]
    Fig2ConcentrationVsTau {
        #[serde(default = "default_concentration_n0")]
        n0: usize,
        #[serde(default = "default_concentration_taus", with = "crate::serde_extended::vec")]
        tau_grid: Vec<f64>,
    },
    CustomSweep {
        model: ModelTemplate,
        parameter: SweepParameter,
        values: Vec<f64>,
    },
}

fn default_b_grid() -> Vec<f64> {
    FIG1_B_GRID.to_vec()
}

fn default_n0_grid() -> Vec<usize> {
    FIG2_N0_GRID.iter().map(|&v| v as usize).collect()
}

fn default_concentration_n0() -> usize {
    500
}

fn default_concentration_taus() -> Vec<f64> {
    vec![1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0]
}

/// One clustering method applied at every sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineRun {
    /// Label in the output; the pipeline name when absent.
    #[serde(default)]
    pub name: Option<String>,
    pub pipeline: Pipeline,
    #[serde(default = "default_tau", with = "crate::serde_extended")]
    pub tau: f64,
    #[serde(default)]
    pub weight_form: WeightForm,
    /// Side that is clustered and evaluated (`rows` or `cols`).
    #[serde(default)]
    pub side: ClusterSide,
    #[serde(default)]
    pub kmeans: KMeansConfig,
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

impl PipelineRun {
    pub fn new(pipeline: Pipeline, tau: f64) -> Self {
        Self {
            name: None,
            pipeline,
            tau,
            weight_form: WeightForm::L1,
            side: ClusterSide::Rows,
            kmeans: KMeansConfig::default(),
        }
    }

    pub fn with_weight_form(mut self, form: WeightForm) -> Self {
        self.weight_form = form;
        self
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.pipeline.name().to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub kind: ExperimentKind,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Methods to run; each kind has its own default set when empty.
    #[serde(default)]
    pub pipelines: Vec<PipelineRun>,
    /// Weight form of the regularization curves in the concentration kind.
    #[serde(default = "default_concentration_form")]
    pub concentration_weight_form: WeightForm,
    #[serde(default)]
    pub master_seed: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_replicates() -> usize {
    15
}

fn default_concentration_form() -> WeightForm {
    WeightForm::L2
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind, replicates: usize, master_seed: u64) -> Self {
        Self {
            kind,
            replicates,
            pipelines: Vec::new(),
            concentration_weight_form: default_concentration_form(),
            master_seed,
            workers: None,
            output_dir: None,
        }
    }

    /// The configured methods, or the kind's default set.
    pub fn runs(&self) -> Vec<PipelineRun> {
        if !self.pipelines.is_empty() {
            return self.pipelines.clone();
        }
        match &self.kind {
            ExperimentKind::Fig1NmiVsB { .. } => vec![
                PipelineRun::new(Pipeline::Sc1, DEFAULT_TAU),
                PipelineRun::new(Pipeline::ScRre, DEFAULT_TAU),
            ],
            ExperimentKind::Fig2NmiVsN0 { .. } => [1.0, 1.2, 1.4, f64::INFINITY]
                .into_iter()
                .map(|tau| PipelineRun::new(Pipeline::ScRre, tau).with_weight_form(WeightForm::L2))
                .collect(),
            ExperimentKind::Fig2ConcentrationVsTau { .. } => Vec::new(),
            ExperimentKind::CustomSweep { model, .. } => match model {
                ModelTemplate::SubGaussian(_) => vec![PipelineRun::new(Pipeline::Subg, f64::INFINITY)],
                _ => vec![PipelineRun::new(Pipeline::ScRre, DEFAULT_TAU)],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::validation("replicates must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Error::validation("workers must be at least 1"));
        }
        let empty = match &self.kind {
            ExperimentKind::Fig1NmiVsB { b_grid } => b_grid.is_empty(),
            ExperimentKind::Fig2NmiVsN0 { n0_grid } => n0_grid.is_empty(),
            ExperimentKind::Fig2ConcentrationVsTau { tau_grid, .. } => tau_grid.is_empty(),
            ExperimentKind::CustomSweep { values, .. } => values.is_empty(),
        };
        if empty {
            return Err(Error::validation("the sweep grid is empty"));
        }
        if let ExperimentKind::Fig2ConcentrationVsTau { tau_grid, .. } = &self.kind {
            if tau_grid.iter().any(|t| !(*t > 0.0)) {
                return Err(Error::validation("tau values must be positive"));
            }
        }
        let runs = self.runs();
        let mut keys: Vec<(String, u64)> = runs.iter().map(|r| (r.label(), r.tau.to_bits())).collect();
        keys.sort();
        keys.dedup();
        if keys.len() != runs.len() {
            return Err(Error::validation("pipelines must differ in name or tau"));
        }
        for r in &runs {
            if r.side == ClusterSide::Both {
                return Err(Error::validation("evaluate one side per pipeline entry"));
            }
        }
        for (i, point) in self.points()?.iter().enumerate() {
            point
                .model
                .validate()
                .map_err(|e| Error::validation(format!("sweep point {i}: {e}")))?;
        }
        Ok(())
    }

    /// Expands the grid into concrete sweep points.
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        Ok(match &self.kind {
            ExperimentKind::Fig1NmiVsB { b_grid } => b_grid
                .iter()
                .map(|&b| SweepPoint::new("b", b, Model::Sbm(fig1_spec(b, 0))))
                .collect(),
            ExperimentKind::Fig2NmiVsN0 { n0_grid } => n0_grid
                .iter()
                .map(|&n0| SweepPoint::new("n0", n0 as f64, Model::Sbm(fig2_spec(n0, 0))))
                .collect(),
            ExperimentKind::Fig2ConcentrationVsTau { n0, .. } => {
                vec![SweepPoint::new("n0", *n0 as f64, Model::Sbm(fig2_spec(*n0, 0)))]
            }
            ExperimentKind::CustomSweep {
                model,
                parameter,
                values,
            } => values
                .iter()
                .map(|&v| Ok(SweepPoint::new(parameter.name(), v, apply(model, *parameter, v)?)))
                .collect::<Result<_>>()?,
        })
    }
}

fn apply(template: &ModelTemplate, parameter: SweepParameter, v: f64) -> Result<Model> {
    let count = |v: f64| -> Result<usize> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::validation(format!("n = {v} is not a positive integer")))
        }
    };
    let scale_cols = |n1: usize, n2: usize, new: usize| ((new as f64) * n2 as f64 / n1 as f64).round().max(1.0) as usize;
    Ok(match (template, parameter) {
        (_, SweepParameter::Tau) => Model::from_template(template.clone()),
        (ModelTemplate::Sbm(s), SweepParameter::PsiScale) => Model::Sbm(SbmSpec {
            psi: &s.psi * v,
            ..s.clone()
        }),
        (ModelTemplate::SubGaussian(s), SweepParameter::PsiScale) => Model::SubGaussian(SubGaussianSpec {
            b: &s.b * v,
            ..s.clone()
        }),
        (ModelTemplate::Graphon(g), SweepParameter::PsiScale) => Model::Graphon(GraphonSpec {
            psi_block: &g.psi_block * v,
            ..g.clone()
        }),
        (ModelTemplate::SubGaussian(s), SweepParameter::NoiseSigma) => Model::SubGaussian(SubGaussianSpec {
            noise_sigma: v,
            ..s.clone()
        }),
        (_, SweepParameter::NoiseSigma) => {
            return Err(Error::validation("noise_sigma only applies to sub-Gaussian models"))
        }
        (ModelTemplate::Sbm(s), SweepParameter::N) => {
            let n1 = count(v)?;
            Model::Sbm(SbmSpec {
                n1,
                n2: scale_cols(s.n1, s.n2, n1),
                ..s.clone()
            })
        }
        (ModelTemplate::SubGaussian(s), SweepParameter::N) => {
            let n1 = count(v)?;
            Model::SubGaussian(SubGaussianSpec {
                n1,
                n2: scale_cols(s.n1, s.n2, n1),
                ..s.clone()
            })
        }
        (ModelTemplate::Graphon(g), SweepParameter::N) => Model::Graphon(GraphonSpec {
            n: count(v)?,
            ..g.clone()
        }),
    })
}

/// A concrete model; its seed is replaced per replicate.
#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Sbm(SbmSpec),
    SubGaussian(SubGaussianSpec),
    Graphon(GraphonSpec),
}

impl Model {
    fn from_template(t: ModelTemplate) -> Self {
        match t {
            ModelTemplate::Sbm(s) => Model::Sbm(s),
            ModelTemplate::SubGaussian(s) => Model::SubGaussian(s),
            ModelTemplate::Graphon(g) => Model::Graphon(g),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Model::Sbm(s) => s.validate(),
            Model::SubGaussian(s) => s.validate(),
            Model::Graphon(g) => g.validate(),
        }
    }

    fn dims(&self) -> (usize, usize) {
        match self {
            Model::Sbm(s) => (s.n1, s.n2),
            Model::SubGaussian(s) => (s.n1, s.n2),
            Model::Graphon(g) => (g.n, g.n),
        }
    }

    fn ks(&self) -> (usize, usize) {
        match self {
            Model::Sbm(s) => (s.k1(), s.k2()),
            Model::SubGaussian(s) => s.b.dim(),
            Model::Graphon(g) => g.psi_block.dim(),
        }
    }

    fn sample(&self, seed: u64) -> Result<Sample> {
        Ok(match self {
            Model::Sbm(s) => {
                let spec = SbmSpec { seed, ..s.clone() };
                let out = sample_sbm(&spec)?;
                Sample::Graph {
                    adjacency: out.adjacency,
                    rows: out.rows,
                    cols: out.cols,
                    connectivity: Some(spec.connectivity()),
                }
            }
            Model::Graphon(g) => {
                let out = sample_graphon(&GraphonSpec { seed, ..g.clone() })?;
                Sample::Graph {
                    adjacency: out.adjacency,
                    rows: out.rows,
                    cols: out.cols,
                    connectivity: None,
                }
            }
            Model::SubGaussian(s) => {
                let out = sample_subgaussian(&SubGaussianSpec { seed, ..s.clone() })?;
                Sample::Real {
                    matrix: out.matrix,
                    rows: out.rows,
                    cols: out.cols,
                }
            }
        })
    }
}

enum Sample {
    Graph {
        adjacency: BiAdjacency,
        rows: Membership,
        cols: Membership,
        /// Edge probabilities when the mean is block-constant.
        connectivity: Option<Array2<f64>>,
    },
    Real {
        matrix: Array2<f64>,
        rows: Membership,
        cols: Membership,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub param_name: &'static str,
    pub param_value: f64,
    pub model: Model,
}

impl SweepPoint {
    fn new(param_name: &'static str, param_value: f64, model: Model) -> Self {
        Self {
            param_name,
            param_value,
            model,
        }
    }
}

/// One row of the tidy output: a method evaluated on one replicate of one
/// sweep point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub point: usize,
    pub param_name: String,
    pub param_value: f64,
    pub replicate: usize,
    pub method: String,
    #[serde(with = "crate::serde_extended")]
    pub tau: f64,
    pub weight_form: WeightForm,
    pub n1: usize,
    pub n2: usize,
    pub nmi: Option<f64>,
    pub mis_bar: Option<f64>,
    pub mis_inf: Option<f64>,
    pub rel_err: Option<f64>,
    /// Replicate seed, `derive_seed(master_seed, [point, replicate])`.
    pub seed: u64,
    pub error: Option<String>,
    pub elapsed_ms: f64,
}

/// Mean and standard error of each metric per sweep point and method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub point: usize,
    pub param_name: String,
    pub param_value: f64,
    pub method: String,
    #[serde(with = "crate::serde_extended")]
    pub tau: f64,
    pub replicates: usize,
    pub failed: usize,
    pub nmi_mean: Option<f64>,
    pub nmi_se: Option<f64>,
    pub mis_bar_mean: Option<f64>,
    pub mis_bar_se: Option<f64>,
    pub mis_inf_mean: Option<f64>,
    pub mis_inf_se: Option<f64>,
    pub rel_err_mean: Option<f64>,
    pub rel_err_se: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutput {
    pub records: Vec<ResultRecord>,
    pub summary: Vec<SummaryRecord>,
    /// SHA-256 of the records without timing columns.
    pub hash: String,
}

impl ExperimentOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Runs every `(point, replicate)` job, collecting records in canonical
/// order (point, replicate, method) regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let points = cfg.points()?;
    let runs = cfg.runs();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.replicates).map(move |r| (p, r)))
        .collect();
    let work = || -> Vec<Vec<ResultRecord>> {
        jobs.par_iter()
            .map(|&(p, r)| run_job(cfg, &points[p], p, r, &runs))
            .collect()
    };
    let nested = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::validation(format!("cannot start worker pool: {e}")))?
            .install(work),
        None => work(),
    };
    let records: Vec<ResultRecord> = nested.into_iter().flatten().collect();
    let summary = summarize(&records);
    let hash = determinism_hash(&records)?;
    Ok(ExperimentOutput {
        records,
        summary,
        hash,
    })
}

fn run_job(cfg: &ExperimentConfig, point: &SweepPoint, p: usize, r: usize, runs: &[PipelineRun]) -> Vec<ResultRecord> {
    let seed = derive_seed(cfg.master_seed, &[p as u64, r as u64]);
    let (n1, n2) = point.model.dims();
    let base = |method: String, tau: f64, weight_form: WeightForm| ResultRecord {
        point: p,
        param_name: point.param_name.to_string(),
        param_value: point.param_value,
        replicate: r,
        method,
        tau,
        weight_form,
        n1,
        n2,
        nmi: None,
        mis_bar: None,
        mis_inf: None,
        rel_err: None,
        seed,
        error: None,
        elapsed_ms: 0.0,
    };
    let start = Instant::now();
    let sample = match point.model.sample(seed) {
        Ok(s) => s,
        Err(e) => {
            let mut failed = base("sample".into(), f64::NAN, WeightForm::L1);
            failed.error = Some(e.to_string());
            return vec![failed];
        }
    };
    let sample_ms = start.elapsed().as_secs_f64() * 1e3;

    if let ExperimentKind::Fig2ConcentrationVsTau { tau_grid, .. } = &cfg.kind {
        let Model::Sbm(spec) = &point.model else {
            unreachable!("concentration sweeps use the sparse 3 x 4 block model")
        };
        let Sample::Graph {
            adjacency, rows, cols, ..
        } = &sample
        else {
            unreachable!()
        };
        let form = cfg.concentration_weight_form;
        let b = spec.connectivity();
        let measure = |method: &str, tau: f64, f: &dyn Fn() -> Result<BiAdjacency>| {
            let t = Instant::now();
            let mut rec = base(method.to_string(), tau, form);
            match f().and_then(|a| concentration_error_block(a.entries().view(), &b, rows, cols)) {
                Ok(c) => rec.rel_err = Some(c.rel),
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec.elapsed_ms = sample_ms + t.elapsed().as_secs_f64() * 1e3;
            rec
        };
        let mut out = vec![measure("none", f64::INFINITY, &|| Ok(adjacency.clone()))];
        for &tau in tau_grid {
            out.push(measure("data_driven", tau, &|| {
                Ok(regularize_data_driven_with(adjacency, tau, form)?.0)
            }));
            out.push(measure("oracle", tau, &|| {
                Ok(regularize_capped_with(adjacency, OracleCaps::expected_max_degree(spec, tau), form)?.0)
            }));
        }
        return out;
    }

    let (k1, k2) = point.model.ks();
    runs.iter()
        .map(|run| {
            let tau = match &cfg.kind {
                ExperimentKind::CustomSweep {
                    parameter: SweepParameter::Tau,
                    ..
                } => point.param_value,
                _ => run.tau,
            };
            let t = Instant::now();
            let mut rec = base(run.label(), tau, run.weight_form);
            let pcfg = PipelineConfig {
                k_rows: k1,
                k_cols: k2,
                tau,
                weight_form: run.weight_form,
                kmeans: run.kmeans.clone(),
                side: run.side,
                seed,
                ..PipelineConfig::new(k1, seed)
            };
            match evaluate_run(run, &pcfg, &sample) {
                Ok((nmi, mis_bar, mis_inf, rel)) => {
                    rec.nmi = Some(nmi);
                    rec.mis_bar = Some(mis_bar);
                    rec.mis_inf = Some(mis_inf);
                    rec.rel_err = rel;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            rec.elapsed_ms = sample_ms + t.elapsed().as_secs_f64() * 1e3;
            rec
        })
        .collect()
}

fn evaluate_run(run: &PipelineRun, pcfg: &PipelineConfig, sample: &Sample) -> Result<(f64, f64, f64, Option<f64>)> {
    let (out, rows, cols, rel) = match sample {
        Sample::Graph {
            adjacency,
            rows,
            cols,
            connectivity,
        } => {
            if run.pipeline == Pipeline::Subg {
                return Err(Error::validation("the sub-Gaussian pipeline needs a real-valued model"));
            }
            let out = run_pipeline(run.pipeline, adjacency, pcfg)?;
            let rel = match connectivity {
                Some(b) => Some(concentration_error_block(out.regularized.view(), b, rows, cols)?.rel),
                None => None,
            };
            (out, rows, cols, rel)
        }
        Sample::Real { matrix, rows, cols } => {
            if run.pipeline != Pipeline::Subg {
                return Err(Error::validation("graph pipelines need an adjacency model"));
            }
            (sc_subgaussian(matrix.view(), pcfg)?, rows, cols, None)
        }
    };
    let (truth, side): (&Membership, Option<SideResult>) = match run.side {
        ClusterSide::Cols => (cols, out.result.cols),
        _ => (rows, out.result.rows),
    };
    let side = side.ok_or_else(|| Error::validation("requested side was not clustered"))?;
    let mis = if side.unlabeled.is_empty() {
        misclassification(truth, &side.labels)?
    } else {
        let partial: Vec<Option<usize>> = side
            .labels
            .labels()
            .iter()
            .enumerate()
            .map(|(i, &l)| (!side.unlabeled.contains(&i)).then_some(l))
            .collect();
        misclassification_partial(truth, &partial, side.labels.k())?
    };
    let nmi = nmi(truth, &side.labels)?.value;
    Ok((nmi, mis.mis_bar, mis.mis_inf, rel))
}

fn mean_se(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (Some(mean), None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some((var / n).sqrt()))
}

/// Groups records by sweep point, method and tau (in order of first
/// appearance) and reports the mean and standard error of each metric.
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRecord> {
    let mut groups: BTreeMap<(usize, usize), Vec<&ResultRecord>> = BTreeMap::new();
    let mut order: Vec<(usize, String, u64)> = Vec::new();
    for rec in records {
        let key = (rec.point, rec.method.clone(), rec.tau.to_bits());
        let idx = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                order.len() - 1
            }
        };
        groups.entry((rec.point, idx)).or_default().push(rec);
    }
    groups
        .into_values()
        .map(|recs| {
            let first = recs[0];
            let ok: Vec<&&ResultRecord> = recs.iter().filter(|r| r.error.is_none()).collect();
            let metric = |f: fn(&ResultRecord) -> Option<f64>| {
                let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                mean_se(&v)
            };
            let (nmi_mean, nmi_se) = metric(|r| r.nmi);
            let (mis_bar_mean, mis_bar_se) = metric(|r| r.mis_bar);
            let (mis_inf_mean, mis_inf_se) = metric(|r| r.mis_inf);
            let (rel_err_mean, rel_err_se) = metric(|r| r.rel_err);
            SummaryRecord {
                point: first.point,
                param_name: first.param_name.clone(),
                param_value: first.param_value,
                method: first.method.clone(),
                tau: first.tau,
                replicates: recs.len(),
                failed: recs.len() - ok.len(),
                nmi_mean,
                nmi_se,
                mis_bar_mean,
                mis_bar_se,
                mis_inf_mean,
                mis_inf_se,
                rel_err_mean,
                rel_err_se,
            }
        })
        .collect()
}

/// SHA-256 over the CSV encoding of the records with `elapsed_ms` removed.
pub fn determinism_hash(records: &[ResultRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in records {
        w.serialize(ResultRecord {
            elapsed_ms: 0.0,
            ..rec.clone()
        })?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::validation(format!("csv buffer: {e}")))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

pub fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_records(path: &Path) -> Result<Vec<ResultRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(Error::from)
}

/// Writes `records.csv`, `summary.csv`, `config.json` and `hash.txt`.
pub fn write_outputs(cfg: &ExperimentConfig, out: &ExperimentOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_csv(&out.records, &dir.join("records.csv"))?;
    write_csv(&out.summary, &dir.join("summary.csv"))?;
    let config = dir.join("config.json");
    fs::write(&config, serde_json::to_string_pretty(cfg)?).map_err(|e| Error::io(&config, e))?;
    let hash = dir.join("hash.txt");
    fs::write(&hash, format!("{}\n", out.hash)).map_err(|e| Error::io(&hash, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_sweep(replicates: usize) -> ExperimentConfig {
        let model = ModelTemplate::Sbm(SbmSpec::balanced(
            60,
            80,
            crate::models::planted_partition(2, 12.0, 2.0) * 3.0,
            0,
        ));
        ExperimentConfig::new(
            ExperimentKind::CustomSweep {
                model,
                parameter: SweepParameter::PsiScale,
                values: vec![0.5, 1.0],
            },
            replicates,
            11,
        )
    }

    #[test]
    fn fig1_record_count() {
        let cfg = ExperimentConfig::new(ExperimentKind::Fig1NmiVsB { b_grid: default_b_grid() }, 15, 0);
        assert_eq!(cfg.points().unwrap().len() * cfg.replicates * cfg.runs().len(), 6 * 15 * 2);
    }

    #[test]
    fn one_record_per_pipeline() {
        let mut cfg = small_sweep(1);
        cfg.kind = ExperimentKind::CustomSweep {
            model: match cfg.kind {
                ExperimentKind::CustomSweep { model, .. } => model,
                _ => unreachable!(),
            },
            parameter: SweepParameter::PsiScale,
            values: vec![1.0],
        };
        cfg.pipelines = vec![PipelineRun::new(Pipeline::Sc1, 3.0), PipelineRun::new(Pipeline::ScRre, 3.0)];
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.failures(), 0);
    }

    #[test]
    fn summary_matches_recomputation() {
        let out = run_experiment(&small_sweep(4)).unwrap();
        assert_eq!(out.summary.len(), 2);
        for s in &out.summary {
            let v: Vec<f64> = out
                .records
                .iter()
                .filter(|r| r.point == s.point)
                .map(|r| r.nmi.unwrap())
                .collect();
            let mean = v.iter().sum::<f64>() / 4.0;
            let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
            assert!((s.nmi_mean.unwrap() - mean).abs() < 1e-12);
            assert!((s.nmi_se.unwrap() - sd / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let mut cfg = small_sweep(3);
        cfg.workers = Some(1);
        let a = run_experiment(&cfg).unwrap();
        cfg.workers = Some(4);
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a.hash, b.hash);
        cfg.master_seed += 1;
        assert_ne!(run_experiment(&cfg).unwrap().hash, a.hash);
    }

    #[test]
    fn failures_are_recorded_per_replicate() {
        let mut cfg = small_sweep(2);
        cfg.pipelines = vec![PipelineRun::new(Pipeline::Subg, f64::INFINITY), PipelineRun::new(Pipeline::ScRre, 3.0)];
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 8);
        assert_eq!(out.failures(), 4);
        assert!(out.summary.iter().filter(|s| s.method == "subg").all(|s| s.failed == 2 && s.nmi_mean.is_none()));
    }

    #[test]
    fn config_parses_from_json() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"kind": "fig2_concentration_vs_tau", "tau_grid": [1, 2, "inf"], "replicates": 3}"#,
        )
        .unwrap();
        assert_eq!(
            cfg.kind,
            ExperimentKind::Fig2ConcentrationVsTau {
                n0: 500,
                tau_grid: vec![1.0, 2.0, f64::INFINITY]
            }
        );
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"kind": "fig1_nmi_vs_b"}"#).unwrap();
        assert_eq!(cfg.replicates, 15);
        assert!(cfg.validate().is_ok());
        let bad: ExperimentConfig = serde_json::from_str(r#"{"kind": "fig1_nmi_vs_b", "b_grid": []}"#).unwrap();
        assert!(bad.validate().is_err());
    }

    #[test]
    fn concentration_sweep_emits_three_curves() {
        let mut cfg = ExperimentConfig::new(
            ExperimentKind::Fig2ConcentrationVsTau {
                n0: 30,
                tau_grid: vec![1.0, 2.0],
            },
            2,
            5,
        );
        cfg.workers = Some(2);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 2 * (1 + 2 * 2));
        let methods: Vec<&str> = out.summary.iter().map(|s| s.method.as_str()).collect();
        assert_eq!(methods, ["none", "data_driven", "oracle", "data_driven", "oracle"]);
        assert!(out.records.iter().all(|r| r.rel_err.is_some()));
    }
}
