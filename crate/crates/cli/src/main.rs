use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use serde_json::json;

use biclust::experiment::{run_experiment, write_outputs, ExperimentConfig, ModelTemplate};
use biclust::io::{load_edge_list, load_labels, load_matrix_market, save_labels, save_matrix_market, EdgeListOptions};
use biclust::metrics::{misclassification, nmi};
use biclust::models::{sample_graphon, sample_sbm, sample_subgaussian};
use biclust::pipelines::{run_pipeline, sc_subgaussian, ClusterSide, Pipeline, PipelineConfig};
use biclust::regularization::WeightForm;
use biclust::{BiAdjacency, Error, Membership};

#[derive(Parser)]
#[command(name = "biclust", version, about = "Spectral clustering of bipartite networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a model from a JSON spec (with a "family" tag).
    Generate(GenerateArgs),
    /// Cluster an adjacency matrix.
    Cluster(ClusterArgs),
    /// Compare two label files.
    Evaluate(EvaluateArgs),
    /// Run a replicated simulation sweep from a JSON config.
    Experiment(ExperimentArgs),
    /// Convert an edge list into a MatrixMarket adjacency file.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct GenerateArgs {
    spec: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// MatrixMarket adjacency, or a headerless dense CSV for `subg`.
    input: PathBuf,
    #[arg(long, default_value = "scrre")]
    pipeline: Pipeline,
    #[arg(long)]
    k_rows: usize,
    /// Defaults to `--k-rows`.
    #[arg(long)]
    k_cols: Option<usize>,
    /// Regularization multiplier; `inf` disables regularization.
    #[arg(long, default_value = "3", value_parser = parse_tau)]
    tau: f64,
    #[arg(long, default_value = "l1")]
    weight_form: WeightForm,
    #[arg(long, value_enum, default_value = "rows")]
    side: SideArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SideArg {
    Rows,
    Cols,
    Both,
}

impl From<SideArg> for ClusterSide {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Rows => ClusterSide::Rows,
            SideArg::Cols => ClusterSide::Cols,
            SideArg::Both => ClusterSide::Both,
        }
    }
}

#[derive(Args)]
struct EvaluateArgs {
    truth: PathBuf,
    estimate: PathBuf,
    /// Number of clusters; inferred from the labels when absent.
    #[arg(long)]
    k: Option<usize>,
    /// Writes the metrics JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, env = "BICLUST_WORKERS")]
    workers: Option<usize>,
    /// Overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    input: PathBuf,
    /// Indices start at 0 instead of 1.
    #[arg(long)]
    zero_based: bool,
    #[arg(long)]
    n_rows: Option<usize>,
    #[arg(long)]
    n_cols: Option<usize>,
    /// Output MatrixMarket file.
    #[arg(long)]
    out: PathBuf,
}

fn parse_tau(s: &str) -> Result<f64, String> {
    let tau = match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => f64::INFINITY,
        t => t.parse::<f64>().map_err(|e| e.to_string())?,
    };
    if tau > 0.0 {
        Ok(tau)
    } else {
        Err("tau must be positive".into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::EmptyCluster { .. }
        | Error::DegenerateCenters { .. }
        | Error::NoConvergence { .. }
        | Error::DistanceMismatch { .. } => 3,
        Error::Io { .. } | Error::Csv(_) => 4,
        _ => 2,
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> biclust::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> biclust::Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn read_to_string(path: &Path) -> biclust::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_dense_csv(path: &Path) -> biclust::Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut data = Vec::new();
    let mut ncols = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        data.extend_from_slice(&row);
        ncols.get_or_insert(row.len());
    }
    let ncols = ncols.ok_or_else(|| Error::Validation(format!("{}: empty matrix", path.display())))?;
    Array2::from_shape_vec((data.len() / ncols, ncols), data).map_err(|e| Error::Validation(e.to_string()))
}

fn save_dense_csv(m: &Array2<f64>, path: &Path) -> biclust::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for row in m.rows() {
        w.write_record(row.iter().map(|v| format!("{v:?}")))?;
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn generate(args: GenerateArgs) -> biclust::Result<()> {
    let mut spec: ModelTemplate = serde_json::from_str(&read_to_string(&args.spec)?)?;
    if let Some(seed) = args.seed {
        match &mut spec {
            ModelTemplate::Sbm(s) => s.seed = seed,
            ModelTemplate::SubGaussian(s) => s.seed = seed,
            ModelTemplate::Graphon(g) => g.seed = seed,
        }
    }
    create_dir(&args.out)?;
    let (rows, cols) = match &spec {
        ModelTemplate::Sbm(s) => {
            let sample = sample_sbm(s)?;
            save_matrix_market(&sample.adjacency, args.out.join("adjacency.mtx"))?;
            (sample.rows, sample.cols)
        }
        ModelTemplate::Graphon(g) => {
            let sample = sample_graphon(g)?;
            if sample.clipped > 0 {
                log::warn!("{} probabilities clipped to 1", sample.clipped);
            }
            save_matrix_market(&sample.adjacency, args.out.join("adjacency.mtx"))?;
            (sample.rows, sample.cols)
        }
        ModelTemplate::SubGaussian(s) => {
            let sample = sample_subgaussian(s)?;
            save_dense_csv(&sample.matrix, &args.out.join("matrix.csv"))?;
            (sample.rows, sample.cols)
        }
    };
    save_labels(&rows, args.out.join("rows.txt"))?;
    save_labels(&cols, args.out.join("cols.txt"))?;
    write_json(&args.out.join("spec.json"), &spec)
}

fn cluster(args: ClusterArgs) -> biclust::Result<()> {
    let k_cols = args.k_cols.unwrap_or(args.k_rows);
    let cfg = PipelineConfig {
        k_cols,
        tau: args.tau,
        weight_form: args.weight_form,
        side: args.side.into(),
        ..PipelineConfig::new(args.k_rows, args.seed)
    };
    let out = if args.pipeline == Pipeline::Subg {
        sc_subgaussian(load_dense_csv(&args.input)?.view(), &cfg)?
    } else {
        let a: BiAdjacency = load_matrix_market(&args.input)?;
        run_pipeline(args.pipeline, &a, &cfg)?
    };
    create_dir(&args.out)?;
    if let Some(rows) = &out.result.rows {
        save_labels(&rows.labels, args.out.join("rows.txt"))?;
    }
    if let Some(cols) = &out.result.cols {
        save_labels(&cols.labels, args.out.join("cols.txt"))?;
    }
    let mut result = serde_json::to_value(&out.result)?;
    // Timings vary between runs; keep them out of the deterministic file.
    let timings = result.as_object_mut().and_then(|o| o.remove("timings"));
    write_json(&args.out.join("result.json"), &result)?;
    if let Some(t) = timings {
        log::info!("timings: {t}");
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> biclust::Result<()> {
    let truth: Membership = load_labels(&args.truth, args.k)?;
    let estimate = load_labels(&args.estimate, args.k)?;
    let k = truth.k().max(estimate.k());
    let widen = |m: Membership| Membership::new(m.labels().to_vec(), k);
    let (truth, estimate) = (widen(truth)?, widen(estimate)?);
    let mis = misclassification(&truth, &estimate)?;
    let report = json!({
        "n": truth.len(),
        "k": k,
        "nmi": nmi(&truth, &estimate)?.value,
        "mis_bar": mis.mis_bar,
        "mis_inf": mis.mis_inf,
    });
    match args.out {
        Some(path) => write_json(&path, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

fn experiment(args: ExperimentArgs) -> biclust::Result<()> {
    let mut cfg: ExperimentConfig = serde_json::from_str(&read_to_string(&args.config)?)?;
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if args.out.is_some() {
        cfg.output_dir = args.out;
    }
    let dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| Error::Validation("no output directory (use --out)".into()))?;
    let out = run_experiment(&cfg)?;
    write_outputs(&cfg, &out, &dir)?;
    if out.failures() > 0 {
        log::warn!("{} of {} records failed", out.failures(), out.records.len());
    }
    println!("{}", out.hash);
    Ok(())
}

fn ingest(args: IngestArgs) -> biclust::Result<()> {
    let opts = EdgeListOptions {
        one_based: !args.zero_based,
        n_rows: args.n_rows,
        n_cols: args.n_cols,
    };
    let edges = load_edge_list(&args.input, opts)?;
    if edges.duplicates > 0 {
        log::warn!("collapsed {} duplicate edges", edges.duplicates);
    }
    save_matrix_market(&edges.adjacency, &args.out)?;
    println!(
        "{} x {}, {} edges",
        edges.adjacency.n_rows(),
        edges.adjacency.n_cols(),
        edges.adjacency.nnz()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Cluster(a) => cluster(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Experiment(a) => experiment(a),
        Command::Ingest(a) => ingest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
