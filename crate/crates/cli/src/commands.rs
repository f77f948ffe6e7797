//! Subcommand definitions and implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fermat_fda::classify::pipeline::classify_pipeline;
use fermat_fda::simgen::{gen_model, SimModel, SimSpec};
use fermat_fda::smoothing::smooth_dataset_with_bandwidths;
use fermat_fda::{Grid, Method, PipelineConfig, SmootherConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::experiments::{preset_design, run_experiment, write_summary_csv, Preset, RunOptions};
use crate::io::{assemble, ingest_curves, ingest_labels, ingest_truth, write_curves, write_labels, write_smooth_curves};
use crate::report::{evaluate, median, write_confusion, write_json, write_timings, ClassifyReport};

#[derive(Debug, Parser)]
#[command(name = "fermat-fda", version, about = "Semi-supervised functional data classification with Fermat distances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a simulated dataset in the ingestion format.
    Simulate(SimulateArgs),
    /// Smooth raw curves onto a shared grid.
    Smooth(SmoothArgs),
    /// Classify the unlabeled curves.
    Classify(ClassifyArgs),
    /// Run a simulation experiment preset.
    Bench(BenchArgs),
}

fn parse_model(s: &str) -> Result<SimModel, String> {
    s.parse().map_err(|e: fermat_fda::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: fermat_fda::Error| e.to_string())
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = parse_model, default_value = "i")]
    pub model: SimModel,
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 60)]
    pub n_labeled: usize,
    /// Observations per curve.
    #[arg(long = "j", default_value_t = 100)]
    pub j: usize,
    /// Signal-to-noise divisor; model default when omitted.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub seed: u64,
    /// Write a label row with a synthetic score for every curve: labeled
    /// curves score above 0.6, the rest at or below it.
    #[arg(long)]
    pub synthetic_scores: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub curves: PathBuf,
    /// Grid size; derived from the sampling rates when omitted.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Fixed bandwidth; plug-in rule when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub curves: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Optional ground truth (`id,class`) for accuracy and confusion tables.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_parser = parse_method, default_value = "fd-wknn")]
    pub method: Method,
    /// Fermat power; 2 for fd-wknn, 4 for the SVM methods when omitted.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 15)]
    pub k_graph: usize,
    #[arg(long, default_value_t = 5)]
    pub n0: usize,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rows whose score is not above this become unlabeled.
    #[arg(long)]
    pub score_threshold: Option<f64>,
    /// Comma-separated class names fixing the class order.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long, value_parser = parse_model, default_value = "i")]
    pub model: SimModel,
    /// Replicates per setting; preset default when omitted.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 15)]
    pub k_graph: usize,
    #[arg(long, default_value_t = 5)]
    pub n0: usize,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Smooth(a) => cmd_smooth(&a),
        Command::Classify(a) => cmd_classify(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

/// Stream reserved for synthetic scores, disjoint from the curve streams.
const SCORE_STREAM: u64 = u64::MAX;

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut spec = SimSpec::new(a.model, a.n, a.n_labeled, a.j, a.seed);
    if let Some(r) = a.r {
        spec.r = r;
    }
    let sim = gen_model(&spec)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    write_curves(&a.out.join("curves.csv"), sim.dataset.curves())?;

    let ids: Vec<String> = sim.dataset.curves().iter().map(|c| c.id().to_string()).collect();
    let rows: Vec<(String, String, Option<f64>)> = if a.synthetic_scores {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
        rng.set_stream(SCORE_STREAM);
        ids.iter()
            .zip(&sim.truth.labels)
            .enumerate()
            .map(|(i, (id, c))| {
                let u: f64 = rng.random();
                let score = if i < a.n_labeled { 0.6 + 0.4 * (1.0 - u) } else { 0.6 * u };
                (id.clone(), c.to_string(), Some(score))
            })
            .collect()
    } else {
        ids.iter()
            .zip(&sim.truth.labels)
            .take(a.n_labeled)
            .map(|(id, c)| (id.clone(), c.to_string(), None))
            .collect()
    };
    write_labels(&a.out.join("labels.csv"), &rows)?;

    use std::io::Write;
    let mut w = crate::io::create(&a.out.join("truth.csv"))?;
    writeln!(w, "id,class,beta")?;
    for ((id, c), b) in ids.iter().zip(&sim.truth.labels).zip(&sim.truth.beta) {
        match b {
            Some(b) => writeln!(w, "{id},{c},{b}")?,
            None => writeln!(w, "{id},{c},")?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_smooth(a: &SmoothArgs) -> Result<()> {
    let curves = ingest_curves(&a.curves)?;
    let m = a.grid.unwrap_or_else(|| Grid::default_size(&curves));
    let grid = Grid::new(m)?;
    let cfg = SmootherConfig {
        bandwidth: a.bandwidth,
        ridge: None,
    };
    let (smooth, _) = smooth_dataset_with_bandwidths(&curves, &grid, &cfg)?;
    write_smooth_curves(&a.out, &smooth, &grid)
}

pub fn cmd_classify(a: &ClassifyArgs) -> Result<()> {
    let curves = ingest_curves(&a.curves)?;
    let table = ingest_labels(&a.labels, a.score_threshold, a.classes.as_deref())?;
    let assembled = assemble(curves, &table)?;
    if assembled.dataset.n_labeled() == 0 {
        bail!("no labeled curves: the label file is empty or every score is at or below the threshold");
    }
    let mut cfg = PipelineConfig::new(a.method);
    if let Some(alpha) = a.alpha {
        cfg.fermat.alpha = alpha;
    }
    cfg.fermat.k_graph = a.k_graph;
    cfg.wknn.n0 = a.n0;
    cfg.grid_size = a.grid;
    let out = classify_pipeline(&assembled.dataset, &cfg)?;
    let diag = &out.diagnostics;
    let n_l = assembled.dataset.n_labeled();

    std::fs::create_dir_all(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?;
    {
        use std::io::Write;
        let mut w = crate::io::create(&a.out.join("predictions.csv"))?;
        let with_entropy = out.weight_entropies.is_some();
        writeln!(w, "{}", if with_entropy { "id,predicted,weight_entropy" } else { "id,predicted" })?;
        for (i, &p) in out.predictions.iter().enumerate() {
            let id = &assembled.ids[n_l + i];
            let name = &assembled.classes[p];
            match &out.weight_entropies {
                Some(e) => writeln!(w, "{id},{name},{}", e[i])?,
                None => writeln!(w, "{id},{name}")?,
            }
        }
        w.flush()?;
    }

    let evaluation = match &a.truth {
        Some(path) => {
            let (truth, _) = ingest_truth(path)?;
            let known: Vec<Option<usize>> = assembled.ids[n_l..]
                .iter()
                .map(|id| truth.get(id).and_then(|name| assembled.classes.iter().position(|c| c == name)))
                .collect();
            let e = evaluate(&known, &out.predictions, assembled.classes.len());
            write_confusion(&a.out.join("confusion.csv"), &e, &assembled.classes)?;
            Some(e)
        }
        None => None,
    };
    let report = ClassifyReport {
        method: a.method.name().to_string(),
        alpha: diag.alpha,
        k_graph: a.k_graph,
        n0: a.n0,
        seed: a.seed,
        grid_size: diag.grid_size,
        n_curves: assembled.dataset.len(),
        n_labeled: n_l,
        n_unlabeled: assembled.dataset.n_unlabeled(),
        classes: assembled.classes.clone(),
        k: diag.k,
        sigma: ClassifyReport::sigma_from(diag),
        d_hat: diag.d_hat,
        scale: diag.scale,
        mds_dimension: diag.p,
        mds_eigenvalues: diag.eigenvalues.clone(),
        mds_negative_eigenvalues: diag.negative_eigenvalues,
        svm_bandwidth: diag.svm_bandwidth,
        svm_converged: diag.svm_converged,
        bandwidth_median: median(&diag.bandwidths),
        warnings: diag.warnings.clone(),
        evaluation,
    };
    write_json(&a.out.join("report.json"), &report)?;
    write_timings(&a.out.join("timings.csv"), &diag.timings)
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let reps = a.reps.unwrap_or(a.preset.default_reps());
    if reps == 0 {
        bail!("--reps must be at least 1");
    }
    let opts = RunOptions {
        model: a.model,
        k_graph: a.k_graph,
        n0: a.n0,
        grid: a.grid,
    };
    let (settings, methods) = preset_design(a.preset);
    let exp = run_experiment(a.preset, &settings, &methods, reps, a.seed, &opts)?;
    let out: &Path = &a.out;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    write_summary_csv(&out.join(format!("{}.csv", a.preset.name())), &exp)?;
    write_json(&out.join(format!("{}.json", a.preset.name())), &exp)
}
