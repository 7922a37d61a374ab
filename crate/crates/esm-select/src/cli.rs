//! The `esm-select` command line.
//!
//! Exit codes: 0 on success, 1 on invalid input or usage, 2 on internal
//! failures (panics, worker-pool start-up).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use esm_select_core::pca::project_2d;
use esm_select_core::{train_esm, EsmTrainConfig, Method, TrainMethod};

use crate::manifest::SourceManifest;
use crate::pipeline::{rank_sources, target_id_from_path, PipelineError, TargetInputs};
use crate::{report, store};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "esm-select", version, about = "Rank intermediate source tasks for a target task with embedding space maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit an ESM from paired base and fine-tuned embeddings of one dataset.
    Train(TrainArgs),
    /// Score every source in a manifest against a target and write a ranking.
    Rank(RankArgs),
    /// Compare rankings with realised transfer performance.
    Evaluate(EvaluateArgs),
    /// Export a 2-D PCA projection of embeddings as CSV.
    Project(ProjectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CliTrainMethod {
    ClosedForm,
    Iterative,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    tuned: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "closed-form")]
    method: CliTrainMethod,
    /// Ridge penalty for the closed-form trainer.
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 1e-2)]
    weight_decay: f64,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Base-model embeddings of the target inputs (ESEB).
    #[arg(long)]
    target_emb: PathBuf,
    /// Target labels (ESLB).
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    /// esm-logme, logme, leep, nce, textemb or vocab.
    #[arg(long)]
    method: Method,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; defaults to ESM_SELECT_THREADS, then to the core count.
    #[arg(long, env = "ESM_SELECT_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Target token set (ESTS), needed by the vocab method.
    #[arg(long)]
    target_tokens: Option<PathBuf>,
    /// Defaults to the labels file name up to its first dot.
    #[arg(long)]
    target_id: Option<String>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long = "ranking", required = true, num_args = 1..)]
    rankings: Vec<PathBuf>,
    /// `source_id,performance` CSV per target; the file stem is the target id.
    #[arg(long = "ground-truth", required = true, num_args = 1..)]
    ground_truth: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5")]
    k: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[arg(long)]
    emb: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
#[error("internal error: {0}")]
struct InternalError(String);

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli.command)) {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InternalError>().is_some() {
                EXIT_INTERNAL
            } else {
                EXIT_USER
            }
        }
        Err(_) => EXIT_INTERNAL,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => train(a),
        Command::Rank(a) => rank(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Project(a) => project(a),
    }
}

fn read_matrix(path: &Path) -> Result<esm_select_core::EmbeddingMatrix> {
    store::read_matrix(path).with_context(|| format!("reading embeddings {}", path.display()))
}

fn read_labels(path: &Path) -> Result<esm_select_core::LabelData> {
    store::read_labels(path).with_context(|| format!("reading labels {}", path.display()))
}

fn train(a: TrainArgs) -> Result<()> {
    let cfg = EsmTrainConfig {
        method: match a.method {
            CliTrainMethod::ClosedForm => TrainMethod::ClosedForm,
            CliTrainMethod::Iterative => TrainMethod::Iterative,
        },
        ridge_lambda: a.lambda,
        epochs: a.epochs,
        learning_rate: a.lr,
        weight_decay: a.weight_decay,
        batch_size: a.batch_size,
        seed: a.seed,
    };
    cfg.validate()?;
    let base = read_matrix(&a.base)?;
    let tuned = read_matrix(&a.tuned)?;
    let esm = train_esm(&base, &tuned, &cfg)?;
    store::write_esm(&esm, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "parameters: {}", esm.parameter_count())?;
    writeln!(out, "train mse: {:.6e}", esm.meta.train_mse.unwrap_or(f64::NAN))?;
    Ok(())
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn rank(a: RankArgs) -> Result<()> {
    let start = Instant::now();
    let manifest = SourceManifest::load(&a.manifest)?;
    let target = TargetInputs {
        target_id: a.target_id.unwrap_or_else(|| target_id_from_path(&a.labels)),
        embeddings: read_matrix(&a.target_emb)?,
        labels: read_labels(&a.labels)?,
        tokens: a
            .target_tokens
            .as_deref()
            .map(|p| store::read_tokenset(p).with_context(|| format!("reading token set {}", p.display())))
            .transpose()?,
    };
    let threads = a.threads.map_or_else(default_threads, |t| t as usize);
    let ranking = rank_sources(&target, &manifest, a.method, threads).map_err(|e| match e {
        PipelineError::ThreadPool(_) => anyhow::Error::new(InternalError(e.to_string())),
        other => other.into(),
    })?;
    for w in &ranking.warnings {
        log::warn!("{w}");
    }
    report::write_ranking(&ranking, &a.out)?;
    eprintln!(
        "ranked {} sources with {} in {:.1} ms ({:.1} ms scoring){}",
        ranking.len(),
        a.method,
        start.elapsed().as_secs_f64() * 1e3,
        ranking.wall_time_ms.total,
        peak_rss_suffix()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    ensure!(!a.k.is_empty(), "--k needs at least one cutoff");
    let rankings = a.rankings.iter().map(|p| report::read_ranking(p)).collect::<Result<Vec<_>>>()?;
    let truths = a.ground_truth.iter().map(|p| report::read_ground_truth(p)).collect::<Result<Vec<_>>>()?;
    let report = report::evaluate(&rankings, &truths, &a.k)?;
    report::write_report(&report, &a.out)?;
    print!("{}", report.render_table());
    Ok(())
}

fn project(a: ProjectArgs) -> Result<()> {
    let emb = read_matrix(&a.emb)?;
    let labels = read_labels(&a.labels)?;
    ensure!(labels.len() == emb.rows(), "row count mismatch: {} embeddings vs {} labels", emb.rows(), labels.len());
    let projection = project_2d(&emb)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "label"])?;
    for (i, [x, y]) in projection.coords.iter().enumerate() {
        w.write_record([x.to_string(), y.to_string(), labels.display_value(i)])?;
    }
    report::write_atomic(&a.out, &w.into_inner()?)
}

/// Best-effort peak resident set size from `/proc`, empty elsewhere.
fn peak_rss_suffix() -> String {
    std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| s.lines().find(|l| l.starts_with("VmHWM:")).map(|l| l["VmHWM:".len()..].trim().to_string()))
        .map(|v| format!("; peak RSS {v}"))
        .unwrap_or_default()
}
