//! The `g2t` command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 runtime abort.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{generate_synthetic, load_jsonl, save_jsonl, SynthConfig};
use crate::error::{Error, Result};
use crate::linearize::{linearize, serialize_linearized, DEFAULT_MAX_LEVEL};
use crate::metrics::{evaluate, significance, Metric};
use crate::model::checkpoint::load_checkpoint;
use crate::model::BeamConfig;
use crate::train::{generate, run_pipeline, Corpora, PipelineConfig, RunOptions, StageConfig, CONFIG_FILE};
use crate::vocab::{DEFAULT_MAX_SOURCE_LENGTH, DEFAULT_MAX_TARGET_LENGTH};

/// Environment variable holding the default seed.
pub const SEED_ENV: &str = "G2T_SEED";

/// Learning rate used by `train` when neither a config file nor `--lr` sets one.
pub const DEFAULT_CLI_LR: f64 = 1e-3;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "g2t", version, about = "Graph-to-text workbench")]
pub struct Cli {
    /// Global seed; defaults to $G2T_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one linearized sequence per example plus a role/level sidecar.
    Linearize(LinearizeArgs),
    /// Generate synthetic clean and noisy corpora.
    Synth(SynthArgs),
    /// Run the training pipeline.
    Train(TrainArgs),
    /// Beam-decode a corpus with a trained checkpoint.
    Generate(GenerateArgs),
    /// Score predictions against gold references.
    Evaluate(EvaluateArgs),
    /// Paired t-test between two systems over random subsets.
    Significance(SignificanceArgs),
}

#[derive(Debug, Args)]
pub struct LinearizeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Role and level indices, `roles<TAB>levels` per line; defaults to `<output>.idx`.
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_LEVEL)]
    pub max_level: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON generator configuration; omitted fields take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_clean: PathBuf,
    #[arg(long)]
    pub out_noisy: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    /// Noisy corpus for the first stage.
    #[arg(long)]
    pub stage1: Option<PathBuf>,
    /// Run the first stage; defaults to whether `--stage1` is given.
    #[arg(long)]
    pub use_stage1: Option<bool>,
    /// Add role and level embeddings to the encoder input.
    #[arg(long)]
    pub use_position: Option<bool>,
    #[arg(long)]
    pub epochs_stage1: Option<usize>,
    #[arg(long)]
    pub epochs_stage2: Option<usize>,
    #[arg(long)]
    pub beam: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// JSON pipeline configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Continue an interrupted run from `<out>/ckpt-last`.
    #[arg(long)]
    pub resume: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SOURCE_LENGTH)]
    pub max_source_length: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_TARGET_LENGTH)]
    pub max_target_length: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    /// Comma-separated subset of bleu, parent, ter.
    #[arg(long, default_value = "bleu,parent,ter")]
    pub metrics: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SignificanceArgs {
    #[arg(long)]
    pub pred_a: PathBuf,
    #[arg(long)]
    pub pred_b: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long, default_value = "bleu")]
    pub metric: String,
    /// Share of the corpus in each subset.
    #[arg(long, default_value_t = 0.5)]
    pub fraction: f64,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::InvalidGraph { .. }
        | Error::Parse { .. }
        | Error::InvalidExample { .. }
        | Error::Checkpoint { .. }
        | Error::Metric(_)
        | Error::Io { .. }
        | Error::Json(_) => EXIT_DATA,
        Error::Shape(_) | Error::OutOfRange { .. } | Error::NonFinite { .. } | Error::Diverged { .. } => EXIT_RUNTIME,
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("${SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

/// Prediction file lines, one per example.
fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read(path)?.lines().map(str::to_string).collect())
}

fn lines(items: impl IntoIterator<Item = String>) -> String {
    let mut out = String::new();
    for l in items {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

pub fn cmd_linearize(a: &LinearizeArgs) -> Result<()> {
    let corpus = load_jsonl(&a.input)?;
    let mut seqs = Vec::with_capacity(corpus.len());
    let mut side = Vec::with_capacity(corpus.len());
    for ex in &corpus.examples {
        let lin = linearize(&ex.graph, a.max_level).map_err(|e| Error::InvalidExample {
            id: ex.id.clone(),
            message: e.to_string(),
        })?;
        seqs.push(serialize_linearized(&lin));
        side.push(format!("{}\t{}", join(&lin.roles()), join(&lin.levels())));
    }
    let sidecar = a.sidecar.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".idx");
        PathBuf::from(p)
    });
    write(&a.output, &lines(seqs))?;
    write(&sidecar, &lines(side))
}

pub fn cmd_synth(a: &SynthArgs, seed: Option<u64>) -> Result<()> {
    let mut config: SynthConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    let (clean, noisy) = generate_synthetic(&config)?;
    save_jsonl(&clean, &a.out_clean)?;
    save_jsonl(&noisy, &a.out_noisy)?;
    println!("{} clean and {} noisy examples", clean.len(), noisy.len());
    Ok(())
}

/// Pipeline configuration from an optional file plus flag overrides.
pub fn train_config(a: &TrainArgs, seed: u64) -> Result<PipelineConfig> {
    let mut c = match &a.config {
        Some(p) => read_json(p)?,
        None => {
            let mut c = PipelineConfig::default();
            c.stage2.learning_rate = DEFAULT_CLI_LR;
            if let Some(s) = c.stage1.as_mut() {
                s.learning_rate = DEFAULT_CLI_LR;
            }
            c
        }
    };
    c.model.seed = seed;
    c.use_stage1 = a.use_stage1.unwrap_or(a.stage1.is_some() || (a.config.is_some() && c.use_stage1));
    if c.use_stage1 && a.stage1.is_none() {
        return Err(Error::Config("stage 1 is enabled but --stage1 is missing".into()));
    }
    if let Some(p) = a.use_position {
        c.use_position_embeddings = p;
    }
    if let Some(b) = a.beam {
        c.beam_size = b;
    }
    let stage1 = c.stage1.get_or_insert_with(|| StageConfig {
        epochs: 3,
        learning_rate: DEFAULT_CLI_LR,
        ..Default::default()
    });
    for s in [&mut *stage1, &mut c.stage2] {
        s.shuffle_seed = seed;
        if let Some(b) = a.batch_size {
            s.batch_size = b;
        }
        if let Some(lr) = a.lr {
            s.learning_rate = lr;
        }
    }
    if let Some(e) = a.epochs_stage1 {
        stage1.epochs = e;
    }
    if let Some(e) = a.epochs_stage2 {
        c.stage2.epochs = e;
    }
    c.validate()?;
    Ok(c)
}

pub fn cmd_train(a: &TrainArgs, seed: u64) -> Result<()> {
    let config = train_config(a, seed)?;
    let train = load_jsonl(&a.train)?;
    let dev = load_jsonl(&a.dev)?;
    let stage1 = match (&a.stage1, config.use_stage1) {
        (Some(p), true) => Some(load_jsonl(p)?),
        _ => None,
    };
    let opts = RunOptions {
        out_dir: Some(a.out.clone()),
        resume: a.resume,
        halt_after_epochs: None,
        verbose: true,
    };
    let corpora = Corpora {
        stage1: stage1.as_ref(),
        train: &train,
        dev: &dev,
    };
    let report = run_pipeline(&config, &corpora, &opts)?.expect("runs to completion without a halt");
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "epoch  train_loss  dev_bleu");
    for e in &report.epochs {
        let mark = if e.epoch == report.selected_epoch { " *" } else { "" };
        let _ = writeln!(out, "{:>5}  {:>10.4}  {:>8.2}{mark}", e.epoch, e.train_loss, e.dev_bleu);
    }
    let _ = writeln!(
        out,
        "selected epoch {} (dev BLEU {:.2}), {:.1}s",
        report.selected_epoch, report.selected_dev_bleu, report.wall_time_seconds
    );
    Ok(())
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let beam = BeamConfig {
        beam_size: a.beam,
        max_len: a.max_target_length,
        length_penalty: 1.0,
    };
    beam.validate()?;
    let ck = load_checkpoint(&a.ckpt)?;
    let vocab = ck
        .vocab
        .as_ref()
        .ok_or_else(|| Error::checkpoint(&a.ckpt, "no vocabulary stored"))?;
    // a run directory's config.json pins the model the checkpoint must match
    if let Some(cfg_path) = a.ckpt.parent().map(|d| d.join(CONFIG_FILE)).filter(|p| p.exists()) {
        let expected: PipelineConfig = read_json(&cfg_path)?;
        if expected.model != ck.params.config {
            return Err(Error::checkpoint(
                &a.ckpt,
                format!("model configuration differs from {}", cfg_path.display()),
            ));
        }
    }
    let corpus = load_jsonl(&a.input)?;
    let preds = generate(&ck.params, vocab, &corpus.examples, &beam, a.max_source_length)?;
    write(&a.out, &lines(preds))
}

fn parse_metrics(s: &str) -> Result<Vec<Metric>> {
    let mut out: Vec<Metric> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let m: Metric = part.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no metrics requested".into()));
    }
    Ok(out)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let metrics = parse_metrics(&a.metrics)?;
    let preds = read_lines(&a.pred)?;
    let gold = load_jsonl(&a.gold)?;
    let report = evaluate(&preds, &gold.examples, &metrics)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write(&a.out, &text)?;
    println!("{}", report.summary());
    Ok(())
}

pub fn cmd_significance(a: &SignificanceArgs, seed: u64) -> Result<()> {
    let metric: Metric = a.metric.parse()?;
    if a.k < 2 {
        return Err(Error::Config(format!("--k must be at least 2, got {}", a.k)));
    }
    let pa = read_lines(&a.pred_a)?;
    let pb = read_lines(&a.pred_b)?;
    let gold = load_jsonl(&a.gold)?;
    let r = significance(&pa, &pb, &gold.examples, metric, a.k, a.fraction, seed)?;
    println!("t = {:.6}", r.t_statistic);
    println!("p = {:.6}", r.p_value);
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let seed = resolve_seed(cli.seed)?;
    match &cli.command {
        Command::Linearize(a) => cmd_linearize(a),
        Command::Synth(a) => cmd_synth(a, cli.seed.or(std::env::var(SEED_ENV).ok().map(|_| seed))),
        Command::Train(a) => cmd_train(a, seed),
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Significance(a) => cmd_significance(a, seed),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
