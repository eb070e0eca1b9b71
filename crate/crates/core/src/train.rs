//! Two-stage fine-tuning: optional noisy-corpus stage, then the clean
//! training set with dev BLEU after every epoch and best-epoch selection.

use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Corpus, Example};
use crate::linearize::linearize;
use crate::metrics::bleu::corpus_bleu;
use crate::model::beam::beam_search_decode;
use crate::model::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::model::transformer::{loss_and_gradients, teacher_forcing};
use crate::model::{adam_step, AdamConfig, AdamState, BeamConfig, Gradients, ModelConfig, Parameters};
use crate::vocab::{
    build_vocab, decode, encode_source, encode_target, EncodedInput, Vocabulary, DEFAULT_MAX_SOURCE_LENGTH,
    DEFAULT_MAX_TARGET_LENGTH,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StageConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub shuffle_seed: u64,
}

impl Default for StageConfig {
    fn default() -> Self {
        StageConfig {
            epochs: 10,
            batch_size: 8,
            learning_rate: 3e-5,
            shuffle_seed: 0,
        }
    }
}

impl StageConfig {
    pub fn validate(&self, name: &str) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config(format!("{name}: epochs must be at least 1")));
        }
        if self.batch_size == 0 {
            return Err(Error::Config(format!("{name}: batch size must be at least 1")));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "{name}: learning rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Everything that determines a training run except the corpora themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// `vocab_size` and `structural_embeddings` are filled in by the pipeline.
    pub model: ModelConfig,
    pub stage1: Option<StageConfig>,
    pub stage2: StageConfig,
    pub use_stage1: bool,
    pub use_position_embeddings: bool,
    /// Beam width for dev decoding.
    pub beam_size: usize,
    pub max_source_length: usize,
    pub max_target_length: usize,
    pub min_freq: u64,
    /// Moment decay and epsilon; the learning rate comes from the stage.
    pub adam: AdamConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: ModelConfig::default(),
            stage1: Some(StageConfig {
                epochs: 3,
                ..Default::default()
            }),
            stage2: StageConfig::default(),
            use_stage1: false,
            use_position_embeddings: true,
            beam_size: 5,
            max_source_length: DEFAULT_MAX_SOURCE_LENGTH,
            max_target_length: DEFAULT_MAX_TARGET_LENGTH,
            min_freq: 1,
            adam: AdamConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.stage2.validate("stage 2")?;
        if self.use_stage1 {
            self.stage1
                .as_ref()
                .ok_or_else(|| Error::Config("stage 1 enabled without a stage-1 configuration".into()))?
                .validate("stage 1")?;
        }
        self.beam_config().validate()?;
        if self.max_source_length == 0 {
            return Err(Error::Config("max source length must be at least 1".into()));
        }
        if self.max_target_length + 1 > self.model.max_positions {
            return Err(Error::Config(format!(
                "targets of {} words need {} decoder positions, model has {}",
                self.max_target_length,
                self.max_target_length + 1,
                self.model.max_positions
            )));
        }
        if self.max_source_length > self.model.max_positions {
            return Err(Error::Config(format!(
                "max source length {} exceeds {} positions",
                self.max_source_length, self.model.max_positions
            )));
        }
        Ok(())
    }

    pub fn beam_config(&self) -> BeamConfig {
        BeamConfig {
            beam_size: self.beam_size,
            max_len: self.max_target_length,
            length_penalty: 1.0,
        }
    }

    /// The model configuration the pipeline actually instantiates.
    pub fn resolved_model(&self, vocab_size: usize) -> ModelConfig {
        let mut m = self.model.clone().with_vocab_size(vocab_size);
        m.structural_embeddings = self.use_position_embeddings;
        m
    }
}

/// The corpora a pipeline consumes.
#[derive(Debug, Clone, Copy)]
pub struct Corpora<'a> {
    pub stage1: Option<&'a Corpus>,
    pub train: &'a Corpus,
    pub dev: &'a Corpus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub stage1_losses: Vec<f64>,
    pub epochs: Vec<EpochRecord>,
    pub selected_epoch: usize,
    pub selected_dev_bleu: f64,
    /// Relative to the run directory; absent for in-memory runs.
    pub selected_checkpoint_path: Option<String>,
    /// Kept out of `report.json` so reruns compare byte for byte; written to
    /// `timing.json` instead.
    #[serde(skip)]
    pub wall_time_seconds: f64,
}

/// First index of the maximum score, 1-based. NaN scores never win.
pub fn select_epoch(dev_scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in dev_scores.iter().enumerate() {
        if !s.is_nan() && best.map_or(true, |(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i + 1)
}

/// A teacher-forced training instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPair {
    pub source: EncodedInput,
    pub decoder_input: Vec<u32>,
    pub targets: Vec<u32>,
}

pub fn encode_example(
    example: &Example,
    vocab: &Vocabulary,
    max_level: usize,
    max_source_length: usize,
) -> Result<EncodedInput> {
    let lin = linearize(&example.graph, max_level).map_err(|e| Error::InvalidExample {
        id: example.id.clone(),
        message: e.to_string(),
    })?;
    Ok(encode_source(&lin, vocab, max_source_length))
}

/// One pair per reference, corpus order.
pub fn prepare_pairs(
    corpus: &Corpus,
    vocab: &Vocabulary,
    model: &ModelConfig,
    max_source_length: usize,
    max_target_length: usize,
) -> Result<Vec<TrainingPair>> {
    let mut out = Vec::new();
    for ex in &corpus.examples {
        let source = encode_example(ex, vocab, model.max_level, max_source_length)?;
        for r in &ex.references {
            let target = encode_target(r, vocab, max_target_length)?;
            let (decoder_input, targets) = teacher_forcing(&target);
            out.push(TrainingPair {
                source: source.clone(),
                decoder_input,
                targets,
            });
        }
    }
    Ok(out)
}

fn mix(parts: &[u64]) -> u64 {
    // splitmix64 folded over the parts
    let mut h = 0x9e37_79b9_7f4a_7c15u64;
    for &p in parts {
        h ^= p;
        h = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = h;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        h = z ^ (z >> 31);
    }
    h
}

/// Pair order for one epoch.
pub fn epoch_order(n: usize, shuffle_seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(&[shuffle_seed, epoch as u64])));
    order
}

/// Identifies a stage in error messages and dropout seeding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Noisy,
    Clean,
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::Noisy => 1,
            Stage::Clean => 2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Stage::Noisy => "stage 1",
            Stage::Clean => "stage 2",
        }
    }
}

/// Averaged gradient and mean loss of one batch.
pub fn batch_gradient(
    params: &Parameters<f32>,
    pairs: &[&TrainingPair],
    dropout_seed: Option<u64>,
) -> Result<(f64, Gradients<f32>)> {
    let results: Vec<Result<(f64, Gradients<f32>)>> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = dropout_seed.map(|s| ChaCha8Rng::seed_from_u64(mix(&[s, i as u64])));
            loss_and_gradients(params, &p.source, &p.decoder_input, &p.targets, rng.as_mut())
        })
        .collect();
    let mut total = params.zeros_like();
    let mut loss = 0.0;
    for r in results {
        let (l, g) = r?;
        loss += l;
        total.add_assign(&g);
    }
    let n = pairs.len() as f64;
    total.scale(1.0 / n as f32);
    Ok((loss / n, total))
}

/// Trains for the epochs in `epochs` (0-based) and returns the mean
/// training loss of each. `on_epoch` runs after every epoch and may stop the
/// stage early.
#[allow(clippy::too_many_arguments)]
pub fn run_stage_epochs(
    params: &mut Parameters<f32>,
    adam: &mut AdamState<f32>,
    pairs: &[TrainingPair],
    stage: &StageConfig,
    which: Stage,
    adam_config: &AdamConfig,
    epochs: std::ops::Range<usize>,
    mut on_epoch: impl FnMut(usize, f64, &Parameters<f32>, &AdamState<f32>) -> Result<ControlFlow<()>>,
) -> Result<Vec<f64>> {
    stage.validate(which.name())?;
    if pairs.is_empty() {
        return Err(Error::Config(format!("{}: empty training corpus", which.name())));
    }
    let cfg = AdamConfig {
        lr: stage.learning_rate,
        ..*adam_config
    };
    let use_dropout = params.config.dropout_rate > 0.0;
    let mut losses = Vec::new();
    for epoch in epochs {
        let order = epoch_order(pairs.len(), stage.shuffle_seed, epoch);
        let mut sum = 0.0;
        for (step, chunk) in order.chunks(stage.batch_size).enumerate() {
            let batch: Vec<&TrainingPair> = chunk.iter().map(|&i| &pairs[i]).collect();
            let seed = use_dropout.then(|| mix(&[params.config.seed, which.tag(), epoch as u64, step as u64]));
            let context = || format!("{} epoch {} step {}", which.name(), epoch + 1, step + 1);
            let (loss, grads) = batch_gradient(params, &batch, seed)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    context: format!("{}: loss {loss}", context()),
                });
            }
            adam_step(params, &grads, adam, &cfg).map_err(|e| match e {
                Error::NonFinite { tensor } => Error::Diverged {
                    context: format!("{}: non-finite gradient in `{tensor}`", context()),
                },
                e => e,
            })?;
            sum += loss * batch.len() as f64;
        }
        let mean = sum / pairs.len() as f64;
        losses.push(mean);
        if on_epoch(epoch, mean, params, adam)?.is_break() {
            break;
        }
    }
    Ok(losses)
}

pub fn run_stage(
    params: &mut Parameters<f32>,
    adam: &mut AdamState<f32>,
    pairs: &[TrainingPair],
    stage: &StageConfig,
    which: Stage,
    adam_config: &AdamConfig,
) -> Result<Vec<f64>> {
    run_stage_epochs(params, adam, pairs, stage, which, adam_config, 0..stage.epochs, |_, _, _, _| Ok(ControlFlow::Continue(())))
}

/// Beam-decodes every example, input order.
pub fn generate(
    params: &Parameters<f32>,
    vocab: &Vocabulary,
    examples: &[Example],
    beam: &BeamConfig,
    max_source_length: usize,
) -> Result<Vec<String>> {
    if vocab.len() != params.config.vocab_size {
        return Err(Error::Config(format!(
            "vocabulary has {} entries, model expects {}",
            vocab.len(),
            params.config.vocab_size
        )));
    }
    examples
        .par_iter()
        .map(|ex| {
            let enc = encode_example(ex, vocab, params.config.max_level, max_source_length)?;
            decode(&beam_search_decode(params, &enc, beam)?, vocab)
        })
        .collect()
}

pub fn dev_bleu(predictions: &[String], dev: &Corpus) -> Result<f64> {
    let refs: Vec<Vec<&str>> = dev
        .examples
        .iter()
        .map(|e| e.references.iter().map(String::as_str).collect())
        .collect();
    corpus_bleu(predictions, &refs)
}

/// Where and how a pipeline persists its artifacts.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// Continue from `ckpt-last` in `out_dir` when present.
    pub resume: bool,
    /// Stop (without a report) after this many epochs counted across both
    /// stages; simulates an interrupted run.
    pub halt_after_epochs: Option<usize>,
    /// Per-epoch progress lines on stderr.
    pub verbose: bool,
}

pub const CONFIG_FILE: &str = "config.json";
pub const REPORT_FILE: &str = "report.json";
pub const TIMING_FILE: &str = "timing.json";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const BEST_CHECKPOINT: &str = "ckpt-best";
pub const LAST_CHECKPOINT: &str = "ckpt-last";

pub fn dev_predictions_file(epoch: usize) -> String {
    format!("dev-predictions-epoch{epoch}.txt")
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Progress {
    stage1_losses: Vec<f64>,
    epochs: Vec<EpochRecord>,
    /// Epochs finished in the current stage.
    done: usize,
    stage: u8,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

struct Run<'a> {
    opts: &'a RunOptions,
    vocab: &'a Vocabulary,
    epochs_run: usize,
    halted: bool,
}

impl Run<'_> {
    fn path(&self, name: &str) -> Option<PathBuf> {
        self.opts.out_dir.as_ref().map(|d| d.join(name))
    }

    fn checkpoint(&self, params: &Parameters<f32>, adam: Option<&AdamState<f32>>, progress: &Progress) -> Result<Checkpoint> {
        let mut ck = Checkpoint::new(params.clone());
        ck.adam = adam.cloned();
        ck.vocab = Some(self.vocab.clone());
        let p = serde_json::to_string(progress).map_err(|e| Error::Config(e.to_string()))?;
        ck.meta.insert("progress".into(), p);
        Ok(ck)
    }

    fn save_last(&self, params: &Parameters<f32>, adam: &AdamState<f32>, progress: &Progress) -> Result<()> {
        if let Some(p) = self.path(LAST_CHECKPOINT) {
            save_checkpoint(&p, &self.checkpoint(params, Some(adam), progress)?)?;
        }
        Ok(())
    }

    /// Counts a finished epoch and decides whether to go on.
    fn tick(&mut self) -> ControlFlow<()> {
        self.epochs_run += 1;
        self.halted = self.opts.halt_after_epochs.is_some_and(|h| self.epochs_run >= h);
        if self.halted {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    }
}

/// Builds the vocabulary the pipeline trains with.
pub fn pipeline_vocab(config: &PipelineConfig, corpora: &Corpora) -> Result<Vocabulary> {
    let mut sources = vec![corpora.train];
    if config.use_stage1 {
        sources.push(corpora.stage1.ok_or_else(|| Error::Config("stage 1 enabled without a stage-1 corpus".into()))?);
    }
    build_vocab(&sources, config.min_freq)
}

/// Fresh init, optional stage 1, then stage 2 with dev selection. Returns
/// `Ok(None)` only when `halt_after_epochs` stopped the run early.
pub fn run_pipeline(config: &PipelineConfig, corpora: &Corpora, opts: &RunOptions) -> Result<Option<TrainReport>> {
    let started = Instant::now();
    config.validate()?;
    if corpora.dev.is_empty() {
        return Err(Error::Config("empty dev corpus".into()));
    }
    for c in [Some(corpora.train), Some(corpora.dev), corpora.stage1.filter(|_| config.use_stage1)]
        .into_iter()
        .flatten()
    {
        c.validate()?;
    }
    if let Some(dir) = &opts.out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let vocab = pipeline_vocab(config, corpora)?;
    let model = config.resolved_model(vocab.len());
    let mut run = Run {
        opts,
        vocab: &vocab,
        epochs_run: 0,
        halted: false,
    };
    let mut resolved = config.clone();
    resolved.model = model.clone();
    if let Some(p) = run.path(CONFIG_FILE) {
        write(&p, json(&resolved)?)?;
    }
    if let Some(p) = run.path(VOCAB_FILE) {
        vocab.save(&p)?;
    }

    let prep = |c: &Corpus| prepare_pairs(c, &vocab, &model, config.max_source_length, config.max_target_length);
    let train_pairs = prep(corpora.train)?;
    let stage1_pairs = match (config.use_stage1, corpora.stage1) {
        (true, Some(c)) => Some(prep(c)?),
        _ => None,
    };

    let (mut params, mut adam, mut progress) = match run.path(LAST_CHECKPOINT).filter(|p| opts.resume && p.exists()) {
        Some(p) => {
            let ck = load_checkpoint(&p)?;
            if ck.params.config != model || ck.vocab.as_ref() != Some(&vocab) {
                return Err(Error::checkpoint(&p, "run configuration differs from the checkpoint"));
            }
            let progress: Progress = ck
                .meta
                .get("progress")
                .and_then(|s| serde_json::from_str(s).ok())
                .ok_or_else(|| Error::checkpoint(&p, "missing progress record"))?;
            let adam = ck.adam.ok_or_else(|| Error::checkpoint(&p, "missing optimizer state"))?;
            (ck.params, adam, progress)
        }
        None => {
            let params = Parameters::<f32>::init(&model)?;
            let adam = AdamState::new(&params);
            let progress = Progress {
                stage: if stage1_pairs.is_some() { 1 } else { 2 },
                ..Default::default()
            };
            (params, adam, progress)
        }
    };

    if progress.stage == 1 {
        let stage = config.stage1.as_ref().expect("validated");
        let pairs = stage1_pairs.as_ref().expect("stage 1 corpus prepared");
        let r = run_stage_epochs(
            &mut params,
            &mut adam,
            pairs,
            stage,
            Stage::Noisy,
            &config.adam,
            progress.done..stage.epochs,
            |epoch, loss, p, a| {
                progress.stage1_losses.push(loss);
                progress.done = epoch + 1;
                if opts.verbose {
                    eprintln!("stage 1 epoch {:>2}  loss {loss:.4}", epoch + 1);
                }
                run.save_last(p, a, &progress)?;
                Ok(run.tick())
            },
        );
        r?;
        if run.halted {
            return Ok(None);
        }
        // fresh optimizer for the clean stage
        adam = AdamState::new(&params);
        progress.stage = 2;
        progress.done = 0;
        run.save_last(&params, &adam, &progress)?;
    }

    let beam = config.beam_config();
    let r = run_stage_epochs(
        &mut params,
        &mut adam,
        &train_pairs,
        &config.stage2,
        Stage::Clean,
        &config.adam,
        progress.done..config.stage2.epochs,
        |epoch, loss, p, a| {
            let preds = generate(p, &vocab, &corpora.dev.examples, &beam, config.max_source_length)?;
            let bleu = dev_bleu(&preds, corpora.dev)?;
            let k = epoch + 1;
            if let Some(path) = run.path(&dev_predictions_file(k)) {
                let mut text = preds.join("\n");
                text.push('\n');
                write(&path, text)?;
            }
            let previous: Vec<f64> = progress.epochs.iter().map(|e| e.dev_bleu).collect();
            progress.epochs.push(EpochRecord {
                epoch: k,
                train_loss: loss,
                dev_bleu: bleu,
            });
            progress.done = k;
            if opts.verbose {
                eprintln!("stage 2 epoch {k:>2}  loss {loss:.4}  dev BLEU {bleu:.2}");
            }
            let improved = previous.iter().all(|&b| bleu > b || b.is_nan()) && !bleu.is_nan();
            if let (true, Some(path)) = (improved, run.path(BEST_CHECKPOINT)) {
                let mut ck = run.checkpoint(p, None, &progress)?;
                ck.meta.insert("epoch".into(), k.to_string());
                save_checkpoint(&path, &ck)?;
            }
            run.save_last(p, a, &progress)?;
            Ok(run.tick())
        },
    );
    r?;
    if run.halted {
        return Ok(None);
    }

    let scores: Vec<f64> = progress.epochs.iter().map(|e| e.dev_bleu).collect();
    let selected = select_epoch(&scores).unwrap_or(1);
    let report = TrainReport {
        stage1_losses: progress.stage1_losses,
        selected_dev_bleu: scores.get(selected - 1).copied().unwrap_or(f64::NAN),
        epochs: progress.epochs,
        selected_epoch: selected,
        selected_checkpoint_path: opts.out_dir.as_ref().map(|_| BEST_CHECKPOINT.to_string()),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    if let Some(p) = run.path(REPORT_FILE) {
        write(&p, json(&report)?)?;
    }
    if let Some(p) = run.path(TIMING_FILE) {
        write(&p, json(&serde_json::json!({ "wall_time_seconds": report.wall_time_seconds }))?)?;
    }
    Ok(Some(report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{KnowledgeGraph, Triple};

    #[test]
    fn selection_takes_earliest_maximum() {
        assert_eq!(select_epoch(&[10.0, 30.0, 20.0]), Some(2));
        assert_eq!(select_epoch(&[5.0, 7.0, 7.0]), Some(2));
        assert_eq!(select_epoch(&[f64::NAN, 1.0]), Some(2));
        assert_eq!(select_epoch(&[]), None);
    }

    #[test]
    fn epoch_order_is_a_seeded_permutation() {
        let a = epoch_order(50, 3, 0);
        let mut s = a.clone();
        s.sort();
        assert_eq!(s, (0..50).collect::<Vec<_>>());
        assert_eq!(a, epoch_order(50, 3, 0));
        assert_ne!(a, epoch_order(50, 3, 1));
    }

    fn tiny_corpus() -> Corpus {
        let g = KnowledgeGraph::new(vec![Triple::new("Ab", "likes", "Cd")]);
        Corpus::new("train", vec![Example::new("x", g, vec!["Ab likes Cd .".into()])])
    }

    #[test]
    fn one_pair_one_epoch_is_one_step() {
        let c = tiny_corpus();
        let vocab = build_vocab(&[&c], 1).unwrap();
        let model = ModelConfig {
            d_model: 8,
            n_heads: 2,
            d_ff: 8,
            n_layers: 1,
            ..Default::default()
        }
        .with_vocab_size(vocab.len());
        let pairs = prepare_pairs(&c, &vocab, &model, 100, 100).unwrap();
        let mut p = Parameters::<f32>::init(&model).unwrap();
        let mut a = AdamState::new(&p);
        let stage = StageConfig {
            epochs: 1,
            batch_size: 1,
            learning_rate: 1e-3,
            shuffle_seed: 0,
        };
        run_stage(&mut p, &mut a, &pairs, &stage, Stage::Clean, &AdamConfig::default()).unwrap();
        assert_eq!(a.t, 1);
        let zero = StageConfig { epochs: 0, ..stage };
        assert!(run_stage(&mut p, &mut a, &pairs, &zero, Stage::Clean, &AdamConfig::default()).is_err());
    }
}
