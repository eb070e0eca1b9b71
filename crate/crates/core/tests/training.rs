use std::path::Path;

use g2t_core::data::{generate_synthetic, split_at, SynthConfig};
use g2t_core::graph::Corpus;
use g2t_core::model::{load_checkpoint, ModelConfig};
use g2t_core::train::{
    dev_predictions_file, run_pipeline, select_epoch, Corpora, PipelineConfig, RunOptions, StageConfig, TrainReport,
    BEST_CHECKPOINT, LAST_CHECKPOINT, REPORT_FILE,
};
use tempfile::TempDir;

struct Data {
    noisy: Corpus,
    train: Corpus,
    dev: Corpus,
}

fn data() -> Data {
    let (clean, noisy) = generate_synthetic(&SynthConfig {
        n_examples: 36,
        n_noisy: 108,
        n_entities: 12,
        n_relations: 4,
        max_triples: 3,
        ..SynthConfig::default()
    })
    .unwrap();
    let (train, dev) = split_at(&clean, 30, "train", "dev");
    Data { noisy, train, dev }
}

fn config(use_stage1: bool, use_position: bool) -> PipelineConfig {
    let stage = |epochs| StageConfig {
        epochs,
        batch_size: 4,
        learning_rate: 1e-3,
        shuffle_seed: 1,
    };
    PipelineConfig {
        model: ModelConfig {
            d_model: 16,
            n_heads: 2,
            d_ff: 24,
            n_layers: 1,
            ..ModelConfig::default()
        },
        stage1: Some(stage(2)),
        stage2: stage(3),
        use_stage1,
        use_position_embeddings: use_position,
        beam_size: 2,
        max_target_length: 30,
        ..PipelineConfig::default()
    }
}

fn run(d: &Data, c: &PipelineConfig, opts: &RunOptions) -> Option<TrainReport> {
    let corpora = Corpora {
        stage1: Some(&d.noisy),
        train: &d.train,
        dev: &d.dev,
    };
    run_pipeline(c, &corpora, opts).unwrap()
}

fn in_dir(dir: &Path) -> RunOptions {
    RunOptions {
        out_dir: Some(dir.to_path_buf()),
        ..RunOptions::default()
    }
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn selection_examples() {
    assert_eq!(select_epoch(&[10.0, 30.0, 20.0]), Some(2));
    assert_eq!(select_epoch(&[0.0]), Some(1));
}

#[test]
fn reruns_write_identical_reports() {
    let d = data();
    let c = config(true, true);
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run(&d, &c, &in_dir(a.path())).unwrap();
    run(&d, &c, &in_dir(b.path())).unwrap();
    assert_eq!(read(a.path().join(REPORT_FILE)), read(b.path().join(REPORT_FILE)));
    for k in 1..=3 {
        let f = dev_predictions_file(k);
        assert_eq!(read(a.path().join(&f)), read(b.path().join(&f)));
    }
}

#[test]
fn resumed_run_matches_uninterrupted_run() {
    let d = data();
    let c = config(true, true);
    let whole = TempDir::new().unwrap();
    run(&d, &c, &in_dir(whole.path())).unwrap();
    // interrupt once inside stage 1 and once inside stage 2
    for halt in [1, 3] {
        let dir = TempDir::new().unwrap();
        let halted = RunOptions {
            halt_after_epochs: Some(halt),
            ..in_dir(dir.path())
        };
        assert!(run(&d, &c, &halted).is_none());
        assert!(!dir.path().join(REPORT_FILE).exists());
        let resumed = RunOptions {
            resume: true,
            ..in_dir(dir.path())
        };
        run(&d, &c, &resumed).unwrap();
        assert_eq!(read(dir.path().join(REPORT_FILE)), read(whole.path().join(REPORT_FILE)), "halt {halt}");
    }
}

#[test]
fn optimizer_restarts_for_the_clean_stage() {
    let d = data();
    let dir = TempDir::new().unwrap();
    let report = run(&d, &config(true, true), &in_dir(dir.path())).unwrap();
    assert_eq!(report.stage1_losses.len(), 2);
    let ck = load_checkpoint(&dir.path().join(LAST_CHECKPOINT)).unwrap();
    // 30 pairs in batches of 4 over 3 epochs; stage-1 steps are not counted
    assert_eq!(ck.adam.unwrap().t, 8 * 3);
}

#[test]
fn ablation_cells_all_run() {
    let d = data();
    for stage1 in [false, true] {
        for position in [false, true] {
            let dir = TempDir::new().unwrap();
            let r = run(&d, &config(stage1, position), &in_dir(dir.path())).unwrap();
            assert_eq!(r.epochs.len(), 3);
            assert_eq!(r.stage1_losses.len(), if stage1 { 2 } else { 0 });
            assert!((1..=3).contains(&r.selected_epoch));
            let best = load_checkpoint(&dir.path().join(BEST_CHECKPOINT)).unwrap();
            assert_eq!(best.meta["epoch"], r.selected_epoch.to_string());
            let p = &best.params;
            let untouched = [p.layout.role_embedding, p.layout.level_embedding]
                .iter()
                .all(|&t| p.tensors[t].data.iter().all(|&x| x == 0.0));
            assert_eq!(untouched, !position);
            let lines = read(dir.path().join(dev_predictions_file(1))).lines().count();
            assert_eq!(lines, d.dev.len());
        }
    }
}

#[test]
fn stage1_without_corpus_is_a_config_error() {
    let d = data();
    let corpora = Corpora {
        stage1: None,
        train: &d.train,
        dev: &d.dev,
    };
    assert!(run_pipeline(&config(true, true), &corpora, &RunOptions::default()).is_err());
}
