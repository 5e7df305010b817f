//! Fine-tuning: seeded shuffled epochs, a learning-rate/batch-size grid,
//! dev-set model selection, and atomic per-point checkpointing.

mod lstm;

pub use lstm::{load_word_embeddings, LstmConfig, LstmModel};

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::StancePair;
use crate::encoder::{load_pretrained, Encoder, EncoderSpec, Pass, Vocabulary, WordLevelVocab};
use crate::error::{Error, Result};
use crate::eval::{evaluate_records, predict_records_with};
use crate::model::{save_checkpoint, BatchLossNodes, ModelKind, Prediction, StancyModel};
use crate::nn::{clip_global_norm, Adam, AdamParams, ParamStore, Tape};
use crate::seeding;

/// Optimizer selection; Adam is the only implementation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    #[default]
    Adam,
}

/// Hyperparameter grid; training runs once per (learning_rate, batch_size)
/// combination, learning rates outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

impl GridSpec {
    /// The grid used for full-scale fine-tuning runs.
    pub fn full_scale() -> GridSpec {
        GridSpec {
            learning_rates: vec![1e-5, 3e-5, 5e-5],
            batch_sizes: vec![24, 28, 32],
        }
    }
}

fn default_variant() -> ModelKind {
    ModelKind::Cons
}
fn default_learning_rate() -> f64 {
    3e-5
}
fn default_batch_size() -> usize {
    32
}
fn default_epochs() -> usize {
    3
}
fn default_cos_weight() -> f64 {
    1.0
}
fn default_clip_norm() -> f64 {
    1.0
}

/// Training hyperparameters. `learning_rate`/`batch_size` name a single
/// point; a `grid` replaces them with its cross product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_variant")]
    pub variant: ModelKind,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    #[serde(default)]
    pub adam: AdamParams,
    /// Weight on the consistency-loss term; 1.0 reproduces the plain
    /// unweighted sum with cross-entropy.
    #[serde(default = "default_cos_weight")]
    pub cos_weight: f64,
    /// Global-norm gradient clipping threshold; 0 disables clipping.
    #[serde(default = "default_clip_norm")]
    pub clip_norm: f64,
    /// Fraction of total steps spent ramping the learning rate linearly up
    /// from zero; 0.0 keeps it constant.
    #[serde(default)]
    pub warmup_fraction: f64,
    #[serde(default)]
    pub detach_cosine_feature: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: ModelKind::Cons,
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            seed: 0,
            optimizer: OptimizerKind::Adam,
            adam: AdamParams::default(),
            cos_weight: default_cos_weight(),
            clip_norm: default_clip_norm(),
            warmup_fraction: 0.0,
            detach_cosine_feature: false,
            grid: None,
        }
    }
}

impl TrainConfig {
    /// Check every bound and collect all violations.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            problems.push(format!("train.learning_rate {} must be positive", self.learning_rate));
        }
        if self.batch_size == 0 {
            problems.push("train.batch_size must be at least 1".to_string());
        }
        if self.epochs == 0 {
            problems.push("train.epochs must be at least 1".to_string());
        }
        if !(self.cos_weight >= 0.0 && self.cos_weight.is_finite()) {
            problems.push(format!("train.cos_weight {} must be non-negative", self.cos_weight));
        }
        if !(self.clip_norm >= 0.0 && self.clip_norm.is_finite()) {
            problems.push(format!(
                "train.clip_norm {} must be zero (off) or positive",
                self.clip_norm
            ));
        }
        if !(0.0..=1.0).contains(&self.warmup_fraction) {
            problems.push(format!(
                "train.warmup_fraction {} outside [0, 1]",
                self.warmup_fraction
            ));
        }
        if let Some(grid) = &self.grid {
            if grid.learning_rates.is_empty() {
                problems.push("train.grid.learning_rates is empty".to_string());
            }
            if grid.batch_sizes.is_empty() {
                problems.push("train.grid.batch_sizes is empty".to_string());
            }
            if grid.learning_rates.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
                problems.push("train.grid.learning_rates must all be positive".to_string());
            }
            if grid.batch_sizes.contains(&0) {
                problems.push("train.grid.batch_sizes must all be at least 1".to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(problems))
        }
    }

    /// The grid points this config expands to.
    pub fn grid_points(&self) -> Vec<GridPoint> {
        match &self.grid {
            None => vec![GridPoint {
                index: 0,
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
            }],
            Some(grid) => {
                let mut points = Vec::new();
                for &lr in &grid.learning_rates {
                    for &bs in &grid.batch_sizes {
                        points.push(GridPoint {
                            index: points.len(),
                            learning_rate: lr,
                            batch_size: bs,
                        });
                    }
                }
                points
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

/// Per-epoch training record; losses are means per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub train_ce: f64,
    pub train_cos: Option<f64>,
    pub train_joint: f64,
    pub dev_macro_f1: f64,
    pub steps: u64,
}

/// One grid point's outcome. `failed` carries the divergence note when the
/// point was aborted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub grid_index: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub adam: AdamParams,
    pub epochs: Vec<EpochReport>,
    pub best_epoch: Option<usize>,
    pub best_dev_macro_f1: Option<f64>,
    pub checkpoint: Option<PathBuf>,
    pub failed: Option<String>,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.failed.is_none() && self.best_dev_macro_f1.is_some()
    }
}

/// Whole-grid outcome: every run, the dev-selected winner, and where its
/// checkpoint lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub runs: Vec<RunReport>,
    /// Index into `runs` of the selected point.
    pub selected: usize,
    pub best_checkpoint: PathBuf,
}

/// Where model parameters come from.
pub enum ModelSource {
    /// Randomly initialized encoder with a word-level vocabulary built from
    /// the training and dev texts.
    FreshEncoder { spec: EncoderSpec },
    /// Encoder imported from a published pretrained checkpoint directory.
    PretrainedEncoder { dir: PathBuf },
    /// Frozen word-embedding table for the recurrent baseline.
    WordEmbeddings { path: PathBuf, lstm: LstmConfig },
}

/// Anything the grid loop can optimize: builds a batch loss graph, scores
/// pairs, and writes checkpoints.
pub trait TrainableModel: Sync {
    fn batch_loss(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &[StancePair],
        cos_weight: f64,
        pass: &mut Pass,
    ) -> Result<BatchLossNodes>;

    fn predict_pair(&self, store: &ParamStore, pair: &StancePair) -> Result<Prediction>;

    fn save(&self, dir: &Path, store: &ParamStore, train_config: &TrainConfig) -> Result<()>;
}

impl TrainableModel for StancyModel {
    fn batch_loss(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &[StancePair],
        cos_weight: f64,
        pass: &mut Pass,
    ) -> Result<BatchLossNodes> {
        self.batch_loss_nodes(tape, store, batch, cos_weight, pass)
    }

    fn predict_pair(&self, store: &ParamStore, pair: &StancePair) -> Result<Prediction> {
        StancyModel::predict_pair(self, store, pair)
    }

    fn save(&self, dir: &Path, store: &ParamStore, train_config: &TrainConfig) -> Result<()> {
        save_checkpoint(
            dir,
            ModelKind::from_variant(self.variant),
            Some(&self.encoder.spec),
            &self.encoder.vocab,
            store,
            self.detach_cosine_feature,
            serde_json::json!({ "train_config": train_config }),
        )
    }
}

/// Train per the config and pick the best grid point by dev macro-F1.
/// Checkpoints land under `<out>/grid-<i>/`, the winner is copied to
/// `<out>/best/`, and the full report is written to
/// `<out>/train_report.json`.
pub fn train(
    config: &TrainConfig,
    source: &ModelSource,
    train_pairs: &[StancePair],
    dev_pairs: &[StancePair],
    out_dir: &Path,
) -> Result<TrainReport> {
    config.validate()?;
    if train_pairs.is_empty() || dev_pairs.is_empty() {
        return Err(Error::Training(
            "training and dev splits must both be non-empty".into(),
        ));
    }
    match (config.variant, source) {
        (ModelKind::LstmBaseline, ModelSource::WordEmbeddings { path, lstm }) => {
            let (model, template) =
                LstmModel::from_corpus(lstm.clone(), path, train_pairs, dev_pairs, config.seed)?;
            run_grid(config, &model, &template, train_pairs, dev_pairs, out_dir)
        }
        (ModelKind::LstmBaseline, _) => Err(Error::Contract(
            "the lstm_baseline variant needs a word-embedding source".into(),
        )),
        (_, ModelSource::WordEmbeddings { .. }) => Err(Error::Contract(
            "transformer variants need an encoder source, not word embeddings".into(),
        )),
        (kind, _) => {
            let variant = kind.variant().expect("transformer kind");
            let (mut model, template) = match source {
                ModelSource::FreshEncoder { spec } => {
                    let texts = train_pairs
                        .iter()
                        .chain(dev_pairs)
                        .flat_map(|p| [p.claim_text.as_str(), p.perspective_text.as_str()]);
                    let vocab = Vocabulary::WordLevel(WordLevelVocab::build(texts));
                    let encoder = Encoder::new(spec.clone(), vocab)?;
                    let model = StancyModel::new(variant, encoder);
                    let mut store = ParamStore::new();
                    model.init_params(&mut store, seeding::derive_seed(config.seed, "model-init"));
                    (model, store)
                }
                ModelSource::PretrainedEncoder { dir } => {
                    let (encoder, mut store) = load_pretrained(dir)?;
                    let model = StancyModel::new(variant, encoder);
                    model.init_head_params(
                        &mut store,
                        seeding::derive_seed(config.seed, "model-init"),
                    );
                    (model, store)
                }
                ModelSource::WordEmbeddings { .. } => unreachable!("handled above"),
            };
            model.detach_cosine_feature = config.detach_cosine_feature;
            run_grid(config, &model, &template, train_pairs, dev_pairs, out_dir)
        }
    }
}

/// Pick the winning run: highest dev macro-F1, ties to the lower learning
/// rate, then the smaller batch.
pub fn select_best(runs: &[RunReport]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, run) in runs.iter().enumerate() {
        if !run.succeeded() {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                let (bf, rf) = (runs[b].best_dev_macro_f1.unwrap(), run.best_dev_macro_f1.unwrap());
                rf > bf
                    || (rf == bf
                        && (run.learning_rate < runs[b].learning_rate
                            || (run.learning_rate == runs[b].learning_rate
                                && run.batch_size < runs[b].batch_size)))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best.ok_or_else(|| {
        Error::Training(if runs.is_empty() {
            "no training runs to select from".into()
        } else {
            "every grid point failed".into()
        })
    })
}

/// Learning rate at a 1-based step under an optional linear warmup.
fn lr_at(step: u64, total_steps: u64, base: f64, warmup_fraction: f64) -> f64 {
    let warm = (warmup_fraction * total_steps as f64).floor() as u64;
    if warm == 0 || step > warm {
        base
    } else {
        base * step as f64 / warm as f64
    }
}

fn run_grid<M: TrainableModel>(
    config: &TrainConfig,
    model: &M,
    template: &ParamStore,
    train_pairs: &[StancePair],
    dev_pairs: &[StancePair],
    out_dir: &Path,
) -> Result<TrainReport> {
    fs::create_dir_all(out_dir)?;
    let points = config.grid_points();
    let mut runs = Vec::with_capacity(points.len());
    for point in &points {
        log::info!(
            "grid point {}: lr={} batch={}",
            point.index,
            point.learning_rate,
            point.batch_size
        );
        runs.push(run_point(config, model, template, point, train_pairs, dev_pairs, out_dir)?);
    }
    let selected = select_best(&runs)?;
    let best_dir = out_dir.join("best");
    let src = runs[selected]
        .checkpoint
        .as_ref()
        .expect("selected run has a checkpoint");
    copy_checkpoint(src, &best_dir)?;
    let report = TrainReport {
        config: config.clone(),
        runs,
        selected,
        best_checkpoint: best_dir,
    };
    fs::write(
        out_dir.join("train_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(report)
}

fn run_point<M: TrainableModel>(
    config: &TrainConfig,
    model: &M,
    template: &ParamStore,
    point: &GridPoint,
    train_pairs: &[StancePair],
    dev_pairs: &[StancePair],
    out_dir: &Path,
) -> Result<RunReport> {
    let mut store = template.clone();
    let mut adam = Adam::new(&store, config.adam);
    let steps_per_epoch = train_pairs.len().div_ceil(point.batch_size) as u64;
    let total_steps = steps_per_epoch * config.epochs as u64;
    let mut dropout_rng = seeding::rng_for_indexed(config.seed, "dropout", &[point.index as u64]);
    let point_dir = out_dir.join(format!("grid-{}", point.index));

    let mut epochs: Vec<EpochReport> = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    let mut failed = None;

    'training: for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train_pairs.len()).collect();
        let mut shuffle_rng = seeding::rng_for_indexed(
            config.seed,
            "shuffle",
            &[point.index as u64, epoch as u64],
        );
        order.shuffle(&mut shuffle_rng);

        let mut ce_sum = 0.0;
        let mut cos_sum = 0.0;
        let mut joint_sum = 0.0;
        let mut has_cos = false;
        let mut instance_count = 0usize;
        let mut steps = 0u64;
        for chunk in order.chunks(point.batch_size) {
            let batch: Vec<StancePair> = chunk.iter().map(|&i| train_pairs[i].clone()).collect();
            store.zero_grads();
            let mut tape = Tape::new();
            let mut pass = Pass::Train {
                dropout_rng: &mut dropout_rng,
            };
            let nodes = model.batch_loss(&mut tape, &store, &batch, config.cos_weight, &mut pass)?;
            let joint = tape.scalar(nodes.joint);
            if !joint.is_finite() {
                failed = Some(format!(
                    "non-finite loss at epoch {epoch}, step {}",
                    steps + 1
                ));
                break 'training;
            }
            tape.backward(nodes.joint, &mut store);
            if config.clip_norm > 0.0 {
                clip_global_norm(&mut store, config.clip_norm);
            }
            let lr = lr_at(
                adam.step_count() + 1,
                total_steps,
                point.learning_rate,
                config.warmup_fraction,
            );
            adam.step(&mut store, lr);

            let n = batch.len() as f64;
            ce_sum += tape.scalar(nodes.ce_mean) * n;
            if let Some(c) = nodes.cos_mean {
                cos_sum += tape.scalar(c) * n;
                has_cos = true;
            }
            joint_sum += joint * n;
            instance_count += batch.len();
            steps += 1;
        }

        let records = predict_records_with(dev_pairs, |p| model.predict_pair(&store, p))?;
        let dev = evaluate_records(&records)?;
        let n = instance_count as f64;
        epochs.push(EpochReport {
            epoch,
            train_ce: ce_sum / n,
            train_cos: has_cos.then_some(cos_sum / n),
            train_joint: joint_sum / n,
            dev_macro_f1: dev.macro_f1,
            steps,
        });
        log::info!(
            "grid {} epoch {epoch}: joint {:.4}, dev macro-F1 {:.2}",
            point.index,
            joint_sum / n,
            dev.macro_f1
        );

        if best.is_none_or(|(_, f)| dev.macro_f1 > f) {
            best = Some((epoch, dev.macro_f1));
            model.save(&point_dir, &store, config)?;
        }
    }

    Ok(RunReport {
        grid_index: point.index,
        learning_rate: point.learning_rate,
        batch_size: point.batch_size,
        seed: config.seed,
        adam: config.adam,
        epochs,
        best_epoch: best.map(|(e, _)| e),
        best_dev_macro_f1: best.map(|(_, f)| f),
        checkpoint: best.is_some().then(|| point_dir.clone()),
        failed,
    })
}

/// Copy a (flat) checkpoint directory atomically.
fn copy_checkpoint(src: &Path, dst: &Path) -> Result<()> {
    let parent = match dst.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = dst
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Checkpoint(format!("bad checkpoint path {}", dst.display())))?;
    let tmp = parent.join(format!(".{name}.tmp-{}", std::process::id()));
    if tmp.exists() {
        fs::remove_dir_all(&tmp)?;
    }
    fs::create_dir_all(&tmp)?;
    for entry in fs::read_dir(src)? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            fs::copy(entry.path(), tmp.join(entry.file_name()))?;
        }
    }
    if dst.exists() {
        fs::remove_dir_all(dst)?;
    }
    fs::rename(&tmp, dst)?;
    Ok(())
}
