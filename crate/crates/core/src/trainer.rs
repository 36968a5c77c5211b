//! Fine-tuning with a decoupled-weight-decay Adam optimizer, a learning-rate
//! grid, and best-checkpoint selection on validation F1.
//!
//! Every run is a pure function of (config, data, initial parameters): batch
//! order is derived from the seed and epoch index, and evaluation has no
//! stochastic parts.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{DatasetSplit, Label};
use crate::error::{Error, Result};
use crate::metrics::{self, EvaluationReport};
use crate::model::{decide, Classifier, Gradients};
use crate::preprocess::TokenSequence;

#[derive(Debug, Clone, Serialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// The grid of base learning rates; each is multiplied by
    /// `lr_multiplier` before use.
    pub learning_rates: Vec<f64>,
    pub epochs: usize,
    pub weight_decay: f64,
    pub seed: u64,
    pub max_len: usize,
    /// Scales the whole grid. Rates near 1e-5 suit large pretrained
    /// encoders; the small toy encoder trains at roughly 200x that.
    pub lr_multiplier: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            learning_rates: vec![1e-5, 2e-5, 5e-5],
            epochs: 30,
            weight_decay: 0.01,
            seed: 42,
            max_len: 128,
            lr_multiplier: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.learning_rates.is_empty() {
            return Err(Error::Config("learning_rates must not be empty".into()));
        }
        if self
            .learning_rates
            .iter()
            .any(|lr| !lr.is_finite() || *lr <= 0.0)
        {
            return Err(Error::Config(
                "learning rates must be positive and finite".into(),
            ));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.max_len < 2 {
            return Err(Error::Config("max_len must be at least 2".into()));
        }
        if !self.lr_multiplier.is_finite() || self.lr_multiplier <= 0.0 {
            return Err(Error::Config("lr_multiplier must be positive".into()));
        }
        Ok(())
    }
}

/// One completed epoch of one learning-rate run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based epoch index.
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_f1: f64,
}

/// The epoch records of one learning-rate run.
#[derive(Debug, Clone, Serialize)]
pub struct LrHistory {
    pub lr: f64,
    pub records: Vec<EpochRecord>,
}

/// Output of a single learning-rate run.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub records: Vec<EpochRecord>,
    /// Parameters snapshotted at the best epoch of this run.
    pub best: Classifier,
    pub best_epoch: usize,
    pub best_dev_f1: f64,
    /// Optimization steps taken: epochs x ceil(|train| / batch_size).
    pub steps: usize,
}

/// Output of the full grid search.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub best_checkpoint: Classifier,
    pub best_lr: f64,
    pub best_epoch: usize,
    pub best_dev_f1: f64,
    pub history: Vec<LrHistory>,
    /// Each learning rate's own best snapshot, parallel to `history`.
    pub per_lr_best: Vec<Classifier>,
}

/// The winning (lr, epoch) pair under the selection rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestPick {
    pub lr: f64,
    pub epoch: usize,
    pub dev_f1: f64,
}

/// Picks the maximum dev F1 over all (lr, epoch) pairs. Ties break toward
/// the earlier epoch, then the smaller learning rate.
pub fn select_best(history: &[LrHistory]) -> Option<BestPick> {
    let mut best: Option<BestPick> = None;
    for run in history {
        for record in &run.records {
            let candidate = BestPick {
                lr: run.lr,
                epoch: record.epoch,
                dev_f1: record.dev_f1,
            };
            let better = match best {
                None => true,
                Some(cur) => {
                    candidate.dev_f1 > cur.dev_f1
                        || (candidate.dev_f1 == cur.dev_f1
                            && (candidate.epoch < cur.epoch
                                || (candidate.epoch == cur.epoch && candidate.lr < cur.lr)))
                }
            };
            if better {
                best = Some(candidate);
            }
        }
    }
    best
}

/// Adam with decoupled weight decay (beta1 0.9, beta2 0.999, eps 1e-8).
/// With zero gradients a step shrinks parameters by exactly `1 - lr * decay`.
pub struct AdamW {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    weight_decay: f64,
    step_count: usize,
    m: Gradients,
    v: Gradients,
}

impl AdamW {
    pub fn new(lr: f64, weight_decay: f64, model: &Classifier) -> Self {
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            step_count: 0,
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
        }
    }

    pub fn step(&mut self, model: &mut Classifier, grads: &Gradients) {
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);

        let params = model.param_slices_mut();
        let gs = grads.slices();
        let ms = self.m.slices_mut();
        let vs = self.v.slices_mut();
        for (((p, g), m), v) in params.into_iter().zip(gs).zip(ms).zip(vs) {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= self.lr * (m_hat / (v_hat.sqrt() + self.epsilon)
                    + self.weight_decay * p[i]);
            }
        }
    }
}

/// Machine-parseable training-log line for one epoch.
pub fn format_epoch_line(lr: f64, record: &EpochRecord) -> String {
    format!(
        "lr={lr} epoch={} loss={} dev_f1={}",
        record.epoch, record.train_loss, record.dev_f1
    )
}

/// Batch order for one epoch: a pure function of (seed, epoch).
fn shuffled_indices(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let stream = seed.wrapping_add((epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    indices
}

fn require_labels(split: &DatasetSplit) -> Result<Vec<Label>> {
    split
        .records
        .iter()
        .map(|r| {
            r.label.ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "record {:?} in the {} split has no label",
                    r.id, split.name
                ))
            })
        })
        .collect()
}

/// Scores a classifier on a labeled split with positive-class F1 semantics.
pub fn evaluate_classifier(model: &Classifier, split: &DatasetSplit) -> Result<EvaluationReport> {
    let gold = require_labels(split)?;
    let mut pred = Vec::with_capacity(split.len());
    for record in &split.records {
        let y = model.predict_text(&record.text)?;
        pred.push(decide(y));
    }
    metrics::evaluate(&gold, &pred)
}

fn dev_f1(model: &Classifier, seqs: &[TokenSequence], gold: &[Label]) -> Result<f64> {
    let mut pred = Vec::with_capacity(seqs.len());
    for seq in seqs {
        pred.push(decide(model.predict_prob(seq)?));
    }
    Ok(metrics::evaluate(gold, &pred)?.f1)
}

/// Trains one learning rate for the full epoch budget, snapshotting the
/// parameters of the best validation epoch.
pub fn train_one(
    config: &TrainConfig,
    lr: f64,
    train: &DatasetSplit,
    valid: &DatasetSplit,
    init: &Classifier,
) -> Result<TrainRun> {
    run_one(config, lr, train, valid, init, &mut |_, _| {})
}

fn run_one(
    config: &TrainConfig,
    lr: f64,
    train: &DatasetSplit,
    valid: &DatasetSplit,
    init: &Classifier,
    on_epoch: &mut dyn FnMut(f64, &EpochRecord),
) -> Result<TrainRun> {
    config.validate()?;
    if !(lr.is_finite() && lr > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    if train.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    if valid.is_empty() {
        return Err(Error::InvalidArgument("validation split is empty".into()));
    }
    if init.spec().max_len != config.max_len {
        return Err(Error::Config(format!(
            "config max_len {} does not match the encoder's max_len {}",
            config.max_len,
            init.spec().max_len
        )));
    }
    let train_gold = require_labels(train)?;
    let valid_gold = require_labels(valid)?;

    let mut model = init.clone();

    // Tokenize once; epochs only reorder.
    let examples = train
        .records
        .iter()
        .zip(&train_gold)
        .map(|(r, &label)| model.encode_example(&r.text, label))
        .collect::<Result<Vec<_>>>()?;
    let valid_seqs = valid
        .records
        .iter()
        .map(|r| model.prepare(&r.text))
        .collect::<Result<Vec<_>>>()?;

    let mut optimizer = AdamW::new(lr, config.weight_decay, &model);
    let mut grads = Gradients::zeros_like(&model);
    let mut records = Vec::with_capacity(config.epochs);
    let mut best: Option<(usize, f64, Classifier)> = None;
    let mut step = 0_usize;

    for epoch in 1..=config.epochs {
        let order = shuffled_indices(examples.len(), config.seed, epoch);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let loss = model.batch_loss_and_grads(&batch, &mut grads);
            step += 1;
            if !loss.is_finite() {
                return Err(Error::Diverged { step });
            }
            optimizer.step(&mut model, &grads);
            loss_sum += loss * batch.len() as f64;
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / examples.len() as f64,
            dev_f1: dev_f1(&model, &valid_seqs, &valid_gold)?,
        };
        on_epoch(lr, &record);
        // Strict improvement keeps the earliest epoch on ties.
        if best.as_ref().is_none_or(|(_, f, _)| record.dev_f1 > *f) {
            best = Some((epoch, record.dev_f1, model.clone()));
        }
        records.push(record);
    }

    let (best_epoch, best_dev_f1, best_model) = best.expect("at least one epoch ran");
    Ok(TrainRun {
        records,
        best: best_model,
        best_epoch,
        best_dev_f1,
        steps: step,
    })
}

/// Runs every learning rate in the grid from an identical copy of `init` and
/// selects the global best (lr, epoch) pair.
pub fn grid_search(
    config: &TrainConfig,
    train: &DatasetSplit,
    valid: &DatasetSplit,
    init: &Classifier,
) -> Result<TrainResult> {
    grid_search_observed(config, train, valid, init, |_, _| {})
}

/// [`grid_search`] with a per-epoch observer, for logging.
pub fn grid_search_observed(
    config: &TrainConfig,
    train: &DatasetSplit,
    valid: &DatasetSplit,
    init: &Classifier,
    mut on_epoch: impl FnMut(f64, &EpochRecord),
) -> Result<TrainResult> {
    config.validate()?;
    let mut history = Vec::with_capacity(config.learning_rates.len());
    let mut per_lr_best = Vec::with_capacity(config.learning_rates.len());

    for &base_lr in &config.learning_rates {
        let lr = base_lr * config.lr_multiplier;
        let run = run_one(config, lr, train, valid, init, &mut on_epoch).map_err(|e| {
            Error::LearningRateRun {
                lr,
                source: Box::new(e),
            }
        })?;
        history.push(LrHistory {
            lr,
            records: run.records,
        });
        per_lr_best.push(run.best);
    }

    let pick = select_best(&history).expect("grid is non-empty");
    let winner_index = history
        .iter()
        .position(|run| run.lr == pick.lr)
        .expect("winning run exists");
    Ok(TrainResult {
        best_checkpoint: per_lr_best[winner_index].clone(),
        best_lr: pick.lr,
        best_epoch: pick.epoch,
        best_dev_f1: pick.dev_f1,
        history,
        per_lr_best,
    })
}
