use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::batches::make_batches;
use super::config::{cosine_lr, TrainConfig};
use super::folds::{split_indices, FoldSplit};
use super::loss::{add_l2_gradient, l2_penalty};
use super::TrainError;
use crate::model::{
    build_model, model_backward, model_forward, predict, update_running_stats, ModelConfig,
    ModelError, ModelParams,
};
use crate::nn::{Matrix, Mode, NnError};
use crate::preprocess::EpochDataset;

/// Epochs per inference-mode forward pass during evaluation.
const EVAL_CHUNK: usize = 128;
/// Generator stream for dropout masks; batching uses streams `0..epochs`.
const DROPOUT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
}

/// Mini-batch training of one model on a fixed set of dataset indices.
pub struct Trainer<'a> {
    dataset: &'a EpochDataset,
    train_idx: Vec<usize>,
    params: ModelParams<f32>,
    adam: AdamState<f32>,
    cfg: TrainConfig,
    dropout_rng: ChaCha8Rng,
}

impl<'a> Trainer<'a> {
    pub fn new(
        dataset: &'a EpochDataset,
        train_idx: Vec<usize>,
        model_cfg: &ModelConfig,
        cfg: &TrainConfig,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        if model_cfg.n_input_channels != dataset.n_channels() {
            return Err(ModelError::BadConfig(format!(
                "model expects {} channels, dataset has {}",
                model_cfg.n_input_channels,
                dataset.n_channels()
            ))
            .into());
        }
        let params = build_model::<f32>(model_cfg, cfg.seed)?;
        let adam = AdamState::new(&params);
        let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        dropout_rng.set_stream(DROPOUT_STREAM);
        Ok(Self {
            dataset,
            train_idx,
            params,
            adam,
            cfg: cfg.clone(),
            dropout_rng,
        })
    }

    pub fn params(&self) -> &ModelParams<f32> {
        &self.params
    }

    pub fn into_params(self) -> ModelParams<f32> {
        self.params
    }

    /// One pass over the training indices at the scheduled learning rate.
    /// The reported loss is the epoch-weighted mean regularised loss.
    pub fn train_epoch(&mut self, epoch: usize) -> Result<EpochStats, TrainError> {
        let lr = cosine_lr(epoch, self.cfg.epochs, self.cfg.base_lr);
        let batches = make_batches(
            self.train_idx.len(),
            self.cfg.batch_size,
            self.cfg.seed,
            epoch as u64,
        );
        let mut total = 0.0f64;
        for batch in &batches {
            let idx: Vec<usize> = batch.iter().map(|&i| self.train_idx[i]).collect();
            let x = self.dataset.gather(&idx);
            let labels = self.dataset.labels_of(&idx);
            let (_, cache) = model_forward(&self.params, &x, Mode::Train, &mut self.dropout_rng)?;
            let (xent, mut grads) = model_backward(&self.params, &cache, &labels)?;
            let loss = f64::from(xent + l2_penalty(&self.params, self.cfg.l2_lambda));
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch });
            }
            total += loss * idx.len() as f64;
            add_l2_gradient(&mut grads, &self.params, self.cfg.l2_lambda);
            adam_step(&mut self.params, &grads, &mut self.adam, lr, &self.cfg)?;
            update_running_stats(&mut self.params, &cache);
        }
        Ok(EpochStats {
            epoch,
            lr,
            train_loss: total / self.train_idx.len().max(1) as f64,
        })
    }

    /// Inference-mode class probabilities for `indices`, one row each.
    pub fn probabilities(&self, indices: &[usize]) -> Result<Matrix<f32>, TrainError> {
        predict_indices(&self.params, self.dataset, indices)
    }

    pub fn accuracy(&self, indices: &[usize]) -> Result<f64, TrainError> {
        let probs = self.probabilities(indices)?;
        Ok(accuracy_of(&probs, &self.dataset.labels_of(indices)))
    }
}

/// Inference-mode probabilities for a subset of a dataset.
pub fn predict_indices(
    params: &ModelParams<f32>,
    dataset: &EpochDataset,
    indices: &[usize],
) -> Result<Matrix<f32>, TrainError> {
    let classes = params.config.n_classes;
    let mut data = Vec::with_capacity(indices.len() * classes);
    for chunk in indices.chunks(EVAL_CHUNK) {
        let probs = predict(params, &dataset.gather(chunk))?;
        data.extend_from_slice(probs.data());
    }
    Matrix::from_vec(indices.len(), classes, data).map_err(|e: NnError| e.into())
}

pub fn argmax_rows(probs: &Matrix<f32>) -> Vec<usize> {
    (0..probs.rows())
        .map(|r| {
            probs
                .row(r)
                .iter()
                .enumerate()
                .fold((0, f32::NEG_INFINITY), |best, (i, &p)| {
                    if p > best.1 {
                        (i, p)
                    } else {
                        best
                    }
                })
                .0
        })
        .collect()
}

fn accuracy_of(probs: &Matrix<f32>, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = argmax_rows(probs)
        .iter()
        .zip(labels)
        .filter(|(p, t)| p == t)
        .count();
    hits as f64 / labels.len() as f64
}

/// Result of training and testing one fold.
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub params: ModelParams<f32>,
    pub history: Vec<HistoryEntry>,
    pub test_indices: Vec<usize>,
    pub test_probs: Matrix<f32>,
    pub test_predictions: Vec<usize>,
}

/// Trains on the split's training subjects for `cfg.epochs` epochs and
/// scores the test subjects after each one. Final-epoch parameters are
/// returned.
pub fn train_fold(
    dataset: &EpochDataset,
    split: &FoldSplit,
    model_cfg: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<FoldOutcome, TrainError> {
    let (train_idx, test_idx) = split_indices(dataset, split)?;
    for &i in &test_idx {
        if split.train_subjects.contains(&dataset.subject_keys[i]) {
            return Err(TrainError::SubjectLeak(dataset.subject_keys[i].clone()));
        }
    }
    if cfg.epochs > 0 {
        if train_idx.is_empty() {
            return Err(TrainError::EmptySplit {
                fold: split.fold_index,
                side: "train",
            });
        }
        if test_idx.is_empty() {
            return Err(TrainError::EmptySplit {
                fold: split.fold_index,
                side: "test",
            });
        }
    }
    let test_labels = dataset.labels_of(&test_idx);
    let mut trainer = Trainer::new(dataset, train_idx, model_cfg, cfg)?;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut test_probs = None;
    for epoch in 0..cfg.epochs {
        let stats = trainer.train_epoch(epoch)?;
        let probs = trainer.probabilities(&test_idx)?;
        history.push(HistoryEntry {
            epoch,
            lr: stats.lr,
            train_loss: stats.train_loss,
            test_acc: accuracy_of(&probs, &test_labels),
        });
        test_probs = Some(probs);
    }
    let test_probs = match test_probs {
        Some(p) => p,
        None => trainer.probabilities(&test_idx)?,
    };
    Ok(FoldOutcome {
        params: trainer.into_params(),
        history,
        test_predictions: argmax_rows(&test_probs),
        test_indices: test_idx,
        test_probs,
    })
}
