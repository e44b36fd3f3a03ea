//! Optimisation: regularised loss, Adam, cosine schedule, batching, and the
//! subject-wise cross-validation driver.

pub mod adam;
pub mod batches;
pub mod config;
pub mod folds;
pub mod loss;
pub mod trainer;

pub use adam::{adam_step, AdamState};
pub use batches::make_batches;
pub use config::{cosine_lr, TrainConfig};
pub use folds::{split_indices, subject_folds, FoldSplit};
pub use loss::{add_l2_gradient, l2_penalty, regularized_loss};
pub use trainer::{
    argmax_rows, predict_indices, train_fold, EpochStats, FoldOutcome, HistoryEntry, Trainer,
};

use thiserror::Error;

use crate::model::ModelError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("bad training config: {0}")]
    BadConfig(String),
    #[error("non-finite gradient in {param} at optimizer step {step}")]
    NonFiniteGradient { param: String, step: u64 },
    #[error("non-finite loss in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("{subjects} subjects cannot fill {folds} folds")]
    TooFewSubjects { subjects: usize, folds: usize },
    #[error("fold {fold} has no {side} epochs")]
    EmptySplit { fold: usize, side: &'static str },
    #[error("subject {0:?} appears in both train and test sets")]
    SubjectLeak(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Nn(#[from] NnError),
}
