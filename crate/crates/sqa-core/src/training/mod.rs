//! Optimization and the training protocol: loss, Adam with a step learning
//! rate schedule, subject-level cross-validation, and training loops.

pub mod loss;
pub mod optim;
pub mod run;
pub mod split;

pub use loss::{cross_entropy_loss, softmax_good};
pub use optim::{adam_step, step_lr, AdamState};
pub use run::{
    batch_tensor, cross_validate, evaluate, segment_label, train_fold, train_full, CvSummary,
    EpochMetrics, FoldOutcome, TrainConfig,
};
pub use split::{fold_seed, split_subjects, FoldSplit};
