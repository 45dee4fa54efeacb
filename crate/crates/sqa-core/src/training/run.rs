//! Training loops: single fold, subject-level cross-validation, and the
//! final full-train pass. All randomness derives from the configured seed.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dsp::QualityLabel;
use crate::error::{Result, SqaError};
use crate::metrics::{auc, ScoredSample};
use crate::nn::{Mode, Model, ModelConfig, Scalar, Tensor3};
use crate::pipeline::{subject_ids, DatasetSegment};
use crate::rng::SplitMix64;
use crate::training::loss::{cross_entropy_loss, softmax_good};
use crate::training::optim::{adam_step, step_lr, AdamState};
use crate::training::split::{fold_seed, split_subjects, FoldSplit};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub weight_decay: f64,
    /// Epochs between learning-rate drops.
    pub step_size: usize,
    /// Learning-rate decay factor at each drop.
    pub gamma: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub global_seed: u64,
    pub folds: usize,
    /// Default is L2 decay coupled into the gradient; `true` decays the
    /// weights directly instead.
    pub decoupled_weight_decay: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            weight_decay: 1e-5,
            step_size: 20,
            gamma: 0.1,
            epochs: 60,
            batch_size: 64,
            global_seed: 0,
            folds: 5,
            decoupled_weight_decay: false,
        }
    }
}

/// One training-epoch summary row; validation fields are absent for the
/// final full-train pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_auc: Option<f64>,
}

#[derive(Debug)]
pub struct FoldOutcome {
    pub model: Model<f32>,
    pub epochs: Vec<EpochMetrics>,
}

#[derive(Debug)]
pub struct CvSummary {
    pub fold_aucs: Vec<f64>,
    pub mean_auc: f64,
    pub fold_epochs: Vec<Vec<EpochMetrics>>,
}

pub fn segment_label(seg: &DatasetSegment) -> usize {
    match seg.stack.label {
        QualityLabel::Bad => 0,
        QualityLabel::Good => 1,
    }
}

/// Pack segments into a (batch, channels, length) tensor.
pub fn batch_tensor<F: Scalar>(
    segments: &[&DatasetSegment],
    config: &ModelConfig,
) -> Result<Tensor3<F>> {
    if segments.is_empty() {
        return Err(SqaError::EmptyInput);
    }
    let mut data = Vec::with_capacity(segments.len() * config.in_channels * config.segment_len);
    for seg in segments {
        if seg.stack.data.len() != config.in_channels {
            return Err(SqaError::ShapeMismatch(format!(
                "segment has {} channels, model expects {}",
                seg.stack.data.len(),
                config.in_channels
            )));
        }
        for row in &seg.stack.data {
            if row.len() != config.segment_len {
                return Err(SqaError::ShapeMismatch(format!(
                    "segment row length {} != model segment length {}",
                    row.len(),
                    config.segment_len
                )));
            }
            data.extend(row.iter().map(|&v| F::from_f64(v)));
        }
    }
    Tensor3::from_vec(segments.len(), config.in_channels, config.segment_len, data)
}

/// Deterministic inference over a segment list: mean cross-entropy plus one
/// scored sample per segment, in input order.
pub fn evaluate<F: Scalar>(
    model: &Model<F>,
    segments: &[&DatasetSegment],
    batch_size: usize,
) -> Result<(f64, Vec<ScoredSample>)> {
    if segments.is_empty() {
        return Err(SqaError::EmptyInput);
    }
    let mut loss_sum = 0.0f64;
    let mut samples = Vec::with_capacity(segments.len());
    for chunk in segments.chunks(batch_size.max(1)) {
        let x = batch_tensor::<F>(chunk, &model.config)?;
        let labels: Vec<usize> = chunk.iter().map(|s| segment_label(s)).collect();
        let logits = model.forward_eval(&x)?;
        let (loss, _) = cross_entropy_loss(&logits, &labels, model.config.num_classes)?;
        loss_sum += loss.to_f64() * chunk.len() as f64;
        for (i, seg) in chunk.iter().enumerate() {
            let row = &logits[i * model.config.num_classes..(i + 1) * model.config.num_classes];
            samples.push(ScoredSample::new(
                softmax_good(row[0], row[1]),
                seg.stack.label == QualityLabel::Good,
            ));
        }
    }
    Ok((loss_sum / segments.len() as f64, samples))
}

fn train_on(
    config: &ModelConfig,
    train: &[&DatasetSegment],
    val: Option<&[&DatasetSegment]>,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<FoldOutcome> {
    if train.is_empty() {
        return Err(SqaError::EmptyFold);
    }
    let classes: BTreeSet<usize> = train.iter().map(|s| segment_label(s)).collect();
    if classes.len() < 2 {
        return Err(SqaError::SingleClass);
    }
    let mut rng = SplitMix64::new(seed);
    let mut model: Model<f32> = Model::init(config.clone(), &mut rng)?;
    let mut adam = AdamState::new(&model.params);
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.epochs {
        let lr = step_lr(epoch, cfg);
        model.set_mode(Mode::Train);
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0f64;
        for chunk in order.chunks(cfg.batch_size.max(1)) {
            let batch: Vec<&DatasetSegment> = chunk.iter().map(|&i| train[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|s| segment_label(s)).collect();
            let x = batch_tensor::<f32>(&batch, config)?;
            let masks = model.make_dropout_masks(batch.len(), &mut rng)?;
            let (logits, trace) = model.forward_train(&x, &masks)?;
            let (loss, dlogits) = cross_entropy_loss(&logits, &labels, config.num_classes)?;
            loss_sum += loss.to_f64() * batch.len() as f64;
            model.backward(&trace, &dlogits)?;
            adam_step(
                &mut model.params,
                &mut adam,
                lr,
                cfg.weight_decay,
                cfg.decoupled_weight_decay,
            );
        }
        let train_loss = loss_sum / train.len() as f64;
        let (val_loss, val_auc) = match val {
            Some(v) => {
                model.set_mode(Mode::Eval);
                let (loss, samples) = evaluate(&model, v, cfg.batch_size)?;
                (Some(loss), Some(auc(&samples)?))
            }
            None => (None, None),
        };
        epochs.push(EpochMetrics {
            epoch,
            lr,
            train_loss,
            val_loss,
            val_auc,
        });
    }
    model.set_mode(Mode::Eval);
    Ok(FoldOutcome { model, epochs })
}

/// Train one cross-validation fold. Fold-local randomness is seeded with
/// [`fold_seed`], so folds are independent and reproducible.
pub fn train_fold(
    config: &ModelConfig,
    data: &[DatasetSegment],
    split: &FoldSplit,
    cfg: &TrainConfig,
    fold: usize,
) -> Result<FoldOutcome> {
    let in_val = |s: &&DatasetSegment| split.val_subjects.contains(&s.subject_id);
    let train: Vec<&DatasetSegment> = data
        .iter()
        .filter(|s| split.train_subjects.contains(&s.subject_id))
        .collect();
    let val: Vec<&DatasetSegment> = data.iter().filter(in_val).collect();
    if train.is_empty() || val.is_empty() {
        return Err(SqaError::EmptyFold);
    }
    train_on(
        config,
        &train,
        Some(&val),
        cfg,
        fold_seed(cfg.global_seed, fold),
    )
}

/// Full subject-level cross-validation: split, train every fold, report the
/// final-epoch validation AUC per fold and their mean.
pub fn cross_validate(
    config: &ModelConfig,
    data: &[DatasetSegment],
    cfg: &TrainConfig,
) -> Result<CvSummary> {
    if data.is_empty() {
        return Err(SqaError::EmptyDataset);
    }
    let subjects = subject_ids(data);
    let splits = split_subjects(&subjects, cfg.folds, cfg.global_seed)?;
    let mut fold_aucs = Vec::with_capacity(splits.len());
    let mut fold_epochs = Vec::with_capacity(splits.len());
    for (fold, split) in splits.iter().enumerate() {
        let outcome = train_fold(config, data, split, cfg, fold)?;
        let last = outcome.epochs.last().expect("epochs >= 1");
        fold_aucs.push(last.val_auc.expect("fold training always validates"));
        fold_epochs.push(outcome.epochs);
    }
    let mean_auc = fold_aucs.iter().sum::<f64>() / fold_aucs.len() as f64;
    Ok(CvSummary {
        fold_aucs,
        mean_auc,
        fold_epochs,
    })
}

/// Final pass over the whole training corpus, no validation split. Seeded
/// one past the last fold so it never replays a fold's random stream.
pub fn train_full(
    config: &ModelConfig,
    data: &[DatasetSegment],
    cfg: &TrainConfig,
) -> Result<FoldOutcome> {
    if data.is_empty() {
        return Err(SqaError::EmptyDataset);
    }
    let all: Vec<&DatasetSegment> = data.iter().collect();
    train_on(config, &all, None, cfg, fold_seed(cfg.global_seed, cfg.folds))
}
