use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::backbone::{featurize, BackboneSpec};
use super::head::{HeadGradient, LinearHead};
use super::loss::{grad_soft_cross_entropy, soft_cross_entropy};
use super::optim::{lr_schedule, sgd_momentum_step};
use super::StreamInput;
use crate::augment::{SoftLabel, StreamAugmenter};
use crate::dataset::{ExpressionClass, StreamKind};
use crate::rng;
use crate::{FerError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub momentum: f64,
    /// Epochs at which the learning rate is multiplied by `gamma`.
    pub milestones: Vec<usize>,
    pub gamma: f64,
    pub seed: u64,
    pub stream: StreamKind,
    /// Half-mix jittering; only honored for the visual stream.
    pub halfmix_enabled: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 70,
            batch_size: 32,
            lr0: 1e-3,
            momentum: 0.9,
            milestones: vec![40, 50, 60],
            gamma: 0.1,
            seed: 0,
            stream: StreamKind::Visual,
            halfmix_enabled: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(FerError::Config(m));
        if self.epochs == 0 {
            return err("epochs must be positive".into());
        }
        if self.batch_size == 0 {
            return err("batch size must be positive".into());
        }
        if !(self.lr0 >= 0.0 && self.lr0.is_finite()) {
            return err(format!("initial learning rate {} must be non-negative", self.lr0));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return err(format!("momentum {} outside [0, 1)", self.momentum));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return err(format!("gamma {} outside (0, 1)", self.gamma));
        }
        if self.milestones.windows(2).any(|w| w[0] >= w[1]) {
            return err(format!("milestones {:?} not strictly increasing", self.milestones));
        }
        if self.milestones.last().is_some_and(|&m| m >= self.epochs) {
            return err(format!("milestones {:?} must all be below {} epochs", self.milestones, self.epochs));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f64,
    pub wall_clock_sec: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub head: LinearHead,
}

impl TrainHistory {
    /// Line-delimited `epoch=… mean_loss=… lr=…` records. Wall-clock time is
    /// left out so the log is reproducible.
    pub fn log_lines(&self) -> String {
        self.epochs
            .iter()
            .map(|r| format!("epoch={} mean_loss={:.12e} lr={}\n", r.epoch, r.mean_loss, r.lr))
            .collect()
    }
}

/// Labeled training items of one stream.
pub trait TrainingSet: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Class of item `index`; never `Unlabeled`.
    fn class(&self, index: usize) -> ExpressionClass;

    fn input(&self, index: usize) -> Result<StreamInput>;
}

/// Per-sample soft cross-entropy and the gradient of the batch-mean loss
/// with respect to the head parameters. The reduction runs in sample order,
/// so the result is the same however the features were computed.
pub fn batch_loss_and_gradient(
    head: &LinearHead,
    features: &[Vec<f64>],
    targets: &[SoftLabel],
) -> Result<(Vec<f64>, HeadGradient)> {
    if features.len() != targets.len() || features.is_empty() {
        return Err(FerError::invalid("batch features and targets must be non-empty and equal in length"));
    }
    let scale = 1.0 / features.len() as f64;
    let mut grad = vec![0.0; head.params().len()];
    let mut losses = Vec::with_capacity(features.len());
    for (f, t) in features.iter().zip(targets) {
        let logits = head.logits(f)?;
        losses.push(soft_cross_entropy(&logits, t)?);
        let dlogits = grad_soft_cross_entropy(&logits, t)?;
        head.accumulate_gradient(&mut grad, f, &dlogits, scale);
    }
    Ok((losses, HeadGradient(grad)))
}

/// Train a linear head over a fixed backbone with mini-batch SGD with
/// momentum and the multi-step schedule.
///
/// Deterministic for a fixed `config.seed`, independent of the rayon thread
/// count: each item draws from its own derived generator and the gradient is
/// reduced in batch order.
pub fn train(
    data: &dyn TrainingSet,
    config: &TrainConfig,
    augmenter: &StreamAugmenter,
    backbone: &BackboneSpec,
) -> Result<TrainHistory> {
    config.validate()?;
    backbone.validate()?;
    if data.is_empty() {
        return Err(FerError::invalid(format!("no labeled {} training data", config.stream)));
    }
    let mut augmenter = augmenter.clone();
    if config.stream != StreamKind::Visual || !config.halfmix_enabled {
        augmenter.config.halfmix_enabled = false;
    }

    let classes: Vec<ExpressionClass> = (0..data.len()).map(|i| data.class(i)).collect();
    if let Some(i) = classes.iter().position(|c| !c.is_labeled()) {
        return Err(FerError::invalid(format!("training item {i} is unlabeled")));
    }

    let mut head = LinearHead::init(backbone.output_dim(), rng::derive_seed(config.seed, &[0]));
    let mut velocity = vec![0.0; head.params().len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let started = Instant::now();
        let lr = lr_schedule(epoch, config)?;
        order.shuffle(&mut rng::derived(config.seed, &[1, epoch as u64]));

        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let inputs = batch
                .par_iter()
                .map(|&i| data.input(i))
                .collect::<Result<Vec<_>>>()?;
            let batch_classes: Vec<ExpressionClass> = batch.iter().map(|&i| classes[i]).collect();
            let augmented =
                augmenter.augment_batch(&inputs, &batch_classes, config.seed, &[2, epoch as u64, b as u64])?;
            let features = augmented
                .par_iter()
                .map(|a| featurize(backbone, &a.input))
                .collect::<Result<Vec<_>>>()?;
            let targets: Vec<SoftLabel> = augmented.iter().map(|a| a.target).collect();

            let (losses, grad) = batch_loss_and_gradient(&head, &features, &targets)?;
            loss_sum += losses.iter().sum::<f64>();
            sgd_momentum_step(head.params_mut(), &grad.0, &mut velocity, lr, config.momentum)?;
        }
        if head.params().iter().any(|p| !p.is_finite()) {
            return Err(FerError::Numeric(format!("head diverged in epoch {epoch}")));
        }
        history.push(EpochRecord {
            epoch,
            mean_loss: loss_sum / data.len() as f64,
            lr,
            wall_clock_sec: started.elapsed().as_secs_f64(),
        });
    }
    Ok(TrainHistory { epochs: history, head })
}
