//! Training: mini-batch Adam on MSE, or the dominance-regularized loss with
//! unlabeled batch augmentation.
//!
//! The regularized loss is `MSE(labeled) + lambda * sum over dominance pairs
//! of max(0, t(dominated) - t(dominating))`: a pair contributes only when
//! the model predicts a larger error (smaller negative-log target) for the
//! dominating configuration. Pairs are recomputed inside every combined
//! batch, so freshly sampled unlabeled configurations strengthen the
//! penalty without needing labels.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::mat::Mat;
use super::net::{Adam, Network};
use super::ModelSpec;
use crate::error::{Error, Result};
use crate::graph::dominated_pairs;
use crate::sampling::PrecisionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
    Sbr,
}

/// Training hyperparameters. The defaults are the experimental protocol's:
/// 1000 epochs, batches of 32, Adam at its standard parameters, MSE loss;
/// regularized runs use combined batches of 256.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub loss: LossKind,
    /// Penalty weight; must be positive when `loss` is `Sbr`.
    pub lambda: f64,
    /// Fraction of each combined batch filled with freshly sampled
    /// unlabeled configurations, in `[0, 1)`.
    pub augmentation_ratio: f64,
    pub sbr_batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            loss: LossKind::Mse,
            lambda: 1.0,
            augmentation_ratio: 0.0,
            sbr_batch_size: 256,
            seed: 0,
        }
    }
}

/// Normalized training rows with the raw configurations backing them (the
/// dominance relation lives in configuration space, not feature space).
pub struct TrainData<'a> {
    pub features: &'a [Vec<f64>],
    pub targets: &'a [f64],
    pub configs: &'a [PrecisionConfig],
}

/// Produces one unlabeled augmentation row: a raw configuration and its
/// normalized feature vector.
pub type AugmentFn<'a> = dyn FnMut(&mut StdRng) -> (PrecisionConfig, Vec<f64>) + 'a;

/// Standard augmentation source: uniform configurations over the lattice,
/// presented as base features normalized with the training-split stats.
pub fn uniform_augmenter(
    n_var: usize,
    lo: u32,
    hi: u32,
    stats: crate::dataset::NormStats,
) -> impl FnMut(&mut StdRng) -> (PrecisionConfig, Vec<f64>) {
    move |rng| {
        let config = crate::sampling::uniform_config_from(rng, n_var, lo, hi);
        let row = stats.normalize_config(&config);
        (config, row)
    }
}

/// A trained model plus its per-epoch loss history.
pub struct TrainedModel {
    pub network: Network,
    pub history: Vec<f64>,
    pub seed: u64,
}

impl TrainedModel {
    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        if rows.is_empty() {
            return Vec::new();
        }
        self.network.forward(&Mat::from_rows(rows))
    }
}

pub fn mse(predictions: &[f64], targets: &[f64]) -> f64 {
    assert_eq!(predictions.len(), targets.len());
    let n = predictions.len().max(1);
    predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n as f64
}

/// Regularized loss over a combined batch: labeled rows are a prefix of
/// `predictions_all`; `pairs` index into the combined batch as
/// `(dominated, dominating)`.
pub fn sbr_loss(
    predictions_labeled: &[f64],
    targets: &[f64],
    predictions_all: &[f64],
    pairs: &[(usize, usize)],
    lambda: f64,
) -> f64 {
    let penalty: f64 = pairs
        .iter()
        .map(|&(i, j)| (predictions_all[i] - predictions_all[j]).max(0.0))
        .sum();
    mse(predictions_labeled, targets) + lambda * penalty
}

/// Split of a combined batch: `round(batch * ratio)` augmented rows, the
/// rest labeled.
pub fn sbr_batch_split(sbr_batch_size: usize, augmentation_ratio: f64) -> (usize, usize) {
    let augmented = (sbr_batch_size as f64 * augmentation_ratio).round() as usize;
    (sbr_batch_size - augmented, augmented)
}

/// Trains a model on normalized data. Deterministic for a fixed seed: one
/// seeded generator drives initialization, epoch shuffles, and augmentation
/// draws, in that order, single-threaded.
pub fn train(
    spec: &ModelSpec,
    data: &TrainData<'_>,
    cfg: &TrainConfig,
    mut augment: Option<&mut AugmentFn<'_>>,
) -> Result<TrainedModel> {
    let n = data.features.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty training data".into()));
    }
    if data.targets.len() != n || data.configs.len() != n {
        return Err(Error::InvalidArgument(
            "features, targets and configs must align".into(),
        ));
    }
    if data.features.iter().any(|r| r.len() != spec.n_inputs) {
        return Err(Error::Shape(format!(
            "feature rows must be {} wide",
            spec.n_inputs
        )));
    }
    let (labeled_per_batch, augmented_per_batch) = match cfg.loss {
        LossKind::Mse => {
            if cfg.batch_size == 0 {
                return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
            }
            (cfg.batch_size, 0)
        }
        LossKind::Sbr => {
            if cfg.lambda <= 0.0 {
                return Err(Error::InvalidArgument("sbr loss needs lambda > 0".into()));
            }
            if !(0.0..1.0).contains(&cfg.augmentation_ratio) {
                return Err(Error::InvalidArgument(
                    "augmentation_ratio must be in [0, 1)".into(),
                ));
            }
            let (labeled, augmented) = sbr_batch_split(cfg.sbr_batch_size, cfg.augmentation_ratio);
            if labeled == 0 {
                return Err(Error::InvalidArgument(
                    "sbr batch leaves no labeled rows".into(),
                ));
            }
            if augmented > 0 && augment.is_none() {
                return Err(Error::InvalidArgument(
                    "augmentation_ratio > 0 needs an augmentation source".into(),
                ));
            }
            (labeled, augmented)
        }
    };

    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut net = Network::init(spec, &mut rng)?;
    let mut adam = Adam::new(&net, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;

        for chunk in order.chunks(labeled_per_batch) {
            let mut rows: Vec<Vec<f64>> = chunk.iter().map(|&i| data.features[i].clone()).collect();
            let targets: Vec<f64> = chunk.iter().map(|&i| data.targets[i]).collect();
            let n_labeled = rows.len();

            let batch_loss = match cfg.loss {
                LossKind::Mse => {
                    let x = Mat::from_rows(&rows);
                    let cache = net.forward_cached(&x);
                    let preds = cache.predictions();
                    let loss = mse(&preds, &targets);
                    let dpred: Vec<f64> = preds
                        .iter()
                        .zip(&targets)
                        .map(|(p, t)| 2.0 * (p - t) / n_labeled as f64)
                        .collect();
                    let grads = net.backward(&cache, &dpred);
                    adam.step(&mut net, &grads);
                    loss
                }
                LossKind::Sbr => {
                    let mut configs: Vec<PrecisionConfig> =
                        chunk.iter().map(|&i| data.configs[i].clone()).collect();
                    if let Some(aug) = augment.as_deref_mut() {
                        for _ in 0..augmented_per_batch {
                            let (config, row) = aug(&mut rng);
                            configs.push(config);
                            rows.push(row);
                        }
                    }
                    let pairs = if configs.len() > 1 {
                        dominated_pairs(&configs)?
                    } else {
                        Vec::new()
                    };
                    let x = Mat::from_rows(&rows);
                    let cache = net.forward_cached(&x);
                    let preds = cache.predictions();
                    let loss = sbr_loss(&preds[..n_labeled], &targets, &preds, &pairs, cfg.lambda);
                    let mut dpred = vec![0.0; preds.len()];
                    for (k, (p, t)) in preds.iter().zip(&targets).enumerate() {
                        dpred[k] = 2.0 * (p - t) / n_labeled as f64;
                    }
                    for &(i, j) in &pairs {
                        if preds[i] > preds[j] {
                            dpred[i] += cfg.lambda;
                            dpred[j] -= cfg.lambda;
                        }
                    }
                    let grads = net.backward(&cache, &dpred);
                    adam.step(&mut net, &grads);
                    loss
                }
            };

            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss(epoch));
            }
            epoch_loss += batch_loss;
            batches += 1;
        }
        history.push(epoch_loss / batches.max(1) as f64);
    }

    Ok(TrainedModel {
        network: net,
        history,
        seed: cfg.seed,
    })
}
