use std::fmt::Write as _;

use lmd_autodiff::{Adam, Tensor};
use lmd_uafno::Model;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Seeds both the weight init and the epoch shuffles.
    pub seed: u64,
    /// Leading runs kept out of the training set, for evaluation.
    pub holdout_runs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            lr: 1e-4,
            batch_size: 1,
            seed: 0,
            holdout_runs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("lr must be non-negative, got {}", self.lr)));
        }
        Ok(())
    }
}

/// Losses seen during training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainLog {
    /// Mean batch MSE of each epoch, measured before each update.
    pub epoch_loss: Vec<f64>,
    /// MSE of every batch, in order.
    pub step_loss: Vec<f64>,
}

impl TrainLog {
    pub const CSV_HEADER: &'static str = "epoch,mean_mse";

    pub fn loss_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for (k, l) in self.epoch_loss.iter().enumerate() {
            let _ = writeln!(out, "{},{}", k + 1, l);
        }
        out
    }
}

/// Batch loss and mean gradients. Samples are evaluated in parallel and
/// reduced in order, so the result does not depend on the thread count.
fn batch_grads(model: &Model, batch: &[&(Tensor, Tensor)]) -> Result<(f64, Vec<Tensor>)> {
    let parts = batch
        .par_iter()
        .map(|(x, t)| model.loss_and_grads(x, t))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let n = parts.len() as f64;
    let mut it = parts.into_iter();
    let (mut loss, mut grads) = it.next().expect("non-empty batch");
    for (l, g) in it {
        loss += l;
        for (acc, gi) in grads.iter_mut().zip(&g) {
            acc.accumulate(gi)?;
        }
    }
    grads.iter_mut().for_each(|g| g.scale(1.0 / n));
    Ok((loss / n, grads))
}

/// Adam on the mean squared error, one pass over a seeded shuffle of the
/// pairs per epoch.
pub fn train(model: &mut Model, pairs: &[(Tensor, Tensor)], cfg: &TrainConfig) -> Result<TrainLog> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::Dataset("no training pairs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(cfg.lr);
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&k| &pairs[k]).collect();
            let (loss, grads) = batch_grads(model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    step: adam.steps() + 1,
                    loss,
                });
            }
            adam.step(model.params_mut(), &grads)?;
            log.step_loss.push(loss);
            sum += loss;
            batches += 1;
        }
        log.epoch_loss.push(sum / batches as f64);
    }
    Ok(log)
}

/// Mean MSE of the model over all pairs.
pub fn dataset_mse(model: &Model, pairs: &[(Tensor, Tensor)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Dataset("no pairs".into()));
    }
    let losses = pairs
        .par_iter()
        .map(|(x, t)| {
            let y = model.forward(x)?;
            let (y, t) = (y.as_real()?, t.as_real()?);
            Ok(y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}
