use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Adam, AdamConfig, Dropout, Example, Model, ModelError};
use crate::tensor::{ParamGrads, ParamStore};

/// Evaluates independent per-item jobs. Results come back in index order,
/// so reductions over them are deterministic however the jobs ran.
pub trait Executor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Stop after this many optimizer steps even mid-epoch.
    pub max_steps: Option<usize>,
    pub adam: AdamConfig,
    /// Rescale the batch gradient to at most this global L2 norm.
    pub grad_clip: Option<f64>,
    pub label_smoothing: f64,
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            max_steps: None,
            adam: AdamConfig::default(),
            grad_clip: None,
            label_smoothing: 0.0,
            shuffle: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m| Err(ModelError::InvalidTraining(m));
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.label_smoothing) {
            return fail("label_smoothing must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.adam.warmup_fraction) {
            return fail("warmup_fraction must lie in [0, 1]");
        }
        if self.adam.lr.is_nan() || self.adam.lr <= 0.0 {
            return fail("learning rate must be positive");
        }
        if self.grad_clip.is_some_and(|c| c.is_nan() || c <= 0.0) {
            return fail("grad_clip must be positive");
        }
        Ok(())
    }

    pub fn total_steps(&self, examples: usize) -> usize {
        let per_epoch = examples.div_ceil(self.batch_size.max(1));
        let all = self.epochs * per_epoch;
        self.max_steps.map_or(all, |m| m.min(all))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub step: usize,
    pub epoch: usize,
    pub lr: f64,
    /// Mean loss of the batch, measured before the update.
    pub train_loss: f64,
    /// Set on the last step of an epoch when a validation set is given.
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub log: Vec<LogRow>,
    pub steps: usize,
    /// Parameters after the epoch with the lowest validation loss.
    pub best: Option<(usize, f64, ParamStore)>,
}

fn dropout_seed(seed: u64, step: usize, slot: usize) -> u64 {
    let mut x = seed ^ 0x9E37_79B9_7F4A_7C15;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9) ^ step as u64;
    x = x.wrapping_mul(0x94D0_49BB_1331_11EB) ^ slot as u64;
    x
}

/// Mean validation loss without dropout.
pub fn mean_loss<E: Executor>(model: &Model, examples: &[Example], exec: &E) -> Result<f64, ModelError> {
    let losses = exec.map(examples.len(), |i| model.loss(&examples[i]));
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / examples.len().max(1) as f64)
}

/// Mini-batch Adam on the mean example loss. `model` ends with the final
/// parameters; the best-validation ones are returned separately.
pub fn train<E: Executor>(model: &mut Model, train: &[Example], validation: &[Example], cfg: &TrainConfig, exec: &E) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let total = cfg.total_steps(train.len());
    let mut adam = Adam::new(cfg.adam.clone(), model.params(), total);
    let p = model.config().dropout_prob;
    let mut log = Vec::with_capacity(total);
    let mut best: Option<(usize, f64, ParamStore)> = None;
    let mut step = 0;
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 0..cfg.epochs {
        let epoch_start = step;
        if cfg.shuffle {
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(epoch as u64)));
        }
        for batch in order.chunks(cfg.batch_size) {
            if step >= total {
                break;
            }
            let m: &Model = model;
            let results = exec.map(batch.len(), |i| {
                let mut drop = Dropout::new(p, dropout_seed(cfg.seed, step, i));
                m.loss_and_grads(&train[batch[i]], &mut drop, cfg.label_smoothing)
            });
            let mut grads = ParamGrads::zeros(model.params());
            let mut loss = 0.0;
            for r in results {
                let (l, g) = r?;
                loss += l;
                grads.add_assign(&g);
            }
            let inv = 1.0 / batch.len() as f64;
            grads.scale(inv);
            if let Some(clip) = cfg.grad_clip {
                let norm = grads.l2_norm();
                if norm > clip {
                    grads.scale(clip / norm);
                }
            }
            let lr = adam.step(model.params_mut(), &grads);
            step += 1;
            log.push(LogRow {
                step,
                epoch,
                lr,
                train_loss: loss * inv,
                val_loss: None,
            });
        }
        if step == epoch_start {
            break;
        }
        if !validation.is_empty() {
            let v = mean_loss(model, validation, exec)?;
            if let Some(row) = log.last_mut() {
                row.val_loss = Some(v);
            }
            if best.as_ref().is_none_or(|b| v < b.1) {
                best = Some((epoch, v, model.params().clone()));
            }
        }
    }
    Ok(TrainOutcome { log, steps: step, best })
}
