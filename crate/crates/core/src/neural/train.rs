//! Mini-batch training with Adam, a step learning-rate decay, and early
//! stopping.
//!
//! The dataset's chronological tail is held out for validation.  After
//! every epoch the validation loss is measured without dropout; when it
//! stops improving by more than `min_delta` for more than `patience`
//! consecutive epochs, training stops and the parameters from the best
//! epoch are restored.  The step size halves every `lr_halving_epochs`
//! epochs down to `lr_floor`, so late epochs contract onto the optimum
//! instead of orbiting it.

use rand::Rng;

use super::backprop::{forward_into, loss, Workspace};
use super::{adam_step, gradients, AdamState, Dataset, RecurrentModel};
use crate::rng::{combine, stream_rng};
use crate::{Error, Result};

/// Stream tags for the shuffle and dropout substreams of a training seed.
const STREAM_SHUFFLE: u64 = 0x5F;
const STREAM_DROPOUT: u64 = 0xD0;

/// Optimization schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Adam step size.
    pub learning_rate: f64,
    /// Samples per gradient step (the last batch of an epoch may be
    /// smaller).
    pub batch_size: usize,
    /// Upper bound on epochs.
    pub max_epochs: usize,
    /// Consecutive non-improving epochs tolerated before stopping;
    /// zero stops at the first epoch that fails to improve.
    pub patience: usize,
    /// Validation loss must drop by more than this to count as an
    /// improvement.
    pub min_delta: f64,
    /// Fraction of the dataset (chronological tail) held out for
    /// validation; zero validates on the training samples themselves.
    pub val_fraction: f64,
    /// Epochs per halving of the learning rate; zero keeps the rate
    /// constant.  With a constant rate Adam never settles: the iterates
    /// orbit the optimum with a spread of roughly a dB in test error,
    /// so the returned snapshot is a coin flip within that band.
    pub lr_halving_epochs: usize,
    /// Lower bound the decayed learning rate is clamped to.
    pub lr_floor: f64,
    /// Epochs to run before validation snapshots and the patience
    /// counter engage.  While the step size is still large the
    /// validation loss swings an order of magnitude more than the
    /// trend it later improves by, so an early lucky swing would both
    /// capture the snapshot and exhaust the patience; selection is
    /// meaningful only between settled iterates.
    pub warmup_epochs: usize,
    /// Seed for shuffling and dropout streams.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 16,
            max_epochs: 200,
            patience: 10,
            min_delta: 1e-5,
            val_fraction: 0.1,
            lr_halving_epochs: 20,
            lr_floor: 1e-4,
            // 0.01 halved every 20 epochs reaches the 1e-4 floor after
            // seven halvings, i.e. at epoch 140.
            warmup_epochs: 140,
            seed: 0,
        }
    }
}

/// What happened during training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Epochs actually run (may stop before the maximum).
    pub epochs_run: usize,
    /// Epoch whose parameters were returned; zero means no epoch beat
    /// the untrained model.
    pub best_epoch: usize,
    /// Validation loss of the returned parameters.
    pub best_val: f64,
    /// Mean training loss per epoch (dropout active).
    pub train_loss: Vec<f64>,
    /// Validation loss per epoch (dropout off).
    pub val_loss: Vec<f64>,
}

/// Mean squared prediction error of `model` over a whole dataset,
/// evaluated without dropout.
pub fn dataset_loss(model: &RecurrentModel, data: &Dataset) -> Result<f64> {
    let indices: Vec<usize> = (0..data.len()).collect();
    subset_loss(model, data, &indices)
}

fn subset_loss(model: &RecurrentModel, data: &Dataset, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(Error::Domain("loss over an empty sample set is undefined".into()));
    }
    if data.window != model.arch.window {
        return Err(Error::Domain(format!(
            "dataset window {} does not match the model window {}",
            data.window, model.arch.window
        )));
    }
    let mut ws = Workspace::new(model);
    let mut total = 0.0;
    for &i in indices {
        forward_into(model, &mut ws, &data.inputs[i], None);
        total += loss(ws.output(), data.targets[i]);
    }
    Ok(total / indices.len() as f64)
}

fn validate(cfg: &TrainConfig) -> Result<()> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be positive and finite, got {}",
            cfg.learning_rate
        )));
    }
    if cfg.batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    if cfg.max_epochs == 0 {
        return Err(Error::Config("at least one epoch is required".into()));
    }
    if !(cfg.val_fraction >= 0.0 && cfg.val_fraction < 1.0) {
        return Err(Error::Config(format!(
            "validation fraction must lie in [0, 1), got {}",
            cfg.val_fraction
        )));
    }
    if !(cfg.min_delta >= 0.0) {
        return Err(Error::Config(format!("min_delta must be non-negative, got {}", cfg.min_delta)));
    }
    if cfg.lr_halving_epochs > 0
        && !(cfg.lr_floor > 0.0 && cfg.lr_floor <= cfg.learning_rate)
    {
        return Err(Error::Config(format!(
            "learning-rate floor must lie in (0, {}], got {}",
            cfg.learning_rate, cfg.lr_floor
        )));
    }
    if cfg.warmup_epochs >= cfg.max_epochs {
        return Err(Error::Config(format!(
            "warmup ({} epochs) must end before max_epochs ({})",
            cfg.warmup_epochs, cfg.max_epochs
        )));
    }
    Ok(())
}

/// Trains `model` in place and leaves it at the best-validation epoch.
pub fn train(model: &mut RecurrentModel, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    validate(cfg)?;
    if data.is_empty() {
        return Err(Error::Domain("cannot train on an empty dataset".into()));
    }
    let n = data.len();
    let val_count = (n as f64 * cfg.val_fraction).floor() as usize;
    let train_count = n - val_count;
    let train_idx: Vec<usize> = (0..train_count).collect();
    let val_idx: Vec<usize> =
        if val_count > 0 { (train_count..n).collect() } else { train_idx.clone() };

    let mut best = model.clone();
    let mut best_val = subset_loss(model, data, &val_idx)?;
    let mut best_epoch = 0usize;
    let mut stale = 0usize;
    let mut order = train_idx;
    let mut shuffle_rng = stream_rng(cfg.seed, STREAM_SHUFFLE);
    let mut state = AdamState::new(model, cfg.learning_rate);
    let mut train_hist = Vec::new();
    let mut val_hist = Vec::new();
    let mut epochs_run = 0usize;

    for epoch in 1..=cfg.max_epochs {
        epochs_run = epoch;
        // `lr_halving_epochs == 0` disables the schedule (division yields None).
        if let Some(halvings) = (epoch - 1).checked_div(cfg.lr_halving_epochs) {
            let lr = cfg.learning_rate * 0.5f64.powi(halvings as i32);
            state.set_learning_rate(lr.max(cfg.lr_floor));
        }
        for i in (1..order.len()).rev() {
            let j = shuffle_rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut weighted = 0.0;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let drop_seed =
                combine(combine(combine(cfg.seed, STREAM_DROPOUT), epoch as u64), bi as u64);
            let (grads, batch_loss) = gradients(model, data, chunk, Some(drop_seed))?;
            adam_step(model, &mut state, &grads);
            weighted += batch_loss * chunk.len() as f64;
        }
        train_hist.push(weighted / train_count as f64);
        let val = subset_loss(model, data, &val_idx)?;
        val_hist.push(val);
        if epoch <= cfg.warmup_epochs {
            continue;
        }
        if val < best_val - cfg.min_delta {
            best_val = val;
            best_epoch = epoch;
            best = model.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.patience {
                break;
            }
        }
    }
    *model = best;
    Ok(TrainReport { epochs_run, best_epoch, best_val, train_loss: train_hist, val_loss: val_hist })
}
