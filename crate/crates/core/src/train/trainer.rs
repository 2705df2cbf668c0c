use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::adam::Adam;
use super::early_stop::{EarlyStopping, DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE};
use crate::data::Conversation;
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::model::{gold_labels, Model};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub max_epochs: usize,
    /// `None` disables early stopping.
    pub patience: Option<usize>,
    /// Rescale gradients whose global norm exceeds this value.
    pub clip_norm: Option<f64>,
    /// Stop as soon as the mean training loss of an epoch falls below this.
    pub target_loss: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            max_epochs: DEFAULT_MAX_EPOCHS,
            patience: Some(DEFAULT_PATIENCE),
            clip_norm: None,
            target_loss: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
    pub dev_macro_f1: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters from the best dev epoch.
    pub model: Model,
    pub best_epoch: usize,
    pub best_dev_macro_f1: f64,
    pub stop_epoch: usize,
    pub history: Vec<EpochRecord>,
}

/// One Adam step per conversation, dev macro-F1 after every epoch, and the
/// best-epoch snapshot returned at the end.
pub fn train<F: FnMut(&EpochRecord)>(
    mut model: Model,
    train: &[Conversation],
    dev: &[Conversation],
    opts: &TrainOptions,
    mut on_epoch: F,
) -> Result<TrainOutcome> {
    if train.is_empty() || dev.is_empty() {
        return Err(Error::usage("training needs non-empty train and dev sets"));
    }
    if opts.max_epochs == 0 {
        return Err(Error::usage("max epochs must be at least 1"));
    }
    for c in train.iter().chain(dev) {
        gold_labels(c)?;
        if c.is_empty() {
            return Err(Error::usage(format!("conversation {:?} has no utterances", c.id)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed);
    rng.set_stream(1);
    let mut adam = Adam::new(model.config.learning_rate);
    let mut stopper = EarlyStopping::new(opts.max_epochs, opts.patience);
    let mut best_params = model.params.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();

    loop {
        let epoch = stopper.epoch() + 1;
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        for &i in &order {
            let conv = &train[i];
            let mut grads = {
                let mut tape = model.tape();
                let loss = model.loss(&mut tape, conv, Some(&mut rng))?;
                let value = tape.scalar(loss);
                if !value.is_finite() {
                    return Err(Error::NonFinite { epoch, conversation: conv.id.clone(), value });
                }
                total_loss += value;
                tape.backward(loss)?;
                tape.param_grads()
            };
            if !grads.all_finite() {
                return Err(Error::NonFinite { epoch, conversation: conv.id.clone(), value: grads.global_norm() });
            }
            if let Some(max) = opts.clip_norm {
                let norm = grads.global_norm();
                if norm > max {
                    grads.scale(max / norm);
                }
            }
            adam.step(&mut model.params, &grads);
        }
        let train_loss = total_loss / train.len() as f64;
        let report = evaluate(&model, dev)?;
        let obs = stopper.observe(report.macro_f1);
        if obs.improved {
            best_params = model.params.clone();
        }
        let record = EpochRecord { epoch, train_loss, dev_accuracy: report.accuracy, dev_macro_f1: report.macro_f1 };
        debug!("epoch {epoch}: loss {train_loss:.6}, dev accuracy {:.2}", report.accuracy);
        on_epoch(&record);
        history.push(record);
        let reached_target = opts.target_loss.is_some_and(|t| train_loss < t);
        if obs.stop || reached_target {
            break;
        }
    }
    info!(
        "stopped after epoch {}; best dev macro-F1 {:.2} at epoch {}",
        stopper.epoch(),
        stopper.best_score().unwrap_or(0.0),
        stopper.best_epoch()
    );
    model.params = best_params;
    Ok(TrainOutcome {
        model,
        best_epoch: stopper.best_epoch(),
        best_dev_macro_f1: stopper.best_score().unwrap_or(0.0),
        stop_epoch: stopper.epoch(),
        history,
    })
}
