use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Architecture, EmbeddingMode, ModelConfig};

pub const UNIT_CHOICES: [usize; 4] = [50, 75, 100, 200];
pub const WINDOW_CHOICES: [usize; 3] = [2, 3, 4];
pub const DEFAULT_TRIALS: usize = 100;

/// Independent generator for one trial, derived from `(seed, trial)`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Draws one configuration. Every draw is made for every architecture so the
/// stream stays aligned; fields the architecture does not use keep `base`.
pub fn sample_config<R: Rng>(architecture: Architecture, base: &ModelConfig, rng: &mut R) -> ModelConfig {
    let learning_rate = 10f64.powf(rng.gen_range(-5.0..=-3.0));
    let dropout = rng.gen_range(0.0..0.5);
    let word_dropout = rng.gen_range(0.0..=0.3);
    let embedding_mode = *[EmbeddingMode::Fixed, EmbeddingMode::FineTune].choose(rng).unwrap();
    let utterance_units = *UNIT_CHOICES.choose(rng).unwrap();
    let context_units = *UNIT_CHOICES.choose(rng).unwrap();
    let cnn_filters = *UNIT_CHOICES.choose(rng).unwrap();
    let cnn_window = *WINDOW_CHOICES.choose(rng).unwrap();
    let seed = rng.gen();

    let mut c = base.clone();
    c.architecture = architecture;
    c.learning_rate = learning_rate;
    c.dropout = dropout;
    c.word_dropout = word_dropout;
    c.embedding_mode = embedding_mode;
    c.seed = seed;
    if !architecture.uses_cnn() {
        c.utterance_units = utterance_units;
    }
    if architecture.uses_context_units() {
        c.context_units = context_units;
    }
    if architecture.uses_cnn() {
        c.cnn_filters = cnn_filters;
        c.cnn_window = cnn_window;
    }
    c
}

pub fn sample_trials(architecture: Architecture, base: &ModelConfig, trials: usize, seed: u64) -> Vec<ModelConfig> {
    (0..trials).map(|t| sample_config(architecture, base, &mut trial_rng(seed, t))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub config: ModelConfig,
    pub dev_macro_f1: f64,
    pub best_epoch: usize,
}

/// Runs `run(trial, config) -> (dev macro-F1, best epoch)` for each sampled
/// config on up to `jobs` workers, then ranks by dev macro-F1 (ties by trial).
pub fn random_search<F>(configs: Vec<ModelConfig>, jobs: usize, run: F) -> Result<Vec<TrialResult>>
where
    F: Fn(usize, &ModelConfig) -> Result<(f64, usize)> + Sync,
{
    if configs.is_empty() {
        return Err(Error::usage("random search needs at least one trial"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::usage(format!("cannot start worker pool: {e}")))?;
    let mut results: Vec<TrialResult> = pool.install(|| {
        configs
            .into_par_iter()
            .enumerate()
            .map(|(trial, config)| {
                let (dev_macro_f1, best_epoch) = run(trial, &config)?;
                Ok(TrialResult { trial, config, dev_macro_f1, best_epoch })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    results.sort_by(|a, b| b.dev_macro_f1.total_cmp(&a.dev_macro_f1).then(a.trial.cmp(&b.trial)));
    Ok(results)
}
