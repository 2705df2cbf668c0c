//! Optimisation, early stopping, checkpoints and random search.

mod adam;
mod checkpoint;
mod early_stop;
mod search;
mod trainer;

pub use adam::Adam;
pub use checkpoint::{Checkpoint, CheckpointMetadata, FORMAT_VERSION};
pub use early_stop::{run_schedule, EarlyStopping, Observation, DEFAULT_MAX_EPOCHS, DEFAULT_PATIENCE};
pub use search::{
    random_search, sample_config, sample_trials, trial_rng, TrialResult, DEFAULT_TRIALS, UNIT_CHOICES, WINDOW_CHOICES,
};
pub use trainer::{train, EpochRecord, TrainOptions, TrainOutcome};
