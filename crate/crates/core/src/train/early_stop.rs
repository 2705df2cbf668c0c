use serde::{Deserialize, Serialize};

pub const DEFAULT_PATIENCE: usize = 15;
pub const DEFAULT_MAX_EPOCHS: usize = 300;

/// Tracks the best dev score; only strict improvements reset patience.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    pub patience: Option<usize>,
    pub max_epochs: usize,
    best_score: Option<f64>,
    best_epoch: usize,
    since_improvement: usize,
    epoch: usize,
}

/// Outcome of recording one epoch's score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(max_epochs: usize, patience: Option<usize>) -> Self {
        EarlyStopping { patience, max_epochs, best_score: None, best_epoch: 0, since_improvement: 0, epoch: 0 }
    }

    /// Records the score of the next epoch (epochs are 1-based).
    pub fn observe(&mut self, score: f64) -> Observation {
        self.epoch += 1;
        let improved = self.best_score.is_none_or(|b| score > b);
        if improved {
            self.best_score = Some(score);
            self.best_epoch = self.epoch;
            self.since_improvement = 0;
        } else {
            self.since_improvement += 1;
        }
        let out_of_patience = self.patience.is_some_and(|p| self.since_improvement >= p);
        Observation { improved, stop: out_of_patience || self.epoch >= self.max_epochs }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_score(&self) -> Option<f64> {
        self.best_score
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn since_improvement(&self) -> usize {
        self.since_improvement
    }
}

/// Drives the stopping rule against a score function of the epoch number.
/// Returns `(best_epoch, stop_epoch)`.
pub fn run_schedule<F: FnMut(usize) -> f64>(
    max_epochs: usize,
    patience: Option<usize>,
    mut score: F,
) -> (usize, usize) {
    let mut es = EarlyStopping::new(max_epochs, patience);
    loop {
        let epoch = es.epoch() + 1;
        if es.observe(score(epoch)).stop {
            return (es.best_epoch(), es.epoch());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn always_improving_runs_to_the_cap() {
        assert_eq!(run_schedule(300, Some(15), |e| e as f64), (300, 300));
    }

    #[test]
    fn constant_scores_stop_after_patience() {
        assert_eq!(run_schedule(300, Some(15), |_| 0.5), (1, 16));
    }

    #[test]
    fn ties_keep_the_earlier_epoch() {
        let scores = [0.1, 0.3, 0.3, 0.2];
        assert_eq!(run_schedule(4, Some(15), |e| scores[e - 1]), (2, 4));
    }

    #[test]
    fn no_patience_runs_to_the_cap() {
        assert_eq!(run_schedule(40, None, |_| 0.0), (1, 40));
    }

    proptest! {
        #[test]
        fn stop_epoch_formula(scores in prop::collection::vec(0u8..20, 1..400), patience in 1usize..30, max in 1usize..350) {
            let (best, stop) = run_schedule(max, Some(patience), |e| scores[(e - 1) % scores.len()] as f64);
            // Independent reference: scan for the last strict improvement before stopping.
            let mut best_ref = 1;
            let mut best_val = scores[0];
            let mut stop_ref = max;
            for e in 1..=max {
                let s = scores[(e - 1) % scores.len()];
                if e > 1 && s > best_val {
                    best_val = s;
                    best_ref = e;
                }
                if e - best_ref >= patience {
                    stop_ref = e;
                    break;
                }
            }
            prop_assert_eq!(best, best_ref);
            prop_assert_eq!(stop, stop_ref);
            prop_assert_eq!(stop, max.min(best + patience));
        }
    }
}
