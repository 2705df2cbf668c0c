use super::init::Initializer;
use crate::autodiff::{ParamId, Tape, Var};
use crate::error::{Error, Result};

/// Affine map from contextual word vectors `[2H]` to utterance features `[F]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UttPoolParams {
    pub w_u: ParamId,
    pub b_u: ParamId,
    pub features: usize,
}

impl UttPoolParams {
    pub fn new(init: &mut Initializer, prefix: &str, input: usize, features: usize) -> Self {
        UttPoolParams {
            w_u: init.matrix(&format!("{prefix}.W_u"), features, input),
            b_u: init.bias(&format!("{prefix}.b_u"), features, 0.0),
            features,
        }
    }
}

/// Affine transform of each position, then the elementwise max over positions.
pub fn pool_utterance(tape: &mut Tape, contextual: &[Var], pool: &UttPoolParams) -> Result<Var> {
    if contextual.is_empty() {
        return Err(Error::usage("pool_utterance on an empty sequence"));
    }
    let w = tape.param(pool.w_u);
    let b = tape.param(pool.b_u);
    let transformed: Vec<Var> = contextual.iter().map(|&h| tape.affine(w, h, b)).collect::<Result<_>>()?;
    tape.max(&transformed)
}
