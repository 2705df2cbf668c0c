use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{ParamId, ParamSet, Tensor};

/// Registers freshly initialised parameters.
///
/// Matrices: Uniform(-r, r) with `r = sqrt(6 / (fan_in + fan_out))`.
/// Biases: constant (zero unless stated).
pub struct Initializer<'a> {
    pub params: &'a mut ParamSet,
    pub rng: &'a mut ChaCha8Rng,
}

impl Initializer<'_> {
    pub fn matrix(&mut self, name: &str, rows: usize, cols: usize) -> ParamId {
        let r = (6.0 / (rows + cols) as f64).sqrt();
        let values = (0..rows * cols).map(|_| self.rng.gen_range(-r..r)).collect();
        let t = Tensor::matrix(rows, cols, values).expect("sizes agree");
        self.params.add(name, t)
    }

    pub fn bias(&mut self, name: &str, n: usize, value: f64) -> ParamId {
        self.params.add(name, Tensor::vector(vec![value; n]))
    }
}
