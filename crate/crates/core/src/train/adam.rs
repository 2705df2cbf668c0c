use crate::autodiff::{ParamGrads, ParamSet};

/// Bias-corrected Adam with per-tensor moment buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// First and second moments of one parameter, if it has been updated.
    pub fn moments(&self, index: usize) -> Option<(&[f64], &[f64])> {
        Some((self.m.get(index)?.as_slice(), self.v.get(index)?.as_slice()))
    }

    /// Updates every trainable parameter. Parameters without a gradient are
    /// treated as having a zero gradient.
    pub fn step(&mut self, params: &mut ParamSet, grads: &ParamGrads) {
        if self.m.len() < params.len() {
            for id in params.ids().skip(self.m.len()) {
                let n = params.get(id).numel();
                self.m.push(vec![0.0; n]);
                self.v.push(vec![0.0; n]);
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let ids: Vec<_> = params.ids().collect();
        for id in ids {
            if !params.is_trainable(id) {
                continue;
            }
            let i = id.index();
            let g = grads.get(id);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            let values = params.get_mut(id).values_mut();
            for j in 0..values.len() {
                let gj = g.map_or(0.0, |g| g[j]);
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                values[j] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{Tape, Tensor};

    fn quadratic_grads(params: &ParamSet) -> ParamGrads {
        // loss = 0.5 * a * x^2 + b * x with a = 3, b = -1
        let mut tape = Tape::new(params);
        let x = tape.param(params.ids().next().unwrap());
        let xx = tape.mul(x, x).unwrap();
        let q = tape.scale(xx, 1.5).unwrap();
        let l = tape.scale(x, -1.0).unwrap();
        let s = tape.add(q, l).unwrap();
        let loss = tape.sum(s).unwrap();
        tape.backward(loss).unwrap();
        tape.param_grads()
    }

    #[test]
    fn zero_gradient_keeps_parameters() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::vector(vec![1.0, -2.0]));
        let mut adam = Adam::new(0.1);
        let before = ps.get(id).clone();
        adam.step(&mut ps, &ParamGrads::default());
        assert_eq!(ps.get(id).values(), before.values());
    }

    #[test]
    fn moments_decay_on_zero_gradient() {
        let mut ps = ParamSet::new();
        let id = ps.add("x", Tensor::vector(vec![0.5]));
        let mut adam = Adam::new(0.01);
        let g = quadratic_grads(&ps);
        adam.step(&mut ps, &g);
        let (m1, v1) = adam.moments(id.index()).map(|(m, v)| (m[0], v[0])).unwrap();
        adam.step(&mut ps, &ParamGrads::default());
        let (m2, v2) = adam.moments(id.index()).map(|(m, v)| (m[0], v[0])).unwrap();
        assert_eq!(m2, 0.9 * m1);
        assert_eq!(v2, 0.999 * v1);
    }

    #[test]
    fn first_step_is_signed_learning_rate() {
        let mut ps = ParamSet::new();
        let id = ps.add("w", Tensor::vector(vec![0.0, 0.0, 0.0]));
        let grads = {
            let mut tape = Tape::new(&ps);
            let w = tape.param(id);
            let c = tape.constant_vector(vec![2.0, -0.5, 1e-3]);
            let p = tape.mul(w, c).unwrap();
            let loss = tape.sum(p).unwrap();
            tape.backward(loss).unwrap();
            tape.param_grads()
        };
        let mut adam = Adam::new(1e-3);
        adam.step(&mut ps, &grads);
        let g = [2.0, -0.5, 1e-3];
        for (d, g) in ps.get(id).values().iter().zip(g) {
            let expected = -1e-3 * g / (f64::abs(g) + 1e-8);
            assert!((d - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn two_steps_match_hand_unrolled_recurrence() {
        let mut ps = ParamSet::new();
        ps.add("x", Tensor::vector(vec![0.5]));
        let mut adam = Adam::new(0.05);
        for _ in 0..2 {
            let g = quadratic_grads(&ps);
            adam.step(&mut ps, &g);
        }
        // Hand recurrence.
        let (lr, b1, b2, eps) = (0.05f64, 0.9f64, 0.999f64, 1e-8f64);
        let mut x = 0.5f64;
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=2 {
            let g = 3.0 * x - 1.0;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            x -= lr * mh / (vh.sqrt() + eps);
        }
        let got = ps.get(ps.ids().next().unwrap()).values()[0];
        assert!((got - x).abs() < 1e-12, "{got} vs {x}");
    }

    #[test]
    fn frozen_parameters_are_skipped() {
        let mut ps = ParamSet::new();
        let id = ps.add("x", Tensor::vector(vec![0.5]));
        let g = quadratic_grads(&ps);
        ps.set_trainable(id, false);
        let mut adam = Adam::new(0.1);
        adam.step(&mut ps, &g);
        assert_eq!(ps.get(id).values(), &[0.5]);
    }
}
