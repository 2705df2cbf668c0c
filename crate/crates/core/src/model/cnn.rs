use super::init::Initializer;
use crate::autodiff::{ParamId, Tape, Var};
use crate::error::{Error, Result};

/// A bank of `filters` 1-D filters of width `window` over `input`-dim vectors,
/// stored as a `[filters × window·input]` matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnnEncoderParams {
    pub filters_w: ParamId,
    pub bias: ParamId,
    pub filters: usize,
    pub window: usize,
    pub input: usize,
}

impl CnnEncoderParams {
    pub fn new(init: &mut Initializer, prefix: &str, input: usize, filters: usize, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::usage("CNN window must be at least 1"));
        }
        Ok(CnnEncoderParams {
            filters_w: init.matrix(&format!("{prefix}.filters"), filters, window * input),
            bias: init.bias(&format!("{prefix}.bias"), filters, 0.0),
            filters,
            window,
            input,
        })
    }
}

fn conv_at(tape: &mut Tape, window: &[Var], p: &CnnEncoderParams) -> Result<Var> {
    let x = tape.concat(window)?;
    let w = tape.param(p.filters_w);
    let b = tape.param(p.bias);
    let pre = tape.affine(w, x, b)?;
    tape.relu(pre)
}

/// Convolution over time, ReLU, max over time. Sequences shorter than the
/// window are zero-padded on the right.
pub fn cnn_encode(tape: &mut Tape, xs: &[Var], p: &CnnEncoderParams) -> Result<Var> {
    let mut seq = xs.to_vec();
    while seq.len() < p.window {
        seq.push(tape.zeros(p.input));
    }
    let outputs: Vec<Var> = seq.windows(p.window).map(|w| conv_at(tape, w, p)).collect::<Result<_>>()?;
    tape.max(&outputs)
}

/// Causal convolution over utterance vectors: position `k` sees
/// `k-w+1 ..= k`, with zeros before the start. ReLU output per position.
pub fn cnn_context(tape: &mut Tape, xs: &[Var], p: &CnnEncoderParams) -> Result<Vec<Var>> {
    let pad = p.window - 1;
    let mut seq = Vec::with_capacity(xs.len() + pad);
    if pad > 0 && !xs.is_empty() {
        let z = tape.zeros(p.input);
        seq.extend(std::iter::repeat_n(z, pad));
    }
    seq.extend_from_slice(xs);
    (0..xs.len()).map(|k| conv_at(tape, &seq[k..k + p.window], p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ParamSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn make(input: usize, filters: usize, window: usize) -> (ParamSet, CnnEncoderParams) {
        let mut ps = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p =
            CnnEncoderParams::new(&mut Initializer { params: &mut ps, rng: &mut rng }, "cnn", input, filters, window)
                .unwrap();
        (ps, p)
    }

    #[test]
    fn zero_window_rejected() {
        let mut ps = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(CnnEncoderParams::new(&mut Initializer { params: &mut ps, rng: &mut rng }, "c", 2, 2, 0).is_err());
    }

    #[test]
    fn short_sequence_is_padded() {
        let (ps, p) = make(2, 3, 4);
        let mut tape = Tape::new(&ps);
        let x = tape.constant_vector(vec![0.5, -0.5]);
        let v = cnn_encode(&mut tape, &[x], &p).unwrap();
        assert_eq!(tape.value(v).len(), 3);
        // Equals the single window [x, 0, 0, 0].
        let z = tape.zeros(2);
        let direct = conv_at(&mut tape, &[x, z, z, z], &p).unwrap();
        assert_eq!(tape.value(v), tape.value(direct));
    }

    #[test]
    fn zero_filter_with_unit_bias() {
        let (mut ps, p) = make(2, 1, 2);
        ps.get_mut(p.filters_w).values_mut().fill(0.0);
        ps.get_mut(p.bias).values_mut().fill(1.0);
        let mut tape = Tape::new(&ps);
        let xs: Vec<Var> = (0..3).map(|i| tape.constant_vector(vec![i as f64, 1.0])).collect();
        let v = cnn_encode(&mut tape, &xs, &p).unwrap();
        assert_eq!(tape.value(v), &[1.0]);
    }

    #[test]
    fn hand_convolution() {
        // d = 1, w = 2, filter [2, -1], bias 0.5, x = [1, 3, -2]
        // windows: 2*1 - 3 + 0.5 = -0.5 -> 0; 2*3 + 2 + 0.5 = 8.5
        let (mut ps, p) = make(1, 1, 2);
        ps.get_mut(p.filters_w).values_mut().copy_from_slice(&[2.0, -1.0]);
        ps.get_mut(p.bias).values_mut().copy_from_slice(&[0.5]);
        let mut tape = Tape::new(&ps);
        let xs: Vec<Var> = [1.0, 3.0, -2.0].iter().map(|&v| tape.constant_vector(vec![v])).collect();
        let v = cnn_encode(&mut tape, &xs, &p).unwrap();
        assert_eq!(tape.value(v), &[8.5]);

        // Causal context: [0,1] -> -1+0.5 -> 0; [1,3] -> 2-3+0.5 -> 0; [3,-2] -> 8.5
        let ctx = cnn_context(&mut tape, &xs, &p).unwrap();
        let vals: Vec<f64> = ctx.iter().map(|&c| tape.value(c)[0]).collect();
        assert_eq!(vals, vec![0.0, 0.0, 8.5]);
    }

    #[test]
    fn context_padding_and_unit_window() {
        let (ps, p) = make(2, 3, 4);
        let mut tape = Tape::new(&ps);
        let xs: Vec<Var> = (0..2).map(|i| tape.constant_vector(vec![i as f64, 0.5])).collect();
        let ctx = cnn_context(&mut tape, &xs, &p).unwrap();
        assert_eq!(ctx.len(), 2);

        let (ps, p) = make(2, 3, 1);
        let mut tape = Tape::new(&ps);
        let xs: Vec<Var> = (0..3).map(|i| tape.constant_vector(vec![i as f64, -0.5])).collect();
        let ctx = cnn_context(&mut tape, &xs, &p).unwrap();
        for (k, &x) in xs.iter().enumerate() {
            let w = tape.param(p.filters_w);
            let b = tape.param(p.bias);
            let a = tape.affine(w, x, b).unwrap();
            let r = tape.relu(a).unwrap();
            assert_eq!(tape.value(ctx[k]), tape.value(r));
        }
    }
}
