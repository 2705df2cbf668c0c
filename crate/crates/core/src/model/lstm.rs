use super::init::Initializer;
use crate::autodiff::{ParamId, Tape, Var};
use crate::error::{Error, Result};

/// Forget-gate bias at initialisation.
pub const FORGET_BIAS_INIT: f64 = 1.0;

/// Full-matrix peephole weights reading the cell state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peepholes {
    pub w_ic: ParamId,
    pub w_fc: ParamId,
    pub w_oc: ParamId,
}

/// Weights of one LSTM direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmParams {
    pub w_ix: ParamId,
    pub w_ih: ParamId,
    pub w_fx: ParamId,
    pub w_fh: ParamId,
    pub w_ox: ParamId,
    pub w_oh: ParamId,
    pub w_cx: ParamId,
    pub w_ch: ParamId,
    pub b_i: ParamId,
    pub b_f: ParamId,
    pub b_o: ParamId,
    pub b_c: ParamId,
    pub peepholes: Option<Peepholes>,
    pub input: usize,
    pub hidden: usize,
}

impl LstmParams {
    pub fn new(init: &mut Initializer, prefix: &str, input: usize, hidden: usize, peepholes: bool) -> Self {
        let mut m = |n: &str, cols: usize| init.matrix(&format!("{prefix}.{n}"), hidden, cols);
        let w_ix = m("W_ix", input);
        let w_ih = m("W_ih", hidden);
        let w_fx = m("W_fx", input);
        let w_fh = m("W_fh", hidden);
        let w_ox = m("W_ox", input);
        let w_oh = m("W_oh", hidden);
        let w_cx = m("W_cx", input);
        let w_ch = m("W_ch", hidden);
        let peepholes =
            peepholes.then(|| Peepholes { w_ic: m("W_ic", hidden), w_fc: m("W_fc", hidden), w_oc: m("W_oc", hidden) });
        LstmParams {
            w_ix,
            w_ih,
            w_fx,
            w_fh,
            w_ox,
            w_oh,
            w_cx,
            w_ch,
            b_i: init.bias(&format!("{prefix}.b_i"), hidden, 0.0),
            b_f: init.bias(&format!("{prefix}.b_f"), hidden, FORGET_BIAS_INIT),
            b_o: init.bias(&format!("{prefix}.b_o"), hidden, 0.0),
            b_c: init.bias(&format!("{prefix}.b_c"), hidden, 0.0),
            peepholes,
            input,
            hidden,
        }
    }
}

/// Hidden and cell vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

impl LstmState {
    pub fn zeros(tape: &mut Tape, hidden: usize) -> Self {
        LstmState { h: tape.zeros(hidden), c: tape.zeros(hidden) }
    }
}

/// One LSTM step.
///
/// Input and forget gates read `c_{t-1}` through the peepholes; the output
/// gate reads the freshly computed `c_t`.
pub fn lstm_step(tape: &mut Tape, x: Var, prev: LstmState, p: &LstmParams) -> Result<LstmState> {
    let gate = |tape: &mut Tape, wx: ParamId, wh: ParamId, wc: Option<(ParamId, Var)>, b: ParamId| -> Result<Var> {
        let mut terms = vec![(tape.param(wx), x), (tape.param(wh), prev.h)];
        if let Some((w, c)) = wc {
            terms.push((tape.param(w), c));
        }
        let b = tape.param(b);
        tape.linear(&terms, Some(b))
    };
    let peep = p.peepholes;
    let i_pre = gate(tape, p.w_ix, p.w_ih, peep.map(|q| (q.w_ic, prev.c)), p.b_i)?;
    let f_pre = gate(tape, p.w_fx, p.w_fh, peep.map(|q| (q.w_fc, prev.c)), p.b_f)?;
    let g_pre = gate(tape, p.w_cx, p.w_ch, None, p.b_c)?;
    let i = tape.sigmoid(i_pre)?;
    let f = tape.sigmoid(f_pre)?;
    let g = tape.tanh(g_pre)?;
    let fc = tape.mul(f, prev.c)?;
    let ig = tape.mul(i, g)?;
    let c = tape.add(fc, ig)?;
    let o_pre = gate(tape, p.w_ox, p.w_oh, peep.map(|q| (q.w_oc, c)), p.b_o)?;
    let o = tape.sigmoid(o_pre)?;
    let tc = tape.tanh(c)?;
    let h = tape.mul(o, tc)?;
    Ok(LstmState { h, c })
}

/// Runs an LSTM left to right from the zero state.
pub fn lstm_sequence(tape: &mut Tape, xs: &[Var], p: &LstmParams) -> Result<Vec<LstmState>> {
    let mut state = LstmState::zeros(tape, p.hidden);
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        state = lstm_step(tape, x, state, p)?;
        out.push(state);
    }
    Ok(out)
}

/// Per-position `[h_fwd; h_bwd]` from independent forward and backward LSTMs.
pub fn bilstm_encode(tape: &mut Tape, xs: &[Var], fwd: &LstmParams, bwd: &LstmParams) -> Result<Vec<Var>> {
    if xs.is_empty() {
        return Err(Error::usage("bilstm_encode on an empty sequence"));
    }
    let forward = lstm_sequence(tape, xs, fwd)?;
    let reversed: Vec<Var> = xs.iter().rev().copied().collect();
    let mut backward = lstm_sequence(tape, &reversed, bwd)?;
    backward.reverse();
    forward.iter().zip(&backward).map(|(f, b)| tape.concat(&[f.h, b.h])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{grad_check_params, ParamSet, Tensor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn make(input: usize, hidden: usize, seed: u64) -> (ParamSet, LstmParams) {
        let mut ps = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = LstmParams::new(&mut Initializer { params: &mut ps, rng: &mut rng }, "lstm", input, hidden, true);
        (ps, p)
    }

    fn zero_all(ps: &mut ParamSet) {
        for id in ps.ids().collect::<Vec<_>>() {
            ps.get_mut(id).values_mut().iter_mut().for_each(|v| *v = 0.0);
        }
    }

    #[test]
    fn zero_weights_give_half_gates_and_zero_state() {
        let (mut ps, p) = make(3, 4, 0);
        zero_all(&mut ps);
        let mut tape = Tape::new(&ps);
        let x = tape.constant_vector(vec![0.3, -0.2, 0.9]);
        let s0 = LstmState::zeros(&mut tape, 4);
        let s = lstm_step(&mut tape, x, s0, &p).unwrap();
        assert!(tape.value(s.c).iter().all(|&v| v == 0.0));
        assert!(tape.value(s.h).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn saturated_forget_keeps_cell() {
        let (mut ps, p) = make(3, 4, 0);
        zero_all(&mut ps);
        ps.get_mut(p.b_f).values_mut().iter_mut().for_each(|v| *v = 100.0);
        ps.get_mut(p.b_i).values_mut().iter_mut().for_each(|v| *v = -100.0);
        let mut tape = Tape::new(&ps);
        let x = tape.constant_vector(vec![0.3, -0.2, 0.9]);
        let v = vec![0.5, -1.5, 2.0, 0.1];
        let prev = LstmState { h: tape.zeros(4), c: tape.constant_vector(v.clone()) };
        let s = lstm_step(&mut tape, x, prev, &p).unwrap();
        for (a, b) in tape.value(s.c).iter().zip(&v) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn step_gradients_match_finite_differences() {
        let (ps, p) = make(3, 4, 11);
        let x = [0.4, -0.7, 0.2];
        let report = grad_check_params(
            "lstm_step",
            &ps,
            |tape| {
                let xv = tape.constant_vector(x.to_vec());
                let prev = LstmState {
                    h: tape.constant_vector(vec![0.1, -0.3, 0.2, 0.05]),
                    c: tape.constant_vector(vec![0.5, -0.4, 0.3, -0.2]),
                };
                let s = lstm_step(tape, xv, prev, &p)?;
                tape.sum(s.h)
            },
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn bilstm_length_one_and_empty() {
        let (ps, fwd) = make(2, 3, 1);
        let mut ps2 = ps.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bwd = LstmParams::new(&mut Initializer { params: &mut ps2, rng: &mut rng }, "bwd", 2, 3, true);
        let mut tape = Tape::new(&ps2);
        let x = tape.constant_vector(vec![0.5, -0.5]);
        let out = bilstm_encode(&mut tape, &[x], &fwd, &bwd).unwrap();
        assert_eq!(out.len(), 1);
        let z = LstmState::zeros(&mut tape, 3);
        let f = lstm_step(&mut tape, x, z, &fwd).unwrap();
        let b = lstm_step(&mut tape, x, z, &bwd).unwrap();
        let mut expected = tape.value(f.h).to_vec();
        expected.extend_from_slice(tape.value(b.h));
        assert_eq!(tape.value(out[0]), expected.as_slice());
        assert!(bilstm_encode(&mut tape, &[], &fwd, &bwd).is_err());
    }

    #[test]
    fn palindrome_with_shared_weights_is_mirror_symmetric() {
        let (ps, p) = make(2, 3, 5);
        let seq = [[0.1, 0.2], [-0.5, 0.3], [0.9, -0.1], [-0.5, 0.3], [0.1, 0.2]];
        let mut tape = Tape::new(&ps);
        let xs: Vec<Var> = seq.iter().map(|v| tape.constant_vector(v.to_vec())).collect();
        let out = bilstm_encode(&mut tape, &xs, &p, &p).unwrap();
        let t = seq.len();
        for k in 0..t {
            let a = &tape.value(out[k])[..3];
            let b = &tape.value(out[t - 1 - k])[3..];
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn bilstm_gradients_match_finite_differences() {
        let mut ps = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut init = Initializer { params: &mut ps, rng: &mut rng };
        let fwd = LstmParams::new(&mut init, "fwd", 3, 3, true);
        let bwd = LstmParams::new(&mut init, "bwd", 3, 3, true);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let inputs: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let wsum = ps.add("readout", Tensor::vector(vec![0.3, -0.7, 0.5, 0.9, -0.2, 0.4]));
        let report = grad_check_params(
            "bilstm",
            &ps,
            |tape| {
                let xs: Vec<Var> = inputs.iter().map(|v| tape.constant_vector(v.clone())).collect();
                let out = bilstm_encode(tape, &xs, &fwd, &bwd)?;
                let r = tape.param(wsum);
                let weighted: Vec<Var> = out.iter().map(|&o| tape.mul(o, r)).collect::<Result<_>>()?;
                let total = tape.add_all(&weighted)?;
                tape.sum(total)
            },
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.pass, "{report:?}");
    }

    #[test]
    fn fuzzed_inputs_stay_finite() {
        let (ps, p) = make(3, 4, 9);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10_000 {
            let mut tape = Tape::new(&ps);
            let mut r = || rng.gen_range(-1e3..1e3);
            let x = tape.constant_vector(vec![r(), r(), r()]);
            let prev = LstmState {
                h: tape.constant_vector(vec![r(), r(), r(), r()]),
                c: tape.constant_vector(vec![r(), r(), r(), r()]),
            };
            let s = lstm_step(&mut tape, x, prev, &p).unwrap();
            assert!(tape.value(s.h).iter().chain(tape.value(s.c)).all(|v| v.is_finite()));
        }
    }

    #[test]
    fn every_position_influences_the_output() {
        let mut ps = ParamSet::new();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut init = Initializer { params: &mut ps, rng: &mut rng };
        let fwd = LstmParams::new(&mut init, "fwd", 2, 3, true);
        let bwd = LstmParams::new(&mut init, "bwd", 2, 3, true);
        let base: Vec<Vec<f64>> = (0..5).map(|i| vec![0.1 * i as f64, -0.2]).collect();
        let run = |seq: &[Vec<f64>]| {
            let mut tape = Tape::new(&ps);
            let xs: Vec<Var> = seq.iter().map(|v| tape.constant_vector(v.clone())).collect();
            let out = bilstm_encode(&mut tape, &xs, &fwd, &bwd).unwrap();
            out.iter().map(|&o| tape.value(o).to_vec()).collect::<Vec<_>>()
        };
        let reference = run(&base);
        for pos in 0..base.len() {
            let mut seq = base.clone();
            seq[pos][0] += 0.5;
            assert_ne!(run(&seq), reference, "position {pos}");
        }
    }
}
