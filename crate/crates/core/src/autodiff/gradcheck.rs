//! Central finite-difference checks of tape gradients.

use super::tape::{Tape, Var};
use super::tensor::{ParamId, ParamSet, Tensor};
use crate::error::{Error, Result};

/// Outcome of comparing analytic and numeric gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub op: String,
    pub max_relative_error: f64,
    /// (input or parameter index, flat coordinate) of the worst disagreement.
    pub worst: (usize, usize),
    pub coordinates: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl GradCheckReport {
    fn new(op: &str, tolerance: f64) -> Self {
        GradCheckReport {
            op: op.to_string(),
            max_relative_error: 0.0,
            worst: (0, 0),
            coordinates: 0,
            tolerance,
            pass: true,
        }
    }

    fn record(&mut self, input: usize, coord: usize, analytic: f64, numeric: f64) {
        let err = relative_error(analytic, numeric);
        self.coordinates += 1;
        if err > self.max_relative_error || err.is_nan() {
            self.max_relative_error = err;
            self.worst = (input, coord);
        }
        self.pass = self.max_relative_error <= self.tolerance;
    }
}

/// Denominator floor for [`relative_error`]. Central differences with a
/// 1e-5 step carry round-off around 1e-11, so gradients far below this
/// floor cannot be resolved relatively.
pub const RELATIVE_ERROR_FLOOR: f64 = 1e-6;

/// `|a - n| / max(|a| + |n|, RELATIVE_ERROR_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(RELATIVE_ERROR_FLOOR)
}

fn scalar_of(tape: &Tape, v: Var) -> Result<f64> {
    let vals = tape.value(v);
    if vals.len() != 1 {
        return Err(Error::usage("gradient check needs a scalar-valued function"));
    }
    Ok(vals[0])
}

/// Checks the gradient of a scalar function of free `inputs`.
pub fn grad_check<F>(name: &str, f: F, inputs: &[Tensor], step: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if step <= 0.0 {
        return Err(Error::usage("finite-difference step must be positive"));
    }
    let empty = ParamSet::new();
    let eval = |xs: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new(&empty);
        let vars: Vec<Var> = xs.iter().map(|t| tape.leaf(t)).collect();
        let out = f(&mut tape, &vars)?;
        scalar_of(&tape, out)
    };

    let mut tape = Tape::new(&empty);
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t)).collect();
    let out = f(&mut tape, &vars)?;
    scalar_of(&tape, out)?;
    tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars
        .iter()
        .zip(inputs)
        .map(|(&v, t)| tape.grad(v).map_or_else(|| vec![0.0; t.numel()], <[f64]>::to_vec))
        .collect();

    let mut report = GradCheckReport::new(name, tol);
    let mut probe = inputs.to_vec();
    for (i, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let orig = probe[i].values()[j];
            probe[i].values_mut()[j] = orig + step;
            let plus = eval(&probe)?;
            probe[i].values_mut()[j] = orig - step;
            let minus = eval(&probe)?;
            probe[i].values_mut()[j] = orig;
            report.record(i, j, a, (plus - minus) / (2.0 * step));
        }
    }
    Ok(report)
}

/// Checks gradients with respect to every trainable parameter in `params`.
///
/// `f` builds the scalar objective on a fresh tape over the (possibly
/// perturbed) parameter set; it must be deterministic.
pub fn grad_check_params<F>(name: &str, params: &ParamSet, f: F, step: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape) -> Result<Var>,
{
    if step <= 0.0 {
        return Err(Error::usage("finite-difference step must be positive"));
    }
    let mut tape = Tape::new(params);
    let out = f(&mut tape)?;
    scalar_of(&tape, out)?;
    tape.backward(out)?;
    let grads = tape.param_grads();
    drop(tape);

    let eval = |ps: &ParamSet| -> Result<f64> {
        let mut tape = Tape::new(ps);
        let out = f(&mut tape)?;
        scalar_of(&tape, out)
    };

    let mut report = GradCheckReport::new(name, tol);
    let mut probe = params.clone();
    let ids: Vec<ParamId> = params.ids().filter(|&id| params.is_trainable(id)).collect();
    for id in ids {
        let n = params.get(id).numel();
        for j in 0..n {
            let a = grads.get(id).map_or(0.0, |g| g[j]);
            let orig = probe.get(id).values()[j];
            probe.get_mut(id).values_mut()[j] = orig + step;
            let plus = eval(&probe)?;
            probe.get_mut(id).values_mut()[j] = orig - step;
            let minus = eval(&probe)?;
            probe.get_mut(id).values_mut()[j] = orig;
            report.record(id.index(), j, a, (plus - minus) / (2.0 * step));
        }
    }
    Ok(report)
}
