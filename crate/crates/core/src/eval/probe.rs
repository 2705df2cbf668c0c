use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::autodiff::{ParamId, ParamSet, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{count_additive_terms, longest_path_terms, ConversationDag, Family};
use crate::model::context::{encode_dag, CellRule, DagLstmParams};
use crate::model::init::Initializer;

/// Default saturating bias for the forced-gate probe.
pub const PROBE_BIAS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeNode {
    /// 1-based node index.
    pub node: usize,
    /// `‖c‖∞` at the node.
    pub magnitude: f64,
    /// Path-count prediction for the same node.
    pub oracle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProbeResult {
    pub family: Family,
    pub rule: CellRule,
    pub length: usize,
    pub bias: f64,
    pub nodes: Vec<ProbeNode>,
}

impl GrowthProbeResult {
    pub fn sink(&self) -> ProbeNode {
        *self.nodes.last().expect("length >= 1")
    }

    pub fn max_relative_error(&self) -> f64 {
        self.nodes.iter().map(|n| (n.magnitude - n.oracle).abs() / n.oracle).fold(0.0, f64::max)
    }
}

/// Cell magnitudes with every gate pinned open and the candidate pinned to 1,
/// so each node's cell counts the unit contributions reaching it.
pub fn growth_probe(length: usize, family: Family, rule: CellRule, bias: f64) -> Result<GrowthProbeResult> {
    if length == 0 {
        return Err(Error::usage("probe length must be at least 1"));
    }
    let dag = family.dag(length);
    let nodes = probe_dag(&dag, rule, bias)?;
    Ok(GrowthProbeResult { family, rule, length, bias, nodes })
}

/// The forced-gate probe on an arbitrary conversation graph.
pub fn probe_dag(dag: &ConversationDag, rule: CellRule, bias: f64) -> Result<Vec<ProbeNode>> {
    let mut params = ParamSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = DagLstmParams::new(&mut Initializer { params: &mut params, rng: &mut rng }, "probe", 1, 1);
    let ids: Vec<ParamId> = params.ids().collect();
    for id in ids {
        let v = if [p.b_i, p.b_f, p.b_g].contains(&id) { bias } else { 0.0 };
        params.get_mut(id).values_mut().fill(v);
    }
    let mut tape = Tape::new(&params);
    let xs: Vec<Var> = (0..dag.len()).map(|_| tape.zeros(1)).collect();
    let states = encode_dag(&mut tape, dag, &xs, &p, rule)?;
    let oracle: Vec<f64> = match rule {
        CellRule::Sum => count_additive_terms(dag).into_iter().map(|t| t as f64).collect(),
        CellRule::Max => longest_path_terms(dag).into_iter().map(|t| t as f64).collect(),
    };
    Ok(states
        .iter()
        .zip(oracle)
        .enumerate()
        .map(|(k, (s, oracle))| ProbeNode {
            node: k + 1,
            magnitude: tape.value(s.c).iter().fold(0.0, |m, v| f64::max(m, v.abs())),
            oracle,
        })
        .collect())
}
