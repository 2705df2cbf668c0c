//! Conversation-level encoders: chain LSTM, causal CNN, Tree-LSTM and DAG-LSTM.

use serde::{Deserialize, Serialize};

use super::cnn::{cnn_context, CnnEncoderParams};
use super::init::Initializer;
use super::lstm::{lstm_sequence, LstmParams, FORGET_BIAS_INIT};
use crate::autodiff::{ParamId, Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{ConversationDag, EdgeType};

/// Gate weights shared by Tree-LSTM and DAG-LSTM nodes. Hidden matrices are
/// indexed by edge type; the forget gate uses one matrix per (child edge,
/// contributing edge) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagLstmParams {
    pub w_ix: ParamId,
    pub w_fx: ParamId,
    pub w_ox: ParamId,
    pub w_gx: ParamId,
    pub b_i: ParamId,
    pub b_f: ParamId,
    pub b_o: ParamId,
    pub b_g: ParamId,
    pub w_ih: [ParamId; 2],
    pub w_oh: [ParamId; 2],
    pub w_gh: [ParamId; 2],
    pub w_fh: [[ParamId; 2]; 2],
    pub input: usize,
    pub hidden: usize,
}

const EDGE_TAGS: [&str; 2] = ["T", "S"];

impl DagLstmParams {
    pub fn new(init: &mut Initializer, prefix: &str, input: usize, hidden: usize) -> Self {
        let mut m = |n: String, cols: usize| init.matrix(&format!("{prefix}.{n}"), hidden, cols);
        let w_ix = m("W_ix".into(), input);
        let w_fx = m("W_fx".into(), input);
        let w_ox = m("W_ox".into(), input);
        let w_gx = m("W_gx".into(), input);
        let w_ih = EDGE_TAGS.map(|e| m(format!("W_ih.{e}"), hidden));
        let w_oh = EDGE_TAGS.map(|e| m(format!("W_oh.{e}"), hidden));
        let w_gh = EDGE_TAGS.map(|e| m(format!("W_gh.{e}"), hidden));
        let w_fh = EDGE_TAGS.map(|a| EDGE_TAGS.map(|b| m(format!("W_fh.{a}{b}"), hidden)));
        DagLstmParams {
            w_ix,
            w_fx,
            w_ox,
            w_gx,
            b_i: init.bias(&format!("{prefix}.b_i"), hidden, 0.0),
            b_f: init.bias(&format!("{prefix}.b_f"), hidden, FORGET_BIAS_INIT),
            b_o: init.bias(&format!("{prefix}.b_o"), hidden, 0.0),
            b_g: init.bias(&format!("{prefix}.b_g"), hidden, 0.0),
            w_ih,
            w_oh,
            w_gh,
            w_fh,
            input,
            hidden,
        }
    }
}

/// Hidden and cell vector of one conversation node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub h: Var,
    pub c: Var,
}

/// How children's forget-gated cells are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellRule {
    Sum,
    Max,
}

fn gate_pre(
    tape: &mut Tape,
    wx: ParamId,
    x: Var,
    hidden: impl IntoIterator<Item = (ParamId, Var)>,
    b: ParamId,
) -> Result<Var> {
    let mut terms = vec![(tape.param(wx), x)];
    for (w, h) in hidden {
        terms.push((tape.param(w), h));
    }
    let b = tape.param(b);
    tape.linear(&terms, Some(b))
}

/// One Tree-LSTM (`Sum`) or DAG-LSTM (`Max`) node update.
pub fn dag_node(
    tape: &mut Tape,
    x: Var,
    children: &[(NodeState, EdgeType)],
    p: &DagLstmParams,
    rule: CellRule,
) -> Result<NodeState> {
    if children.len() > 2 {
        return Err(Error::usage(format!("a node has {} children; at most 2 are supported", children.len())));
    }
    let typed =
        |w: &[ParamId; 2]| -> Vec<(ParamId, Var)> { children.iter().map(|(s, e)| (w[e.index()], s.h)).collect() };
    let i_pre = gate_pre(tape, p.w_ix, x, typed(&p.w_ih), p.b_i)?;
    let o_pre = gate_pre(tape, p.w_ox, x, typed(&p.w_oh), p.b_o)?;
    let g_pre = gate_pre(tape, p.w_gx, x, typed(&p.w_gh), p.b_g)?;
    let i = tape.sigmoid(i_pre)?;
    let o = tape.sigmoid(o_pre)?;
    let g = tape.tanh(g_pre)?;
    let ig = tape.mul(i, g)?;

    let mut gated = Vec::with_capacity(children.len());
    for (child, e) in children {
        let row = &p.w_fh[e.index()];
        let hidden: Vec<(ParamId, Var)> = children.iter().map(|(s, e2)| (row[e2.index()], s.h)).collect();
        let f_pre = gate_pre(tape, p.w_fx, x, hidden, p.b_f)?;
        let f = tape.sigmoid(f_pre)?;
        gated.push(tape.mul(f, child.c)?);
    }
    let c = if gated.is_empty() {
        ig
    } else {
        let combined = match rule {
            CellRule::Sum => tape.add_all(&gated)?,
            CellRule::Max => tape.max(&gated)?,
        };
        tape.add(ig, combined)?
    };
    let tc = tape.tanh(c)?;
    let h = tape.mul(o, tc)?;
    Ok(NodeState { h, c })
}

pub fn treelstm_node(
    tape: &mut Tape,
    x: Var,
    children: &[(NodeState, EdgeType)],
    p: &DagLstmParams,
) -> Result<NodeState> {
    dag_node(tape, x, children, p, CellRule::Sum)
}

pub fn daglstm_node(
    tape: &mut Tape,
    x: Var,
    children: &[(NodeState, EdgeType)],
    p: &DagLstmParams,
) -> Result<NodeState> {
    dag_node(tape, x, children, p, CellRule::Max)
}

/// Which conversation encoder a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    None,
    ChainLstm,
    CnnContext,
    TreeLstm,
    DagLstm,
}

/// Parameters matching an [`EncoderKind`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContextParams {
    None,
    ChainLstm(LstmParams),
    CnnContext(CnnEncoderParams),
    TreeLstm(DagLstmParams),
    DagLstm(DagLstmParams),
}

impl ContextParams {
    pub fn kind(&self) -> EncoderKind {
        match self {
            ContextParams::None => EncoderKind::None,
            ContextParams::ChainLstm(_) => EncoderKind::ChainLstm,
            ContextParams::CnnContext(_) => EncoderKind::CnnContext,
            ContextParams::TreeLstm(_) => EncoderKind::TreeLstm,
            ContextParams::DagLstm(_) => EncoderKind::DagLstm,
        }
    }

    /// Size of the context vector given utterance vectors of size `input`.
    pub fn output_dim(&self, input: usize) -> usize {
        match self {
            ContextParams::None => input,
            ContextParams::ChainLstm(p) => p.hidden,
            ContextParams::CnnContext(p) => p.filters,
            ContextParams::TreeLstm(p) | ContextParams::DagLstm(p) => p.hidden,
        }
    }
}

/// Context vector `phi` per utterance; `cell` is present for recurrent kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContextState {
    pub phi: Var,
    pub cell: Option<Var>,
}

/// Encodes utterance vectors in index order. Node `k` only ever sees nodes
/// `0..=k`.
pub fn encode_conversation(
    tape: &mut Tape,
    dag: &ConversationDag,
    utterances: &[Var],
    kind: EncoderKind,
    params: &ContextParams,
) -> Result<Vec<ContextState>> {
    if utterances.len() != dag.len() {
        return Err(Error::usage(format!(
            "conversation has {} utterance vectors but the graph has {} nodes",
            utterances.len(),
            dag.len()
        )));
    }
    if params.kind() != kind {
        return Err(Error::usage(format!("encoder kind {kind:?} does not match parameters for {:?}", params.kind())));
    }
    match params {
        ContextParams::None => Ok(utterances.iter().map(|&u| ContextState { phi: u, cell: None }).collect()),
        ContextParams::ChainLstm(p) => Ok(lstm_sequence(tape, utterances, p)?
            .into_iter()
            .map(|s| ContextState { phi: s.h, cell: Some(s.c) })
            .collect()),
        ContextParams::CnnContext(p) => {
            Ok(cnn_context(tape, utterances, p)?.into_iter().map(|phi| ContextState { phi, cell: None }).collect())
        }
        ContextParams::TreeLstm(p) | ContextParams::DagLstm(p) => {
            let rule = if kind == EncoderKind::TreeLstm { CellRule::Sum } else { CellRule::Max };
            let states = encode_dag(tape, dag, utterances, p, rule)?;
            Ok(states.into_iter().map(|s| ContextState { phi: s.h, cell: Some(s.c) }).collect())
        }
    }
}

/// Runs Tree/DAG-LSTM nodes over the graph in index order.
pub fn encode_dag(
    tape: &mut Tape,
    dag: &ConversationDag,
    utterances: &[Var],
    p: &DagLstmParams,
    rule: CellRule,
) -> Result<Vec<NodeState>> {
    let mut states: Vec<NodeState> = Vec::with_capacity(dag.len());
    for (k, &x) in utterances.iter().enumerate() {
        let children: Vec<(NodeState, EdgeType)> = dag.children(k).iter().map(|&(j, e)| (states[j], e)).collect();
        states.push(dag_node(tape, x, &children, p, rule)?);
    }
    Ok(states)
}
