use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cnn::{cnn_encode, CnnEncoderParams};
use super::context::{encode_conversation, ContextParams, DagLstmParams, EncoderKind};
use super::init::Initializer;
use super::lstm::{bilstm_encode, LstmParams};
use super::pool::{pool_utterance, UttPoolParams};
use crate::autodiff::{softmax, ParamId, ParamSet, Precision, Tape, Tensor, Var};
use crate::data::{word_dropout, Conversation, DialogueAct, EmbeddingTable, Vocab, UNK_ROW};
use crate::error::{Error, Result};
use crate::graph::build_dag;

/// Utterance encoder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtteranceKind {
    Bilstm,
    Cnn,
}

/// The five utterance/conversation encoder pairings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "cnn-cnn")]
    CnnCnn,
    #[serde(rename = "cnn-lstm")]
    CnnLstm,
    #[serde(rename = "bilstm-none")]
    BilstmNone,
    #[serde(rename = "bilstm-lstm")]
    BilstmLstm,
    #[serde(rename = "bilstm-daglstm")]
    BilstmDaglstm,
}

impl Architecture {
    pub const ALL: [Architecture; 5] = [
        Architecture::CnnCnn,
        Architecture::CnnLstm,
        Architecture::BilstmNone,
        Architecture::BilstmLstm,
        Architecture::BilstmDaglstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::CnnCnn => "cnn-cnn",
            Architecture::CnnLstm => "cnn-lstm",
            Architecture::BilstmNone => "bilstm-none",
            Architecture::BilstmLstm => "bilstm-lstm",
            Architecture::BilstmDaglstm => "bilstm-daglstm",
        }
    }

    pub fn utterance(self) -> UtteranceKind {
        match self {
            Architecture::CnnCnn | Architecture::CnnLstm => UtteranceKind::Cnn,
            _ => UtteranceKind::Bilstm,
        }
    }

    pub fn context(self) -> EncoderKind {
        match self {
            Architecture::CnnCnn => EncoderKind::CnnContext,
            Architecture::CnnLstm | Architecture::BilstmLstm => EncoderKind::ChainLstm,
            Architecture::BilstmNone => EncoderKind::None,
            Architecture::BilstmDaglstm => EncoderKind::DagLstm,
        }
    }

    /// Whether the CNN filter count and window are used.
    pub fn uses_cnn(self) -> bool {
        matches!(self, Architecture::CnnCnn | Architecture::CnnLstm)
    }

    pub fn uses_context_units(self) -> bool {
        matches!(self.context(), EncoderKind::ChainLstm | EncoderKind::DagLstm | EncoderKind::TreeLstm)
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.iter().copied().find(|a| a.name() == s).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|a| a.name()).collect();
            Error::usage(format!("unknown architecture {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

/// Whether word vectors receive gradient updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingMode {
    Fixed,
    FineTune,
}

impl FromStr for EmbeddingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(EmbeddingMode::Fixed),
            "fine-tune" => Ok(EmbeddingMode::FineTune),
            _ => Err(Error::usage(format!("unknown embedding mode {s:?}; expected fixed or fine-tune"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub architecture: Architecture,
    /// BiLSTM hidden size per direction; also the pooled utterance size.
    pub utterance_units: usize,
    /// Hidden size of the chain LSTM or DAG-LSTM.
    pub context_units: usize,
    /// Filter count of both CNN encoders.
    pub cnn_filters: usize,
    /// Window of both CNN encoders.
    pub cnn_window: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub word_dropout: f64,
    pub embedding_mode: EmbeddingMode,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            architecture: Architecture::BilstmDaglstm,
            utterance_units: 100,
            context_units: 100,
            cnn_filters: 100,
            cnn_window: 3,
            learning_rate: 1e-3,
            dropout: 0.2,
            word_dropout: 0.0,
            embedding_mode: EmbeddingMode::FineTune,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.utterance_units == 0 || self.context_units == 0 || self.cnn_filters == 0 {
            return Err(Error::usage("unit and filter counts must be positive"));
        }
        if self.cnn_window == 0 {
            return Err(Error::usage("CNN window must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::usage(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::usage(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if !(0.0..=1.0).contains(&self.word_dropout) {
            return Err(Error::usage(format!("word dropout {} outside [0, 1]", self.word_dropout)));
        }
        Ok(())
    }

    /// Size of the utterance vector fed to the conversation encoder.
    pub fn utterance_dim(&self) -> usize {
        match self.architecture.utterance() {
            UtteranceKind::Bilstm => self.utterance_units,
            UtteranceKind::Cnn => self.cnn_filters,
        }
    }
}

/// Softmax output layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierParams {
    pub w_y: ParamId,
    pub b_y: ParamId,
}

/// Softmax probabilities and the arg-max label (ties go to the lowest index).
pub fn classify(tape: &mut Tape, phi: Var, params: &ClassifierParams) -> Result<(Vec<f64>, DialogueAct)> {
    let logits = classifier_logits(tape, phi, params)?;
    let probs = softmax(tape.value(logits));
    let label = argmax_label(&probs);
    Ok((probs, label))
}

fn classifier_logits(tape: &mut Tape, phi: Var, params: &ClassifierParams) -> Result<Var> {
    let w = tape.param(params.w_y);
    let b = tape.param(params.b_y);
    tape.affine(w, phi, b)
}

pub fn argmax_label(scores: &[f64]) -> DialogueAct {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    DialogueAct::from_index(best).expect("five scores")
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(clippy::large_enum_variant)]
enum UtteranceParams {
    Bilstm { fwd: LstmParams, bwd: LstmParams, pool: UttPoolParams },
    Cnn(CnnEncoderParams),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Network {
    embedding: ParamId,
    utterance: UtteranceParams,
    context: ContextParams,
    classifier: ClassifierParams,
}

/// Name of the embedding parameter tensor.
pub const EMBEDDING_PARAM: &str = "embedding";

fn build_network(config: &ModelConfig, embedding: Tensor, params: &mut ParamSet) -> Result<Network> {
    config.validate()?;
    if embedding.shape().len() != 2 || embedding.shape()[0] == 0 {
        return Err(Error::usage("embedding matrix must be a non-empty [V x d] matrix"));
    }
    let dim = embedding.shape()[1];
    let embedding = params.add(EMBEDDING_PARAM, embedding);
    params.set_trainable(embedding, config.embedding_mode == EmbeddingMode::FineTune);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut init = Initializer { params, rng: &mut rng };

    let utterance = match config.architecture.utterance() {
        UtteranceKind::Bilstm => {
            let h = config.utterance_units;
            UtteranceParams::Bilstm {
                fwd: LstmParams::new(&mut init, "utt.fwd", dim, h, true),
                bwd: LstmParams::new(&mut init, "utt.bwd", dim, h, true),
                pool: UttPoolParams::new(&mut init, "utt.pool", 2 * h, config.utterance_dim()),
            }
        }
        UtteranceKind::Cnn => UtteranceParams::Cnn(CnnEncoderParams::new(
            &mut init,
            "utt.cnn",
            dim,
            config.cnn_filters,
            config.cnn_window,
        )?),
    };
    let f = config.utterance_dim();
    let context = match config.architecture.context() {
        EncoderKind::None => ContextParams::None,
        EncoderKind::ChainLstm => {
            ContextParams::ChainLstm(LstmParams::new(&mut init, "ctx.lstm", f, config.context_units, true))
        }
        EncoderKind::CnnContext => ContextParams::CnnContext(CnnEncoderParams::new(
            &mut init,
            "ctx.cnn",
            f,
            config.cnn_filters,
            config.cnn_window,
        )?),
        EncoderKind::TreeLstm => {
            ContextParams::TreeLstm(DagLstmParams::new(&mut init, "ctx.tree", f, config.context_units))
        }
        EncoderKind::DagLstm => {
            ContextParams::DagLstm(DagLstmParams::new(&mut init, "ctx.dag", f, config.context_units))
        }
    };
    let out = context.output_dim(f);
    let classifier = ClassifierParams {
        w_y: init.matrix("out.W_y", DialogueAct::COUNT, out),
        b_y: init.bias("out.b_y", DialogueAct::COUNT, 0.0),
    };
    Ok(Network { embedding, utterance, context, classifier })
}

/// One utterance's predicted distribution and label.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: DialogueAct,
    pub probs: Vec<f64>,
}

/// Embedding table, encoders and classifier, with their parameters.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ParamSet,
    /// Arithmetic used by every tape this model builds.
    pub precision: Precision,
    net: Network,
}

impl Model {
    /// Fresh model with initial weights drawn from `config.seed`.
    pub fn new(config: ModelConfig, table: EmbeddingTable) -> Result<Model> {
        let mut params = ParamSet::new();
        let net = build_network(&config, table.matrix, &mut params)?;
        Ok(Model { config, vocab: table.vocab, params, net, precision: Precision::Double })
    }

    /// Rebuilds a model from stored tensors; every parameter must be present
    /// with the expected shape.
    pub fn from_parts(config: ModelConfig, vocab: Vocab, tensors: Vec<(String, Tensor)>) -> Result<Model> {
        let embedding = tensors
            .iter()
            .find(|(n, _)| n == EMBEDDING_PARAM)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| Error::Checkpoint("missing embedding tensor".into()))?;
        if embedding.shape().first() != Some(&vocab.len()) {
            return Err(Error::Checkpoint(format!(
                "embedding has shape {:?} but the vocabulary has {} words",
                embedding.shape(),
                vocab.len()
            )));
        }
        let mut params = ParamSet::new();
        let net = build_network(&config, embedding, &mut params)?;
        if tensors.len() != params.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter tensors, found {}",
                params.len(),
                tensors.len()
            )));
        }
        for (name, tensor) in tensors {
            let id = params.find(&name).ok_or_else(|| Error::Checkpoint(format!("unexpected parameter {name:?}")))?;
            if params.get(id).shape() != tensor.shape() {
                return Err(Error::Checkpoint(format!(
                    "parameter {name:?} has shape {:?}, expected {:?}",
                    tensor.shape(),
                    params.get(id).shape()
                )));
            }
            let trainable = params.is_trainable(id);
            *params.get_mut(id) = tensor;
            params.set_trainable(id, trainable);
        }
        Ok(Model { config, vocab, params, net, precision: Precision::Double })
    }

    pub fn embedding_param(&self) -> ParamId {
        self.net.embedding
    }

    pub fn classifier_params(&self) -> ClassifierParams {
        self.net.classifier
    }

    pub fn tape(&self) -> Tape<'_> {
        Tape::new(&self.params).with_precision(self.precision)
    }

    fn utterance_vector(&self, tape: &mut Tape, tokens: &[String], rng: Option<&mut ChaCha8Rng>) -> Result<Var> {
        let mut ids: Vec<usize> = tokens.iter().map(|t| self.vocab.lookup(t)).collect();
        if ids.is_empty() {
            ids.push(UNK_ROW);
        }
        let mut rng = rng;
        if let Some(r) = rng.as_deref_mut() {
            if self.config.word_dropout > 0.0 {
                ids = word_dropout(&ids, &UNK_ROW, self.config.word_dropout, r)?;
            }
        }
        let mut xs = Vec::with_capacity(ids.len());
        for id in ids {
            let x = tape.param_row(self.net.embedding, id)?;
            xs.push(self.maybe_dropout(tape, x, rng.as_deref_mut())?);
        }
        let v = match &self.net.utterance {
            UtteranceParams::Bilstm { fwd, bwd, pool } => {
                let hs = bilstm_encode(tape, &xs, fwd, bwd)?;
                pool_utterance(tape, &hs, pool)?
            }
            UtteranceParams::Cnn(p) => cnn_encode(tape, &xs, p)?,
        };
        self.maybe_dropout(tape, v, rng)
    }

    fn maybe_dropout(&self, tape: &mut Tape, v: Var, rng: Option<&mut ChaCha8Rng>) -> Result<Var> {
        match rng {
            Some(r) if self.config.dropout > 0.0 => tape.dropout(v, self.config.dropout, r),
            _ => Ok(v),
        }
    }

    /// Per-utterance logits. Passing an rng enables word dropout and dropout.
    pub fn logits(&self, tape: &mut Tape, conv: &Conversation, mut rng: Option<&mut ChaCha8Rng>) -> Result<Vec<Var>> {
        if conv.is_empty() {
            return Err(Error::usage(format!("conversation {:?} has no utterances", conv.id)));
        }
        let dag = build_dag(conv);
        let mut upsilon = Vec::with_capacity(conv.len());
        for u in &conv.utterances {
            upsilon.push(self.utterance_vector(tape, &u.tokens, rng.as_deref_mut())?);
        }
        let states = encode_conversation(tape, &dag, &upsilon, self.config.architecture.context(), &self.net.context)?;
        let mut out = Vec::with_capacity(states.len());
        for s in states {
            let phi = self.maybe_dropout(tape, s.phi, rng.as_deref_mut())?;
            out.push(classifier_logits(tape, phi, &self.net.classifier)?);
        }
        Ok(out)
    }

    /// Mean cross-entropy over the conversation's utterances.
    pub fn loss(&self, tape: &mut Tape, conv: &Conversation, rng: Option<&mut ChaCha8Rng>) -> Result<Var> {
        let gold = gold_labels(conv)?;
        let logits = self.logits(tape, conv, rng)?;
        let mut losses = Vec::with_capacity(logits.len());
        for (l, g) in logits.into_iter().zip(gold) {
            losses.push(tape.softmax_cross_entropy(l, g.index())?.0);
        }
        tape.mean(&losses)
    }

    /// Inference with dropout disabled.
    pub fn predict(&self, conv: &Conversation) -> Result<Vec<Prediction>> {
        let mut tape = self.tape();
        let logits = self.logits(&mut tape, conv, None)?;
        Ok(logits
            .into_iter()
            .map(|l| {
                let probs = softmax(tape.value(l));
                Prediction { label: argmax_label(&probs), probs }
            })
            .collect())
    }
}

/// Gold labels, or an error naming the first unlabeled utterance.
pub fn gold_labels(conv: &Conversation) -> Result<Vec<DialogueAct>> {
    conv.utterances
        .iter()
        .map(|u| u.label.ok_or_else(|| Error::Unlabeled { conversation: conv.id.clone(), index: u.index }))
        .collect()
}
