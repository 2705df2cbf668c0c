//! Utterance encoders, conversation encoders and the full classifier.

pub mod cnn;
pub mod context;
pub mod init;
pub mod lstm;
mod network;
pub mod pool;

pub use network::{
    argmax_label, classify, gold_labels, Architecture, ClassifierParams, EmbeddingMode, Model, ModelConfig, Prediction,
    UtteranceKind, EMBEDDING_PARAM,
};
