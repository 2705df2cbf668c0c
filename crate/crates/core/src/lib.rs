//! Dialogue-act classification over multi-party conversations.
//!
//! Utterances are encoded with a BiLSTM (or CNN) and max pooling; the
//! conversation is then encoded over a DAG whose edges link each utterance
//! to the previous utterance and to the same speaker's previous utterance.
//! The DAG-LSTM cell combines its children with an elementwise maximum,
//! which keeps cell magnitudes linear in conversation length.

pub mod autodiff;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod graph;
pub mod model;
pub mod train;

pub use error::{Error, Result};
