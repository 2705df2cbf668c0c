#![allow(dead_code)]

use std::collections::BTreeSet;

use dagact::data::{corpus_words, random_embeddings, Conversation, DialogueAct, EmbeddingTable};
use dagact::model::{Architecture, Model, ModelConfig};

/// Accuracy, per-class F1 and macro-F1 (percent) straight from the
/// definitions, by scanning the label vectors once per class.
pub fn brute_force_metrics(gold: &[usize], pred: &[usize]) -> (f64, [f64; 5], f64) {
    assert_eq!(gold.len(), pred.len());
    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    let accuracy = if gold.is_empty() { 0.0 } else { 100.0 * correct as f64 / gold.len() as f64 };
    let mut f1 = [0.0; 5];
    for (c, slot) in f1.iter_mut().enumerate() {
        let tp = gold.iter().zip(pred).filter(|(g, p)| **g == c && **p == c).count() as f64;
        let fp = gold.iter().zip(pred).filter(|(g, p)| **g != c && **p == c).count() as f64;
        let fn_ = gold.iter().zip(pred).filter(|(g, p)| **g == c && **p != c).count() as f64;
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        *slot = if precision + recall > 0.0 { 100.0 * 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    }
    let macro_f1 = (f1[0] + f1[1] + f1[2] + f1[3] + f1[4]) / 5.0;
    (accuracy, f1, macro_f1)
}

/// A four-utterance, two-speaker negotiation.
pub fn tiny_conversation() -> Conversation {
    use DialogueAct::*;
    Conversation::from_parts(
        "tiny",
        &[
            ("alice", "anyone have wood ?", Some(Offer)),
            ("bob", "no sorry", Some(Refusal)),
            ("alice", "for clay ?", Some(Counteroffer)),
            ("bob", "ok deal", Some(Accept)),
        ],
    )
}

pub fn table_for(convs: &[Conversation], dim: usize, seed: u64) -> EmbeddingTable {
    let words: BTreeSet<String> = corpus_words(convs);
    random_embeddings(&words, dim, seed)
}

pub fn small_config(arch: Architecture, units: usize) -> ModelConfig {
    ModelConfig {
        architecture: arch,
        utterance_units: units,
        context_units: units,
        cnn_filters: units,
        cnn_window: 2,
        learning_rate: 1e-2,
        dropout: 0.0,
        word_dropout: 0.0,
        ..ModelConfig::default()
    }
}

pub fn small_model(arch: Architecture, convs: &[Conversation], dim: usize, units: usize, seed: u64) -> Model {
    let cfg = ModelConfig { seed, ..small_config(arch, units) };
    Model::new(cfg, table_for(convs, dim, seed)).unwrap()
}
