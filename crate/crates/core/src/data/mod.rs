//! Conversation files, tokenization, vocabularies and embeddings.

mod corpus;
mod embeddings;
mod tokenize;

pub use corpus::{
    apply_word_dropout, label_histogram, load_conversations, parse_conversation_line, parse_conversations,
    split_corpus, word_dropout, write_conversations, Conversation, CorpusSplits, DialogueAct, LabelPolicy,
    LoadedCorpus, Utterance, DISCARDED_LABEL,
};
pub use embeddings::{
    corpus_words, load_embeddings, parse_embeddings, random_embeddings, EmbeddingLoad, EmbeddingTable, Vocab, UNK,
    UNK_ROW,
};
pub use tokenize::{tokenize, tokenize_utterance, EMPTY_TOKEN};
