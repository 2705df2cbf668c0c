use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tokenize::tokenize_utterance;
use crate::error::{Error, Result};

/// The five dialogue acts, in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DialogueAct {
    Accept,
    Counteroffer,
    Offer,
    Other,
    Refusal,
}

impl DialogueAct {
    pub const ALL: [DialogueAct; 5] =
        [DialogueAct::Accept, DialogueAct::Counteroffer, DialogueAct::Offer, DialogueAct::Other, DialogueAct::Refusal];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DialogueAct::Accept => "Accept",
            DialogueAct::Counteroffer => "Counteroffer",
            DialogueAct::Offer => "Offer",
            DialogueAct::Other => "Other",
            DialogueAct::Refusal => "Refusal",
        }
    }
}

impl fmt::Display for DialogueAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DialogueAct {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.iter().copied().find(|a| a.name() == s).ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

/// Label excluded from the label set at ingestion time.
pub const DISCARDED_LABEL: &str = "Preference";

#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    /// 1-based position in the conversation.
    pub index: usize,
    pub participant: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub label: Option<DialogueAct>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conversation {
    pub id: String,
    pub utterances: Vec<Utterance>,
}

impl Conversation {
    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn participants(&self) -> Vec<&str> {
        self.utterances.iter().map(|u| u.participant.as_str()).collect()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.utterances.iter().all(|u| u.label.is_some())
    }

    /// Builds a conversation from `(participant, text, label)` triples.
    pub fn from_parts<S: AsRef<str>>(id: &str, parts: &[(S, S, Option<DialogueAct>)]) -> Self {
        Conversation {
            id: id.to_string(),
            utterances: parts
                .iter()
                .enumerate()
                .map(|(i, (p, t, l))| Utterance {
                    index: i + 1,
                    participant: p.as_ref().to_string(),
                    text: t.as_ref().to_string(),
                    tokens: tokenize_utterance(t.as_ref()),
                    label: *l,
                })
                .collect(),
        }
    }

    /// JSON-lines representation (one object, no trailing newline).
    pub fn to_json(&self) -> serde_json::Value {
        let utts: Vec<serde_json::Value> = self
            .utterances
            .iter()
            .map(|u| {
                let mut obj = serde_json::Map::new();
                obj.insert("participant".into(), u.participant.clone().into());
                obj.insert("text".into(), u.text.clone().into());
                if let Some(l) = u.label {
                    obj.insert("label".into(), l.name().into());
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::json!({ "id": self.id, "utterances": utts })
    }
}

#[derive(Debug, Deserialize)]
struct RawUtterance {
    participant: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawConversation {
    id: String,
    utterances: Vec<RawUtterance>,
}

/// Result of reading a conversation file.
#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub conversations: Vec<Conversation>,
    /// Utterances dropped because they carried the discarded label.
    pub dropped: usize,
}

/// How labels are treated when parsing a conversation line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelPolicy {
    /// Drop discarded-label utterances, validate everything else.
    Train,
    /// Keep every utterance; labels are only passed through.
    Predict,
}

fn parse_line(
    source: &str,
    line_no: usize,
    line: &str,
    policy: LabelPolicy,
    dropped: &mut usize,
) -> Result<Conversation> {
    let raw: RawConversation = serde_json::from_str(line).map_err(|e| Error::Format {
        path: source.to_string(),
        line: line_no,
        message: e.to_string(),
    })?;
    let mut utterances = Vec::with_capacity(raw.utterances.len());
    for u in raw.utterances {
        if u.participant.is_empty() {
            return Err(Error::Format {
                path: source.to_string(),
                line: line_no,
                message: "utterance with empty participant".into(),
            });
        }
        let label = match (&u.label, policy) {
            (None, _) => None,
            (Some(l), LabelPolicy::Train) if l == DISCARDED_LABEL => {
                *dropped += 1;
                continue;
            }
            (Some(l), LabelPolicy::Train) => Some(l.parse::<DialogueAct>()?),
            (Some(l), LabelPolicy::Predict) => l.parse::<DialogueAct>().ok(),
        };
        utterances.push(Utterance {
            index: utterances.len() + 1,
            tokens: tokenize_utterance(&u.text),
            participant: u.participant,
            text: u.text,
            label,
        });
    }
    Ok(Conversation { id: raw.id, utterances })
}

/// Parses a single conversation line. `line_no` is only used in messages.
pub fn parse_conversation_line(line: &str, source: &str, line_no: usize, policy: LabelPolicy) -> Result<Conversation> {
    let mut dropped = 0;
    parse_line(source, line_no, line, policy, &mut dropped)
}

/// Parses conversation JSON lines from any reader. Blank lines are ignored.
pub fn parse_conversations<R: BufRead>(reader: R, source: &str, policy: LabelPolicy) -> Result<LoadedCorpus> {
    let mut corpus = LoadedCorpus::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(source, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let conv = parse_line(source, i + 1, &line, policy, &mut corpus.dropped)?;
        if conv.is_empty() {
            log::warn!("{source}:{}: conversation {:?} has no utterances; skipped", i + 1, conv.id);
            continue;
        }
        corpus.conversations.push(conv);
    }
    if corpus.dropped > 0 {
        log::warn!("{source}: dropped {} {DISCARDED_LABEL} utterances", corpus.dropped);
    }
    Ok(corpus)
}

/// Loads a JSON-lines conversation file for training or evaluation.
pub fn load_conversations(path: impl AsRef<Path>) -> Result<LoadedCorpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_conversations(std::io::BufReader::new(file), &path.display().to_string(), LabelPolicy::Train)
}

/// Writes conversations as JSON lines.
pub fn write_conversations(path: impl AsRef<Path>, conversations: &[Conversation]) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for c in conversations {
        writeln!(w, "{}", c.to_json()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Label histogram in [`DialogueAct::ALL`] order.
pub fn label_histogram(conversations: &[Conversation]) -> [usize; DialogueAct::COUNT] {
    let mut counts = [0; DialogueAct::COUNT];
    for u in conversations.iter().flat_map(|c| &c.utterances) {
        if let Some(l) = u.label {
            counts[l.index()] += 1;
        }
    }
    counts
}

/// Replaces each item by `unk` independently with probability `rate`.
pub fn word_dropout<T: Clone, R: Rng + ?Sized>(tokens: &[T], unk: &T, rate: f64, rng: &mut R) -> Result<Vec<T>> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::usage(format!("word dropout rate {rate} outside [0, 1]")));
    }
    Ok(tokens.iter().map(|t| if rate > 0.0 && rng.gen::<f64>() < rate { unk.clone() } else { t.clone() }).collect())
}

/// String-token form of [`word_dropout`] using the `<unk>` symbol.
pub fn apply_word_dropout<R: Rng + ?Sized>(tokens: &[String], rate: f64, rng: &mut R) -> Result<Vec<String>> {
    word_dropout(tokens, &super::embeddings::UNK.to_string(), rate, rng)
}

/// Train/dev/test partition by whole conversation.
#[derive(Debug, Clone)]
pub struct CorpusSplits {
    pub train: Vec<Conversation>,
    pub dev: Vec<Conversation>,
    pub test: Vec<Conversation>,
    pub seed: u64,
}

/// Seeded shuffle of conversations followed by prefix assignment.
pub fn split_corpus(corpus: Vec<Conversation>, seed: u64, counts: (usize, usize, usize)) -> Result<CorpusSplits> {
    let (n_train, n_dev, n_test) = counts;
    if n_train + n_dev + n_test != corpus.len() {
        return Err(Error::usage(format!(
            "split counts {n_train}+{n_dev}+{n_test} do not sum to corpus size {}",
            corpus.len()
        )));
    }
    let mut convs = corpus;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    convs.shuffle(&mut rng);
    let test = convs.split_off(n_train + n_dev);
    let dev = convs.split_off(n_train);
    Ok(CorpusSplits { train: convs, dev, test, seed })
}
