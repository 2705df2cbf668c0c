use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::Conversation;
use crate::autodiff::Tensor;
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
/// Row 0 of every vocabulary.
pub const UNK_ROW: usize = 0;

/// Word to embedding-row map. Row 0 is always `<unk>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let mut v = Vocab { words: vec![UNK.to_string()], index: HashMap::from([(UNK.to_string(), UNK_ROW)]) };
        for w in words {
            if !v.index.contains_key(&w) {
                v.index.insert(w.clone(), v.words.len());
                v.words.push(w);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Exact form, then lowercased form, then `<unk>`.
    pub fn lookup(&self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let lower = token.to_lowercase();
        self.index.get(&lower).copied().unwrap_or(UNK_ROW)
    }
}

/// Vocabulary plus its `[V × d]` embedding matrix.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub vocab: Vocab,
    pub matrix: Tensor,
}

impl EmbeddingTable {
    pub fn dim(&self) -> usize {
        self.matrix.shape()[1]
    }

    pub fn row(&self, token: &str) -> &[f64] {
        self.matrix.row(self.vocab.lookup(token))
    }
}

/// Every token appearing in the given conversations, sorted.
pub fn corpus_words<'a, I: IntoIterator<Item = &'a Conversation>>(convs: I) -> BTreeSet<String> {
    convs.into_iter().flat_map(|c| &c.utterances).flat_map(|u| u.tokens.iter().cloned()).collect()
}

fn unk_row(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-0.01..0.01)).collect()
}

/// Outcome of reading an embedding file.
#[derive(Debug, Clone)]
pub struct EmbeddingLoad {
    pub table: EmbeddingTable,
    /// Words seen more than once in the file, with the ignored line numbers.
    pub duplicates: Vec<(String, usize)>,
}

/// Reads `word v1 ... vd` lines, keeping rows for words used by the corpus
/// (exactly or in lowercased form). The first occurrence of a word wins.
pub fn parse_embeddings<R: BufRead>(
    reader: R,
    source: &str,
    vocab_words: &BTreeSet<String>,
    seed: u64,
) -> Result<EmbeddingLoad> {
    let wanted: HashSet<String> = vocab_words.iter().flat_map(|w| [w.clone(), w.to_lowercase()]).collect();
    let mut dim: Option<usize> = None;
    let mut seen: HashSet<String> = HashSet::new();
    let mut duplicates = Vec::new();
    let mut words = Vec::new();
    let mut rows: Vec<f64> = Vec::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values: Vec<f64> = parts.map(|p| p.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| {
            Error::Format { path: source.to_string(), line: line_no, message: format!("bad number: {e}") }
        })?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format {
                path: source.to_string(),
                line: line_no,
                message: format!("non-finite value in the vector for {word:?}"),
            });
        }
        match dim {
            None if values.is_empty() => {
                return Err(Error::Format {
                    path: source.to_string(),
                    line: line_no,
                    message: "embedding line has no values".into(),
                })
            }
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Format {
                    path: source.to_string(),
                    line: line_no,
                    message: format!("expected {d} values, found {}", values.len()),
                })
            }
            Some(_) => {}
        }
        if !seen.insert(word.to_string()) {
            log::warn!("{source}:{line_no}: duplicate embedding for {word:?}; keeping the first");
            duplicates.push((word.to_string(), line_no));
            continue;
        }
        if word == UNK || !wanted.contains(word) {
            continue;
        }
        words.push(word.to_string());
        rows.extend(values);
    }

    let dim = dim.ok_or_else(|| Error::Format {
        path: source.to_string(),
        line: 0,
        message: "embedding file is empty".into(),
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = unk_row(&mut rng, dim);
    values.extend(rows);
    let vocab = Vocab::from_words(words);
    let matrix = Tensor::matrix(vocab.len(), dim, values)?;
    Ok(EmbeddingLoad { table: EmbeddingTable { vocab, matrix }, duplicates })
}

pub fn load_embeddings(path: impl AsRef<Path>, vocab_words: &BTreeSet<String>, seed: u64) -> Result<EmbeddingLoad> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_embeddings(std::io::BufReader::new(file), &path.display().to_string(), vocab_words, seed)
}

/// Randomly initialised table for corpora without pretrained vectors:
/// word rows Uniform(-0.1, 0.1), `<unk>` Uniform(-0.01, 0.01).
pub fn random_embeddings(words: &BTreeSet<String>, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocab::from_words(words.iter().filter(|w| *w != UNK).cloned());
    let mut values = unk_row(&mut rng, dim);
    for _ in 1..vocab.len() {
        values.extend((0..dim).map(|_| rng.gen_range(-0.1..0.1)));
    }
    let matrix = Tensor::matrix(vocab.len(), dim, values).expect("sizes agree");
    EmbeddingTable { vocab, matrix }
}
