use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::autodiff::Tensor;
use crate::data::Vocab;
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};

pub const FORMAT_VERSION: &str = "1.0";
const SUPPORTED_MAJOR: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CheckpointMetadata {
    pub epoch: usize,
    pub dev_macro_f1: Option<f64>,
}

/// A model plus its training metadata, as stored on disk.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub model: Model,
    pub metadata: CheckpointMetadata,
}

impl Checkpoint {
    pub fn to_json(&self) -> Value {
        let params: Vec<Value> = self
            .model
            .params
            .iter()
            .map(|(_, name, t)| json!({ "name": name, "shape": t.shape(), "values": t.to_nested() }))
            .collect();
        json!({
            "format_version": FORMAT_VERSION,
            "config": self.model.config,
            "vocab": self.model.vocab.words(),
            "params": params,
            "metadata": self.metadata,
        })
    }

    pub fn from_json(value: &Value) -> Result<Checkpoint> {
        let version = value
            .get("format_version")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Checkpoint("missing format_version".into()))?;
        let major: u64 = version
            .split('.')
            .next()
            .and_then(|m| m.parse().ok())
            .ok_or_else(|| Error::Checkpoint(format!("malformed format_version {version:?}")))?;
        if major != SUPPORTED_MAJOR {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {version:?}; this build reads {SUPPORTED_MAJOR}.x"
            )));
        }
        let field = |name: &str| value.get(name).ok_or_else(|| Error::Checkpoint(format!("missing field {name:?}")));
        let config: ModelConfig = serde_json::from_value(field("config")?.clone())
            .map_err(|e| Error::Checkpoint(format!("bad config: {e}")))?;
        let words: Vec<String> = serde_json::from_value(field("vocab")?.clone())
            .map_err(|e| Error::Checkpoint(format!("bad vocab: {e}")))?;
        let metadata: CheckpointMetadata = serde_json::from_value(field("metadata")?.clone())
            .map_err(|e| Error::Checkpoint(format!("bad metadata: {e}")))?;
        let entries = field("params")?.as_array().ok_or_else(|| Error::Checkpoint("params must be an array".into()))?;
        let mut tensors = Vec::with_capacity(entries.len());
        for entry in entries {
            let name = entry
                .get("name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Checkpoint("parameter without a name".into()))?;
            let shape: Vec<usize> = entry
                .get("shape")
                .cloned()
                .map(serde_json::from_value)
                .transpose()
                .map_err(|e| Error::Checkpoint(format!("bad shape for {name:?}: {e}")))?
                .ok_or_else(|| Error::Checkpoint(format!("parameter {name:?} has no shape")))?;
            let values =
                entry.get("values").ok_or_else(|| Error::Checkpoint(format!("parameter {name:?} has no values")))?;
            tensors.push((name.to_string(), Tensor::from_nested(shape, values)?));
        }
        let vocab = Vocab::from_words(words);
        let model = Model::from_parts(config, vocab, tensors)?;
        Ok(Checkpoint { model, metadata })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, &self.to_json())?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let value: Value = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&value)
    }
}
