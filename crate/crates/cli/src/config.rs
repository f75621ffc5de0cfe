//! Run configuration: defaults, then an optional JSON file, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use hhn_core::{HhnConfig, HhnError, Result, SynthSpec, TrainConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: HhnConfig,
    pub train: TrainConfig,
    pub synth: SynthSpec,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

impl RunConfig {
    /// `base` overlaid with the keys present in the JSON file at `path`.
    pub fn layered(base: RunConfig, path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(base);
        };
        let text = fs::read_to_string(path).map_err(|e| HhnError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file: Value = serde_json::from_str(&text).map_err(|e| HhnError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            reason: e.to_string(),
        })?;
        if !file.is_object() {
            return Err(HhnError::Validation(format!(
                "{}: config must be a JSON object",
                path.display()
            )));
        }
        let mut merged = serde_json::to_value(&base).expect("config serializes");
        merge(&mut merged, file);
        serde_json::from_value(merged).map_err(|e| HhnError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        self.synth.validate()
    }
}
