use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HhnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModalityKind {
    Sequence,
    Video,
}

impl ModalityKind {
    pub const ALL: [ModalityKind; 2] = [ModalityKind::Sequence, ModalityKind::Video];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModalityKind::Sequence => "sequence",
            ModalityKind::Video => "video",
        }
    }
}

impl fmt::Display for ModalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Blob location plus per-row segment timing (milliseconds).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityEntry {
    pub blob: PathBuf,
    pub t_start: Vec<i64>,
    pub t_end: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modalities {
    pub sequence: ModalityEntry,
    pub video: ModalityEntry,
}

impl Modalities {
    pub fn get(&self, kind: ModalityKind) -> &ModalityEntry {
        match kind {
            ModalityKind::Sequence => &self.sequence,
            ModalityKind::Video => &self.video,
        }
    }
}

/// One line of a manifest file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleManifest {
    pub sample_id: String,
    pub labels: Vec<u8>,
    pub modalities: Modalities,
}

impl SampleManifest {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.sample_id.is_empty() {
            return Err("empty sample_id".into());
        }
        if let Some(bad) = self.labels.iter().find(|&&l| l > 1) {
            return Err(format!("label value {bad} is not 0 or 1"));
        }
        for kind in ModalityKind::ALL {
            let m = self.modalities.get(kind);
            if m.t_start.is_empty() {
                return Err(format!("modality {kind} has no segments"));
            }
            if m.t_start.len() != m.t_end.len() {
                return Err(format!(
                    "modality {kind}: {} start times but {} end times",
                    m.t_start.len(),
                    m.t_end.len()
                ));
            }
        }
        Ok(())
    }
}

/// Reads newline-delimited JSON manifests. Relative blob paths resolve
/// against the manifest's directory.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<SampleManifest>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HhnError::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut seen = HashSet::new();
    let mut out: Vec<SampleManifest> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut sample: SampleManifest =
            serde_json::from_str(line).map_err(|e| HhnError::Parse {
                path: path.to_path_buf(),
                line: line_no,
                reason: e.to_string(),
            })?;
        sample
            .validate()
            .map_err(|r| HhnError::Validation(format!("{} line {line_no}: {r}", path.display())))?;
        if let Some(first) = out.first() {
            if first.labels.len() != sample.labels.len() {
                return Err(HhnError::Validation(format!(
                    "{} line {line_no}: sample '{}' has {} labels, expected {}",
                    path.display(),
                    sample.sample_id,
                    sample.labels.len(),
                    first.labels.len()
                )));
            }
        }
        if !seen.insert(sample.sample_id.clone()) {
            return Err(HhnError::Validation(format!(
                "duplicate sample_id '{}' at line {line_no}",
                sample.sample_id
            )));
        }
        for entry in [&mut sample.modalities.sequence, &mut sample.modalities.video] {
            if entry.blob.is_relative() {
                entry.blob = base.join(&entry.blob);
            }
        }
        out.push(sample);
    }
    Ok(out)
}

pub fn write_manifest(samples: &[SampleManifest], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for s in samples {
        serde_json::to_writer(&mut buf, s).expect("manifest serialization is infallible");
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| HhnError::io(path, e))?;
    f.write_all(&buf).map_err(|e| HhnError::io(path, e))
}
