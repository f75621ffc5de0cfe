use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{HhnError, Result};
use crate::graph::GraphConfig;
use crate::kernel::Activation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeadKind {
    MultilabelSigmoid,
    #[default]
    SinglelabelSoftmax,
}

impl FromStr for HeadKind {
    type Err = HhnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" | "multilabel-sigmoid" | "multilabel_sigmoid" => Ok(HeadKind::MultilabelSigmoid),
            "softmax" | "singlelabel-softmax" | "singlelabel_softmax" => Ok(HeadKind::SinglelabelSoftmax),
            other => Err(HhnError::Config(format!("unknown head '{other}'"))),
        }
    }
}

/// Which modality streams take part in the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModalityMode {
    #[default]
    Both,
    SequenceOnly,
    VideoOnly,
}

impl FromStr for ModalityMode {
    type Err = HhnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" | "combined" => Ok(ModalityMode::Both),
            "sequence" | "sequence-only" | "seq" => Ok(ModalityMode::SequenceOnly),
            "video" | "video-only" => Ok(ModalityMode::VideoOnly),
            other => Err(HhnError::Config(format!("unknown modality mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HhnConfig {
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub n_classes: usize,
    pub seq_dim: usize,
    pub video_dim: usize,
    pub head: HeadKind,
    pub modality: ModalityMode,
    /// `false` removes every cross-modal edge (the sequence stream then
    /// concatenates zeros where attention messages would go).
    pub cross_modal: bool,
    pub activation: Activation,
    pub graph: GraphConfig,
}

impl Default for HhnConfig {
    fn default() -> Self {
        Self {
            n_layers: 2,
            hidden_dim: 64,
            n_classes: 2,
            seq_dim: 128,
            video_dim: 1024,
            head: HeadKind::default(),
            modality: ModalityMode::Both,
            cross_modal: true,
            activation: Activation::Elu,
            graph: GraphConfig::default(),
        }
    }
}

impl HhnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_layers < 1 {
            return Err(HhnError::Config("n_layers must be >= 1".into()));
        }
        for (name, v) in [
            ("hidden_dim", self.hidden_dim),
            ("n_classes", self.n_classes),
            ("seq_dim", self.seq_dim),
            ("video_dim", self.video_dim),
        ] {
            if v < 1 {
                return Err(HhnError::Config(format!("{name} must be >= 1")));
            }
        }
        self.activation.validate()?;
        self.graph.validate()
    }

    pub(crate) fn uses_sequence(&self) -> bool {
        self.modality != ModalityMode::VideoOnly
    }

    pub(crate) fn uses_video(&self) -> bool {
        self.modality != ModalityMode::SequenceOnly
    }

    pub(crate) fn uses_attention(&self) -> bool {
        self.cross_modal && self.modality == ModalityMode::Both
    }
}
