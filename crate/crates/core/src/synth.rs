//! Synthetic two-modality datasets with planted class signals.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HhnError, Result};
use crate::ingest::{
    segments_from_matrix, write_feature_blob, write_manifest, AssembledSample, ModalityEntry, ModalityKind, Modalities,
    SampleManifest,
};
use crate::kernel::DenseMatrix;

pub const SEQ_HOP_MS: i64 = 196;
pub const SEQ_SEGMENT_MS: i64 = 960;
pub const VIDEO_SEGMENT_MS: i64 = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalMode {
    SeqOnly,
    VideoOnly,
    /// Class is `(a + b) mod C` with `a` planted in the sequence stream and
    /// `b` in the video stream.
    XorCrossmodal,
    /// Class pattern lives only in a few high-entropy sequence segments;
    /// the remaining segments are peaked noise.
    EntropyBurst,
}

impl FromStr for SignalMode {
    type Err = HhnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "seq_only" | "sequence_only" => Ok(SignalMode::SeqOnly),
            "video_only" => Ok(SignalMode::VideoOnly),
            "xor_crossmodal" | "xor" => Ok(SignalMode::XorCrossmodal),
            "entropy_burst" => Ok(SignalMode::EntropyBurst),
            other => Err(HhnError::Config(format!("unknown signal mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_test: usize,
    pub classes: usize,
    pub seq_nodes: usize,
    pub video_nodes: usize,
    pub seq_dim: usize,
    pub video_dim: usize,
    pub mode: SignalMode,
    pub noise_sigma: f64,
    /// Standard deviation of the class prototypes.
    pub signal_scale: f64,
    /// Share of sequence segments carrying the pattern (entropy_burst).
    pub burst_fraction: f64,
    /// Height of the peak, at one fixed dimension, in non-burst segments
    /// (entropy_burst).
    pub spike_height: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            n_test: 300,
            classes: 2,
            seq_nodes: 101,
            video_nodes: 40,
            seq_dim: 128,
            video_dim: 1024,
            mode: SignalMode::XorCrossmodal,
            noise_sigma: 1.0,
            signal_scale: 1.0,
            burst_fraction: 0.1,
            spike_height: 8.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Named starting points; `xor`, `seq-only`, `video-only`, `entropy-burst`.
    pub fn preset(name: &str) -> Result<Self> {
        let mode = SignalMode::from_str(name)
            .map_err(|_| HhnError::Config(format!("unknown preset '{name}'")))?;
        let signal_scale = match mode {
            SignalMode::EntropyBurst => 0.35,
            _ => 1.0,
        };
        Ok(Self {
            mode,
            signal_scale,
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("classes", self.classes),
            ("seq_nodes", self.seq_nodes),
            ("video_nodes", self.video_nodes),
            ("seq_dim", self.seq_dim),
            ("video_dim", self.video_dim),
        ] {
            if v < 1 {
                return Err(HhnError::Config(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [
            ("noise_sigma", self.noise_sigma),
            ("signal_scale", self.signal_scale),
            ("spike_height", self.spike_height),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(HhnError::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.burst_fraction) {
            return Err(HhnError::Config("burst_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Sequence timing: 960 ms windows every 196 ms.
pub fn sequence_times(n: usize) -> (Vec<i64>, Vec<i64>) {
    let start: Vec<i64> = (0..n as i64).map(|i| i * SEQ_HOP_MS).collect();
    let end = start.iter().map(|s| s + SEQ_SEGMENT_MS).collect();
    (start, end)
}

/// Video timing: back-to-back 250 ms segments.
pub fn video_times(n: usize) -> (Vec<i64>, Vec<i64>) {
    let start: Vec<i64> = (0..n as i64).map(|i| i * VIDEO_SEGMENT_MS).collect();
    let end = start.iter().map(|s| s + VIDEO_SEGMENT_MS).collect();
    (start, end)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSample {
    pub sample_id: String,
    pub seq: DenseMatrix,
    pub video: DenseMatrix,
    pub labels: Vec<u8>,
    /// Sequence segments holding the pattern (entropy_burst only).
    pub burst: Vec<bool>,
}

impl SynthSample {
    pub fn assemble(&self) -> Result<AssembledSample> {
        let (ss, se) = sequence_times(self.seq.rows());
        let (vs, ve) = video_times(self.video.rows());
        Ok(AssembledSample {
            sample_id: self.sample_id.clone(),
            sequence: segments_from_matrix(ModalityKind::Sequence, &self.seq, &ss, &se)?,
            video: segments_from_matrix(ModalityKind::Video, &self.video, &vs, &ve)?,
            labels: self.labels.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

struct Prototypes {
    seq: Vec<Vec<f64>>,
    video: Vec<Vec<f64>>,
    background: Vec<Vec<f64>>,
    peak: usize,
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn prototypes(spec: &SynthSpec) -> Prototypes {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    Prototypes {
        seq: (0..spec.classes).map(|_| gaussian(&mut rng, spec.seq_dim, spec.signal_scale)).collect(),
        video: (0..spec.classes).map(|_| gaussian(&mut rng, spec.video_dim, spec.signal_scale)).collect(),
        background: (0..spec.classes).map(|_| gaussian(&mut rng, spec.seq_dim, spec.signal_scale)).collect(),
        peak: rng.random_range(0..spec.seq_dim),
    }
}

fn stream(rng: &mut ChaCha8Rng, rows: usize, proto: Option<&[f64]>, sigma: f64, dim: usize) -> Vec<f64> {
    let mut out = gaussian(rng, rows * dim, sigma);
    if let Some(p) = proto {
        for row in out.chunks_mut(dim) {
            row.iter_mut().zip(p).for_each(|(v, m)| *v += m);
        }
    }
    out
}

fn to_f32_matrix(rows: usize, cols: usize, values: Vec<f64>) -> DenseMatrix {
    let values = values.into_iter().map(|v| v as f32 as f64).collect();
    DenseMatrix::from_vec(rows, cols, values).expect("generated features are finite")
}

fn generate_one(spec: &SynthSpec, protos: &Prototypes, split: Split, k: usize) -> SynthSample {
    let index = match split {
        Split::Train => k,
        Split::Test => spec.n_samples + k,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ index as u64);
    let c = spec.classes;
    let (ns, nv, ds, dv) = (spec.seq_nodes, spec.video_nodes, spec.seq_dim, spec.video_dim);
    let sigma = spec.noise_sigma;
    let mut burst = Vec::new();
    let (class, seq, video) = match spec.mode {
        SignalMode::SeqOnly => {
            let y = rng.random_range(0..c);
            let s = stream(&mut rng, ns, Some(&protos.seq[y]), sigma, ds);
            let v = stream(&mut rng, nv, None, sigma, dv);
            (y, s, v)
        }
        SignalMode::VideoOnly => {
            let y = rng.random_range(0..c);
            let s = stream(&mut rng, ns, None, sigma, ds);
            let v = stream(&mut rng, nv, Some(&protos.video[y]), sigma, dv);
            (y, s, v)
        }
        SignalMode::XorCrossmodal => {
            let a = rng.random_range(0..c);
            let b = rng.random_range(0..c);
            let s = stream(&mut rng, ns, Some(&protos.seq[a]), sigma, ds);
            let v = stream(&mut rng, nv, Some(&protos.video[b]), sigma, dv);
            ((a + b) % c, s, v)
        }
        SignalMode::EntropyBurst => {
            let a = rng.random_range(0..c);
            let b = rng.random_range(0..c);
            let n_burst = ((ns as f64 * spec.burst_fraction).round() as usize).min(ns);
            burst = vec![false; ns];
            for i in rand::seq::index::sample(&mut rng, ns, n_burst) {
                burst[i] = true;
            }
            let mut s = Vec::with_capacity(ns * ds);
            for &is_burst in &burst {
                if is_burst {
                    s.extend(stream(&mut rng, 1, Some(&protos.seq[a]), sigma, ds));
                } else {
                    let mut row = stream(&mut rng, 1, Some(&protos.background[b]), sigma, ds);
                    row[protos.peak] += spec.spike_height;
                    s.extend(row);
                }
            }
            let v = stream(&mut rng, nv, None, sigma, dv);
            ((a + b) % c, s, v)
        }
    };
    let mut labels = vec![0u8; c];
    labels[class] = 1;
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "test",
    };
    SynthSample {
        sample_id: format!("{prefix}-{k:06}"),
        seq: to_f32_matrix(ns, ds, seq),
        video: to_f32_matrix(nv, dv, video),
        labels,
        burst,
    }
}

/// Samples of one split, in memory. Values are rounded through `f32`, so
/// they equal what a round trip through blob files yields.
pub fn generate_samples(spec: &SynthSpec, split: Split) -> Result<Vec<SynthSample>> {
    spec.validate()?;
    let protos = prototypes(spec);
    let n = match split {
        Split::Train => spec.n_samples,
        Split::Test => spec.n_test,
    };
    Ok((0..n)
        .into_par_iter()
        .map(|k| generate_one(spec, &protos, split, k))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSummary {
    pub train_manifest: PathBuf,
    pub test_manifest: PathBuf,
    pub n_train: usize,
    pub n_test: usize,
}

fn write_split(spec: &SynthSpec, split: Split, out: &Path, name: &str) -> Result<(PathBuf, usize)> {
    let samples = generate_samples(spec, split)?;
    let entries: Vec<SampleManifest> = samples
        .par_iter()
        .map(|s| {
            let rel = |kind: &str| PathBuf::from("blobs").join(format!("{}.{kind}.hhnf", s.sample_id));
            write_feature_blob(&s.seq, out.join(rel("seq")))?;
            write_feature_blob(&s.video, out.join(rel("video")))?;
            let (ss, se) = sequence_times(s.seq.rows());
            let (vs, ve) = video_times(s.video.rows());
            Ok(SampleManifest {
                sample_id: s.sample_id.clone(),
                labels: s.labels.clone(),
                modalities: Modalities {
                    sequence: ModalityEntry {
                        blob: rel("seq"),
                        t_start: ss,
                        t_end: se,
                    },
                    video: ModalityEntry {
                        blob: rel("video"),
                        t_start: vs,
                        t_end: ve,
                    },
                },
            })
        })
        .collect::<Result<_>>()?;
    let path = out.join(name);
    write_manifest(&entries, &path)?;
    Ok((path, entries.len()))
}

/// Writes `train.ndjson`, `test.ndjson`, `synth.json` and `blobs/` under `out`.
pub fn generate_dataset(spec: &SynthSpec, out: impl AsRef<Path>) -> Result<SynthSummary> {
    spec.validate()?;
    let out = out.as_ref();
    let blobs = out.join("blobs");
    fs::create_dir_all(&blobs).map_err(|e| HhnError::io(&blobs, e))?;
    let (train_manifest, n_train) = write_split(spec, Split::Train, out, "train.ndjson")?;
    let (test_manifest, n_test) = write_split(spec, Split::Test, out, "test.ndjson")?;
    let meta = out.join("synth.json");
    let text = serde_json::to_string_pretty(spec).expect("spec serializes");
    fs::write(&meta, text).map_err(|e| HhnError::io(&meta, e))?;
    Ok(SynthSummary {
        train_manifest,
        test_manifest,
        n_train,
        n_test,
    })
}
