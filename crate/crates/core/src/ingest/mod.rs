//! Feature blobs, sample manifests and per-sample node assembly.

mod blob;
mod manifest;
mod sample;

pub use blob::{decode_blob, encode_blob, read_feature_blob, write_feature_blob, BLOB_HEADER_LEN, BLOB_MAGIC, BLOB_VERSION};
pub use manifest::{load_manifest, write_manifest, ModalityEntry, ModalityKind, Modalities, SampleManifest};
pub use sample::{assemble_sample, feature_matrix, segments_from_matrix, AssembledSample, SegmentNode};
