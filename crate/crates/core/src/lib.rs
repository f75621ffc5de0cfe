//! Temporal hybrid hypergraphs over two feature streams (a sequence stream
//! and a video stream) and a hypergraph-convolution + attention classifier
//! trained on them.
//!
//! Pipeline: [`ingest`] reads feature blobs and manifests, [`graph`] builds
//! per-sample hybrid graphs from [`entropy`], [`hypergraph`] and
//! [`crossmodal`], [`model`] runs the network and [`training`] fits it.
//! [`synth`] generates datasets with planted signals.

pub mod crossmodal;
pub mod entropy;
pub mod error;
pub mod graph;
pub mod hypergraph;
pub mod ingest;
pub mod kernel;
pub mod model;
pub mod synth;
pub mod training;

pub use crossmodal::{build_cross_graph, hawkes_weight, CrossEdge, CrossGraph, TemporalWeighting};
pub use entropy::{adaptive_window, entropy_profile, node_entropy, window_indices, EntropyProfile};
pub use error::{HhnError, Result};
pub use graph::{
    build_graphs, build_hybrid_graph, load_graphs, GraphConfig, GraphDiagnostics, GraphExport, HybridGraph,
    GRAPH_SCHEMA_VERSION,
};
pub use hypergraph::{
    build_intra_hypergraph, hyperedge_weight, propagation_operator, select_hyperedge, Hyperedge, Hypergraph,
    SelectionStrategy,
};
pub use ingest::{AssembledSample, ModalityKind, SampleManifest, SegmentNode};
pub use kernel::{Activation, DenseMatrix, ParamTensor};
pub use model::{HeadKind, HhnConfig, ModalityMode, ModelState};
pub use synth::{generate_dataset, generate_samples, SignalMode, Split, SynthSpec};
pub use training::{evaluate, train, MetricsReport, TrainConfig, TrainOutcome};
