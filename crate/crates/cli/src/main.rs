mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hhn_core::{HeadKind, HhnError, SelectionStrategy};

#[derive(Parser, Debug)]
#[command(name = "hhn", version, about = "Temporal hybrid hypergraph network: data, graphs, training, evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset (manifests + feature blobs)
    Synth(SynthArgs),
    /// Build per-sample graphs and write JSON/DOT exports with diagnostics
    BuildGraph(GraphArgs),
    /// Train a model; writes a checkpoint and a metrics report
    Train(TrainArgs),
    /// Evaluate a checkpoint on a manifest
    Eval(EvalArgs),
    /// Summarize a feature blob, manifest, checkpoint or dataset directory
    Inspect(InspectArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct GraphFlags {
    #[arg(long)]
    pub r_min: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub hyperedge_size: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    /// max-diff, min-diff, random or random:<seed>
    #[arg(long)]
    pub strategy: Option<SelectionStrategy>,
    #[arg(long)]
    pub semantic_topk: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelFlags {
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    /// softmax or sigmoid
    #[arg(long)]
    pub head: Option<HeadKind>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TrainFlags {
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// xor, seq-only, video-only or entropy-burst
    #[arg(long, default_value = "xor")]
    pub preset: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Manifest file or dataset directory
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphFlags,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    Strategy,
    RMin,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Manifest file or dataset directory (uses train.ndjson, and test.ndjson if present)
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train once per construction strategy or per r_min in 4..=8
    #[arg(long, value_enum)]
    pub sweep: Option<Sweep>,
    #[command(flatten)]
    pub graph: GraphFlags,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub train: TrainFlags,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Manifest file or dataset directory (uses test.ndjson)
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Write the report here as well as to standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct InspectArgs {
    pub path: PathBuf,
}

fn init_threads() -> Result<(), HhnError> {
    let Ok(v) = std::env::var("HHN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| HhnError::Config(format!("HHN_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| HhnError::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = init_threads().and_then(|()| match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::BuildGraph(a) => commands::build_graph(a),
        Command::Train(a) => commands::train(a),
        Command::Eval(a) => commands::eval(a),
        Command::Inspect(a) => commands::inspect(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
