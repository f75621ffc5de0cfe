use std::fs;
use std::path::{Path, PathBuf};

use hhn_core::ingest::{load_manifest, read_feature_blob, BLOB_MAGIC};
use hhn_core::model::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
use hhn_core::training::MetricsReport;
use hhn_core::{
    evaluate, generate_dataset, load_graphs, train as fit, GraphDiagnostics, HhnError, HybridGraph, ModelState,
    Result, SelectionStrategy, SynthSpec, GRAPH_SCHEMA_VERSION,
};
use log::info;
use serde::Serialize;

use crate::config::RunConfig;
use crate::{EvalArgs, GraphArgs, GraphFlags, InspectArgs, ModelFlags, Sweep, SynthArgs, TrainArgs, TrainFlags};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
const DEFAULT_RUN_DIR: &str = "hhn-run";

fn io_err(path: &Path, source: std::io::Error) -> HhnError {
    HhnError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report serializes") + "\n"
}

fn apply_graph(cfg: &mut RunConfig, f: &GraphFlags) {
    let g = &mut cfg.model.graph;
    if let Some(v) = f.r_min {
        g.r_min = v;
    }
    if let Some(v) = f.alpha {
        g.alpha = v;
    }
    if let Some(v) = f.hyperedge_size {
        g.hyperedge_size = v;
    }
    if let Some(v) = f.hop {
        g.hop = v;
    }
    if let Some(v) = f.strategy {
        g.strategy = v;
    }
    if let Some(v) = f.semantic_topk {
        g.semantic_topk = Some(v);
    }
}

fn apply_model(cfg: &mut RunConfig, f: &ModelFlags) {
    if let Some(v) = f.layers {
        cfg.model.n_layers = v;
    }
    if let Some(v) = f.hidden_dim {
        cfg.model.hidden_dim = v;
    }
    if let Some(v) = f.head {
        cfg.model.head = v;
    }
}

fn apply_train(cfg: &mut RunConfig, f: &TrainFlags) {
    let t = &mut cfg.train;
    if let Some(v) = f.lr {
        t.lr = v;
    }
    if let Some(v) = f.iterations {
        t.iterations = v;
    }
    if let Some(v) = f.warmup {
        t.warmup = v;
    }
    if let Some(v) = f.batch_size {
        t.batch_size = v;
    }
}

/// A manifest path, or `dir/<default_name>` when given a directory.
fn manifest_path(data: Option<&PathBuf>, default_name: &str) -> Result<PathBuf> {
    let data = data.ok_or_else(|| HhnError::Validation("--data is required (flag or config file)".into()))?;
    if data.is_dir() {
        Ok(data.join(default_name))
    } else {
        Ok(data.clone())
    }
}

pub fn synth(a: SynthArgs) -> Result<()> {
    let base = RunConfig {
        synth: SynthSpec::preset(&a.preset)?,
        ..RunConfig::default()
    };
    let mut cfg = RunConfig::layered(base, a.config.as_deref())?;
    if let Some(seed) = a.seed {
        cfg.synth.seed = seed;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    cfg.synth.validate()?;
    let out = cfg
        .out
        .ok_or_else(|| HhnError::Validation("--out is required".into()))?;
    info!(
        "generating {} train + {} test samples ({:?}) into {}",
        cfg.synth.n_samples,
        cfg.synth.n_test,
        cfg.synth.mode,
        out.display()
    );
    let summary = generate_dataset(&cfg.synth, &out)?;
    print!("{}", to_json(&summary));
    Ok(())
}

#[derive(Serialize)]
struct GraphSummary {
    schema_version: u32,
    n_samples: usize,
    max_hyperedge_size: usize,
    degenerate_edges: usize,
    cross_edges: usize,
    samples: Vec<SampleDiagnostics>,
}

#[derive(Serialize)]
struct SampleDiagnostics {
    sample_id: String,
    json: PathBuf,
    dot: PathBuf,
    diagnostics: GraphDiagnostics,
}

pub fn build_graph(a: GraphArgs) -> Result<()> {
    let mut cfg = RunConfig::layered(RunConfig::default(), a.config.as_deref())?;
    apply_graph(&mut cfg, &a.graph);
    if a.data.is_some() {
        cfg.data = a.data;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    cfg.model.graph.validate()?;
    let manifest = manifest_path(cfg.data.as_ref(), "train.ndjson")?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("graphs"));
    let graphs = load_graphs(&manifest, &cfg.model.graph)?;
    let mut samples = Vec::with_capacity(graphs.len());
    for g in &graphs {
        let json = out.join(format!("{}.graph.json", g.sample_id));
        let dot = out.join(format!("{}.dot", g.sample_id));
        write_text(&json, &to_json(&g.export()))?;
        write_text(&dot, &g.to_dot())?;
        samples.push(SampleDiagnostics {
            sample_id: g.sample_id.clone(),
            json,
            dot,
            diagnostics: g.diagnostics(),
        });
    }
    let d = |f: fn(&GraphDiagnostics) -> usize| samples.iter().map(move |s| f(&s.diagnostics));
    let summary = GraphSummary {
        schema_version: GRAPH_SCHEMA_VERSION,
        n_samples: samples.len(),
        max_hyperedge_size: d(|g| g.sequence.max_edge_size.max(g.video.max_edge_size)).max().unwrap_or(0),
        degenerate_edges: d(|g| g.sequence.degenerate_edges + g.video.degenerate_edges).sum(),
        cross_edges: d(|g| g.cross_edges).sum(),
        samples,
    };
    info!("wrote {} graph exports to {}", summary.n_samples, out.display());
    write_text(&out.join("diagnostics.json"), &to_json(&summary))?;
    print!("{}", to_json(&summary));
    Ok(())
}

#[derive(Serialize)]
struct TrainReport<'a> {
    schema_version: u32,
    config: &'a RunConfig,
    validation: &'a MetricsReport,
    test: Option<MetricsReport>,
}

struct Datasets {
    train: Vec<HybridGraph>,
    test: Option<Vec<HybridGraph>>,
}

fn load_datasets(cfg: &RunConfig) -> Result<Datasets> {
    let train_manifest = manifest_path(cfg.data.as_ref(), "train.ndjson")?;
    let train = load_graphs(&train_manifest, &cfg.model.graph)?;
    let test = match cfg.data.as_ref().filter(|d| d.is_dir()).map(|d| d.join("test.ndjson")) {
        Some(p) if p.is_file() => {
            let g = load_graphs(&p, &cfg.model.graph)?;
            (!g.is_empty()).then_some(g)
        }
        _ => None,
    };
    Ok(Datasets { train, test })
}

/// Feature widths and class count come from the data.
fn fit_dims(cfg: &mut RunConfig, graphs: &[HybridGraph]) -> Result<()> {
    let first = graphs
        .first()
        .ok_or_else(|| HhnError::Validation("training manifest lists no samples".into()))?;
    cfg.model.seq_dim = first.seq_features.cols();
    cfg.model.video_dim = first.video_features.cols();
    cfg.model.n_classes = first.labels.len();
    Ok(())
}

fn run_once(cfg: &RunConfig, data: &Datasets, out: &Path) -> Result<(MetricsReport, Option<MetricsReport>)> {
    cfg.validate()?;
    let outcome = fit(&data.train, &cfg.model, &cfg.train)?;
    let test = match &data.test {
        Some(t) => Some(evaluate(t, &outcome.state, &cfg.model)?),
        None => None,
    };
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    write_checkpoint(&outcome.state, out.join("model.ckpt"))?;
    write_text(&out.join("model.json"), &to_json(&cfg.model))?;
    write_text(&out.join("loss.csv"), &outcome.report.loss_curve_csv())?;
    let report = TrainReport {
        schema_version: REPORT_SCHEMA_VERSION,
        config: &RunConfig {
            data: None,
            out: None,
            ..cfg.clone()
        },
        validation: &outcome.report,
        test: test.clone(),
    };
    write_text(&out.join("metrics.json"), &to_json(&report))?;
    Ok((outcome.report, test))
}

#[derive(Serialize)]
struct SweepRun {
    setting: String,
    validation_map: Option<f64>,
    test_map: Option<f64>,
    best_iteration: Option<usize>,
}

#[derive(Serialize)]
struct SweepReport {
    schema_version: u32,
    sweep: &'static str,
    runs: Vec<SweepRun>,
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut cfg = RunConfig::layered(RunConfig::default(), a.config.as_deref())?;
    apply_graph(&mut cfg, &a.graph);
    apply_model(&mut cfg, &a.model);
    apply_train(&mut cfg, &a.train);
    if let Some(seed) = a.seed {
        cfg.train.seed = seed;
    }
    if a.data.is_some() {
        cfg.data = a.data;
    }
    if a.out.is_some() {
        cfg.out = a.out;
    }
    cfg.validate()?;
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_RUN_DIR));

    let Some(sweep) = a.sweep else {
        let data = load_datasets(&cfg)?;
        fit_dims(&mut cfg, &data.train)?;
        run_once(&cfg, &data, &out)?;
        let text = fs::read_to_string(out.join("metrics.json")).map_err(|e| io_err(&out, e))?;
        print!("{text}");
        return Ok(());
    };

    let settings: Vec<(String, RunConfig)> = match sweep {
        Sweep::Strategy => [
            SelectionStrategy::MaxDiff,
            SelectionStrategy::MinDiff,
            SelectionStrategy::Random { seed: cfg.train.seed },
        ]
        .into_iter()
        .map(|s| {
            let mut c = cfg.clone();
            c.model.graph.strategy = s;
            (s.name().to_string(), c)
        })
        .collect(),
        Sweep::RMin => (4..=8)
            .map(|r| {
                let mut c = cfg.clone();
                c.model.graph.r_min = r;
                (format!("r-min-{r}"), c)
            })
            .collect(),
    };
    let mut runs = Vec::new();
    for (label, mut c) in settings {
        info!("sweep setting {label}");
        let data = load_datasets(&c)?;
        fit_dims(&mut c, &data.train)?;
        let (val, test) = run_once(&c, &data, &out.join(&label))?;
        runs.push(SweepRun {
            setting: label,
            validation_map: val.classes.map,
            test_map: test.and_then(|t| t.classes.map),
            best_iteration: val.best_iteration,
        });
    }
    let report = SweepReport {
        schema_version: REPORT_SCHEMA_VERSION,
        sweep: match sweep {
            Sweep::Strategy => "strategy",
            Sweep::RMin => "r-min",
        },
        runs,
    };
    let text = to_json(&report);
    write_text(&out.join("sweep.json"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let mut cfg = RunConfig::layered(RunConfig::default(), a.config.as_deref())?;
    if a.data.is_some() {
        cfg.data = a.data;
    }
    let tensors = read_checkpoint(&a.checkpoint)?;
    let sibling = a.checkpoint.with_file_name("model.json");
    if a.config.is_none() && sibling.is_file() {
        let text = fs::read_to_string(&sibling).map_err(|e| io_err(&sibling, e))?;
        cfg.model = serde_json::from_str(&text)
            .map_err(|e| HhnError::Validation(format!("{}: {e}", sibling.display())))?;
    }
    let state = ModelState::from_values(&cfg.model, tensors)?;
    let manifest = manifest_path(cfg.data.as_ref(), "test.ndjson")?;
    let graphs = load_graphs(&manifest, &cfg.model.graph)?;
    if graphs.is_empty() {
        return Err(HhnError::Validation(format!("{} lists no samples", manifest.display())));
    }
    let report = evaluate(&graphs, &state, &cfg.model)?;
    let text = to_json(&report);
    if let Some(out) = &a.out {
        write_text(out, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn describe_manifest(path: &Path) -> Result<String> {
    let samples = load_manifest(path)?;
    let mut s = format!("manifest {}\n  samples: {}\n", path.display(), samples.len());
    if let Some(first) = samples.first() {
        let n_classes = first.labels.len();
        let mut positives = vec![0usize; n_classes];
        for m in &samples {
            for (c, &l) in m.labels.iter().enumerate() {
                positives[c] += l as usize;
            }
        }
        let seg = |f: fn(&hhn_core::SampleManifest) -> usize| {
            let v: Vec<usize> = samples.iter().map(f).collect();
            (v.iter().min().copied().unwrap_or(0), v.iter().max().copied().unwrap_or(0))
        };
        let (smin, smax) = seg(|m| m.modalities.sequence.t_start.len());
        let (vmin, vmax) = seg(|m| m.modalities.video.t_start.len());
        s += &format!("  classes: {n_classes}, positives per class: {positives:?}\n");
        s += &format!("  sequence segments per sample: {smin}..={smax}\n");
        s += &format!("  video segments per sample: {vmin}..={vmax}\n");
    }
    Ok(s)
}

pub fn inspect(a: InspectArgs) -> Result<()> {
    let path = &a.path;
    if path.is_dir() {
        let mut found = false;
        for name in ["train.ndjson", "test.ndjson"] {
            let p = path.join(name);
            if p.is_file() {
                print!("{}", describe_manifest(&p)?);
                found = true;
            }
        }
        if !found {
            return Err(HhnError::Validation(format!(
                "{}: no train.ndjson or test.ndjson",
                path.display()
            )));
        }
        return Ok(());
    }
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    if bytes.starts_with(BLOB_MAGIC) {
        let m = read_feature_blob(path)?;
        let v = m.values();
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = v.iter().sum::<f64>() / v.len().max(1) as f64;
        println!("feature blob {}", path.display());
        println!("  shape: {} x {}", m.rows(), m.cols());
        println!("  min {min:.6}  max {max:.6}  mean {mean:.6}");
    } else if bytes.starts_with(CHECKPOINT_MAGIC) {
        let tensors = read_checkpoint(path)?;
        let total: usize = tensors.iter().map(|t| t.rows() * t.cols()).sum();
        println!("checkpoint {}", path.display());
        println!("  tensors: {}  scalars: {total}", tensors.len());
        for (i, t) in tensors.iter().enumerate() {
            println!("  [{i:>2}] {} x {}", t.rows(), t.cols());
        }
    } else {
        print!("{}", describe_manifest(path)?);
    }
    Ok(())
}
