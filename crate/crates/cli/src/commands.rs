//! Command implementations. Each one reads a resolved [`RunConfig`] and
//! writes machine-readable files under `out`; nothing written carries a
//! timestamp, so reruns with the same config produce the same bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use taga::alignment::{train, TofgStore};
use taga::bench::{bench_corpus, sample_roots, BenchReport};
use taga::checkpoint::Checkpoint;
use taga::dataset::{load_graph_files, write_dataset, GraphStats};
use taga::document::{flat_edge_listing, layout, render};
use taga::embed::{provider_from_descriptor, ProviderKind, TextEmbedder};
use taga::inference::{
    evaluate, few_shot_split, mean_std, node_embeddings, zero_shot, EmbeddingMode, FewShotAdapter, FewShotConfig,
    LabelEmbeddings, Prediction,
};
use taga::toy::{complete_tree, planted_partition, ToyConfig};
use taga::walks::walk_corpus;
use taga::{Execution, NodeId, TextAttributedGraph};

use crate::config::RunConfig;

pub fn execution(cfg: &RunConfig) -> Execution {
    Execution::from_threads(cfg.threads)
}

pub fn load_graph(cfg: &RunConfig) -> Result<(TextAttributedGraph, GraphStats)> {
    let d = &cfg.data;
    let loaded = load_graph_files(&d.nodes, &d.edges, d.labels.as_deref())
        .with_context(|| format!("loading {} and {}", d.nodes.display(), d.edges.display()))?;
    Ok((loaded.graph, loaded.stats))
}

/// Remote providers cache under `out` unless the config names a file.
pub fn provider(cfg: &RunConfig) -> Result<Box<dyn TextEmbedder>> {
    let mut options = cfg.remote.clone();
    if cfg.provider.kind == ProviderKind::Remote && options.cache_path.is_none() {
        fs::create_dir_all(&cfg.out)?;
        options.cache_path = Some(cfg.out.join("embed_cache.bin"));
    }
    Ok(provider_from_descriptor(&cfg.provider, options)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_lines<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in records {
        serde_json::to_writer(&mut w, &r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Result<GraphStats> {
    let (_, stats) = load_graph(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    write_json(&cfg.out.join("stats.json"), &stats)?;
    Ok(stats)
}

/// Trains and writes `model.ckpt`, `train_log.jsonl` and the resolved
/// `config.toml`.
pub fn pretrain(cfg: &RunConfig) -> Result<PathBuf> {
    if cfg.eval.mode == crate::config::Mode::TofgK {
        bail!("tofg-k uses text views only and has nothing to train");
    }
    let (graph, _) = load_graph(cfg)?;
    let provider = provider(cfg)?;
    let store = TofgStore::new(&graph, provider.as_ref(), cfg.view);
    let outcome = train(&store, &cfg.train, execution(cfg))?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("model.ckpt");
    outcome.checkpoint.save(&path)?;
    write_lines(&cfg.out.join("train_log.jsonl"), &outcome.log)?;
    fs::write(cfg.out.join("config.toml"), cfg.to_toml()?)?;
    if let (Some(first), Some(last)) = (outcome.log.first(), outcome.log.last()) {
        log::info!("loss {:.4} at step {} -> {:.4} at step {}", first.total, first.step, last.total, last.step);
    }
    Ok(path)
}

fn load_checkpoint(cfg: &RunConfig, mode: EmbeddingMode) -> Result<Option<Checkpoint>> {
    let path = cfg.checkpoint_path();
    match mode {
        EmbeddingMode::TofgK(_) => Ok(None),
        EmbeddingMode::Taga | EmbeddingMode::GloGoft => {
            Checkpoint::load(&path).map(Some).with_context(|| format!("loading checkpoint {}", path.display()))
        }
    }
}

/// Graph-view modes take their view settings from the checkpoint so
/// evaluation sees the same text views training did.
fn view_for(cfg: &RunConfig, checkpoint: Option<&Checkpoint>) -> taga::alignment::ViewConfig {
    checkpoint.map_or(cfg.view, |c| c.view)
}

/// Writes one `{node, embedding}` line per node to `embeddings.jsonl`.
pub fn embed(cfg: &RunConfig) -> Result<PathBuf> {
    let (graph, _) = load_graph(cfg)?;
    let provider = provider(cfg)?;
    let mode = cfg.embedding_mode();
    let checkpoint = load_checkpoint(cfg, mode)?;
    let store = TofgStore::new(&graph, provider.as_ref(), view_for(cfg, checkpoint.as_ref()));
    let nodes: Vec<NodeId> = (0..graph.num_nodes()).collect();
    let vectors = node_embeddings(&store, checkpoint.as_ref(), &nodes, mode, execution(cfg))?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("embeddings.jsonl");
    write_lines(&path, nodes.iter().zip(&vectors).map(|(v, e)| json!({ "node": v, "embedding": &e[..] })))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRecord {
    pub mode: String,
    pub shots: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub correct: usize,
    pub support: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRecord {
    pub mode: String,
    pub shots: usize,
    pub runs: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalOutcome {
    pub runs: Vec<MetricRecord>,
    pub summaries: Vec<SummaryRecord>,
}

fn mode_name(cfg: &RunConfig) -> String {
    match cfg.embedding_mode() {
        EmbeddingMode::TofgK(k) => format!("tofg_{k}"),
        _ => serde_json::to_value(cfg.eval.mode).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
    }
}

/// Zero-shot runs once; every positive shot count runs `eval.seeds` times
/// with seeds `seed, seed + 1, ...`. Files are prefixed with `prefix`.
fn run_eval(cfg: &RunConfig, prefix: &str) -> Result<EvalOutcome> {
    let (graph, _) = load_graph(cfg)?;
    let labels = graph.label_texts().ok_or_else(|| anyhow!("dataset has no label vocabulary"))?.to_vec();
    let provider = provider(cfg)?;
    let mode = cfg.embedding_mode();
    let checkpoint = load_checkpoint(cfg, mode)?;
    let store = TofgStore::new(&graph, provider.as_ref(), view_for(cfg, checkpoint.as_ref()));
    let exec = execution(cfg);
    let label_vecs = LabelEmbeddings::new(provider.as_ref(), &labels, cfg.eval.label_template.as_deref())?;

    let labeled: Vec<NodeId> = (0..graph.num_nodes()).filter(|&v| graph.label(v).is_some()).collect();
    let vectors = node_embeddings(&store, checkpoint.as_ref(), &labeled, mode, exec)?;
    let vector_of = |v: NodeId| &vectors[labeled.binary_search(&v).expect("split nodes are labeled")];

    let name = mode_name(cfg);
    let mut outcome = EvalOutcome::default();
    let mut predictions = Vec::new();
    for &shots in &cfg.eval.shots {
        let seeds: Vec<u64> =
            if shots == 0 { vec![cfg.seed] } else { (0..cfg.eval.seeds as u64).map(|i| cfg.seed + i).collect() };
        let mut accuracies = Vec::new();
        for seed in seeds {
            let split = few_shot_split(&graph, shots, seed)?;
            let test_x: Vec<_> = split.test.iter().map(|&v| vector_of(v).clone()).collect();
            let preds: Vec<Prediction> = if shots == 0 {
                zero_shot(&split.test, &test_x, &label_vecs, exec)?
            } else {
                let support_x: Vec<_> = split.support.iter().map(|&v| vector_of(v).clone()).collect();
                let targets: Vec<usize> = split.support.iter().map(|&v| graph.label(v).expect("labeled")).collect();
                let fs = FewShotConfig { epochs: cfg.eval.epochs, learning_rate: cfg.eval.learning_rate, seed };
                FewShotAdapter::fit(&support_x, &targets, &label_vecs, fs)?.predict(
                    &split.test,
                    &test_x,
                    &label_vecs,
                    exec,
                )?
            };
            let acc = evaluate(&preds, &graph, &split.test)?;
            log::info!("{name} shots={shots} seed={seed} accuracy={:.4}", acc.accuracy);
            accuracies.push(acc.accuracy);
            predictions.extend(preds.into_iter().map(|p| {
                json!({ "shots": shots, "seed": seed, "node": p.node, "predicted": labels[p.predicted], "probabilities": p.probabilities })
            }));
            outcome.runs.push(MetricRecord {
                mode: name.clone(),
                shots,
                seed,
                accuracy: acc.accuracy,
                correct: acc.correct,
                support: split.support.len(),
                validation: split.validation.len(),
                test: acc.total,
            });
        }
        let (mean, std) = mean_std(&accuracies);
        outcome.summaries.push(SummaryRecord { mode: name.clone(), shots, runs: accuracies.len(), mean, std });
    }

    fs::create_dir_all(&cfg.out)?;
    let lines = outcome.runs.iter().map(|r| serde_json::to_value(r).expect("metrics serialize")).chain(
        outcome.summaries.iter().map(|s| {
            let mut v = serde_json::to_value(s).expect("metrics serialize");
            v["summary"] = json!(true);
            v
        }),
    );
    write_lines(&cfg.out.join(format!("{prefix}metrics.jsonl")), lines)?;
    write_lines(&cfg.out.join(format!("{prefix}predictions.jsonl")), predictions)?;
    Ok(outcome)
}

/// Writes `metrics.jsonl` and `predictions.jsonl`.
pub fn eval(cfg: &RunConfig) -> Result<EvalOutcome> {
    run_eval(cfg, "")
}

/// Evaluates a checkpoint trained elsewhere on this config's dataset, with
/// no further training; writes `transfer_metrics.jsonl` and
/// `transfer_predictions.jsonl`.
pub fn transfer_eval(cfg: &RunConfig) -> Result<EvalOutcome> {
    if cfg.eval.checkpoint.is_none() && !matches!(cfg.embedding_mode(), EmbeddingMode::TofgK(_)) {
        bail!("transfer-eval needs --checkpoint pointing at a model trained on another graph");
    }
    run_eval(cfg, "transfer_")
}

/// Complete tree used instead of the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeSpec {
    pub branching: usize,
    pub depth: usize,
    pub words: usize,
}

pub fn bench(cfg: &RunConfig, tree: Option<TreeSpec>) -> Result<BenchReport> {
    let graph = match tree {
        Some(t) => complete_tree(t.branching, t.depth, t.words),
        None => load_graph(cfg)?.0,
    };
    cfg.view.walk.validate().map_err(|e| anyhow!(e))?;
    let roots = match tree {
        Some(_) => vec![0],
        None => sample_roots(&graph, cfg.bench.roots, cfg.seed),
    };
    let report =
        bench_corpus(&graph, &roots, cfg.bench.k_max, &cfg.view.walk, Some(cfg.provider.dimension), execution(cfg))?;
    fs::create_dir_all(&cfg.out)?;
    write_json(&cfg.out.join("bench.json"), &report)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DocStyle {
    /// The hierarchical document.
    #[default]
    Full,
    /// One line per node and per edge.
    Flat,
    /// The walk sub-documents, separated by blank lines.
    Walks,
}

pub fn render_doc(cfg: &RunConfig, node: NodeId, hops: usize, style: DocStyle) -> Result<String> {
    let (graph, _) = load_graph(cfg)?;
    let ego = graph.ego_graph(node, hops)?;
    Ok(match style {
        DocStyle::Full => render(&layout(&ego, &graph)).content,
        DocStyle::Flat => flat_edge_listing(&ego, &graph).content,
        DocStyle::Walks => {
            let walk = taga::walks::WalkConfig { max_length: Some(cfg.view.walk.length_for(hops)), ..cfg.view.walk };
            walk_corpus(&ego, &layout(&ego, &graph), &walk, Execution::Sequential)
                .into_iter()
                .map(|d| d.content)
                .collect::<Vec<_>>()
                .join("\n")
        }
    })
}

pub fn gen_toy(dir: &Path, toy: &ToyConfig) -> Result<()> {
    write_dataset(&planted_partition(toy), dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Mode;

    fn toy_config(dir: &Path) -> RunConfig {
        let data = dir.join("data");
        gen_toy(&data, &ToyConfig { nodes: 24, ..Default::default() }).unwrap();
        let mut cfg = RunConfig { out: dir.join("out"), threads: 1, ..Default::default() };
        cfg.data.nodes = data.join("nodes.jsonl");
        cfg.data.edges = data.join("edges.txt");
        cfg.data.labels = Some(data.join("labels.txt"));
        cfg.provider.dimension = 32;
        cfg.train.steps = 6;
        cfg.train.batch_size = 4;
        cfg.eval.shots = vec![0, 2];
        cfg.eval.seeds = 3;
        cfg.eval.epochs = 5;
        cfg.resolve().unwrap();
        cfg
    }

    #[test]
    fn pipeline_writes_every_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = toy_config(dir.path());
        assert_eq!(ingest(&cfg).unwrap().nodes, 24);
        pretrain(&cfg).unwrap();
        let log = fs::read_to_string(cfg.out.join("train_log.jsonl")).unwrap();
        assert_eq!(log.lines().count(), 6);
        embed(&cfg).unwrap();
        assert_eq!(fs::read_to_string(cfg.out.join("embeddings.jsonl")).unwrap().lines().count(), 24);

        let out = eval(&cfg).unwrap();
        assert_eq!(out.runs.len(), 1 + 3);
        assert_eq!(out.summaries.len(), 2);
        assert_eq!(out.summaries[0].runs, 1);
        let two = &out.runs[1];
        assert_eq!((two.support, two.validation + two.test), (4, 20));
        let metrics = fs::read_to_string(cfg.out.join("metrics.jsonl")).unwrap();
        assert_eq!(metrics.lines().count(), 6);
        let preds = fs::read_to_string(cfg.out.join("predictions.jsonl")).unwrap();
        assert_eq!(preds.lines().count(), 24 + out.runs[1..].iter().map(|r| r.test).sum::<usize>());
    }

    #[test]
    fn mode_and_checkpoint_mismatches_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_config(dir.path());
        assert!(eval(&cfg).is_err(), "no checkpoint yet");
        pretrain(&cfg).unwrap();
        cfg.eval.mode = Mode::GloGoft;
        assert!(eval(&cfg).is_err(), "full checkpoint in ablation mode");
        cfg.eval.mode = Mode::TofgK;
        assert!(pretrain(&cfg).is_err());
        cfg.eval.shots = vec![0];
        let out = eval(&cfg).unwrap();
        assert_eq!(out.runs[0].mode, "tofg_2");
    }

    #[test]
    fn render_styles() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_config(dir.path());
        let full = render_doc(&cfg, 0, 1, DocStyle::Full).unwrap();
        assert!(full.starts_with("1"));
        let flat = render_doc(&cfg, 0, 1, DocStyle::Flat).unwrap();
        assert!(flat.starts_with("Node 1: "));
        cfg.view.walk.num_walks = 3;
        let walks = render_doc(&cfg, 0, 2, DocStyle::Walks).unwrap();
        assert!(!walks.is_empty());
        assert!(render_doc(&cfg, 99, 1, DocStyle::Full).is_err());
    }

    #[test]
    fn tree_bench_matches_closed_form() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = toy_config(dir.path());
        cfg.bench.k_max = 3;
        let rep = bench(&cfg, Some(TreeSpec { branching: 3, depth: 3, words: 10 })).unwrap();
        let full: Vec<f64> = rep.hops.iter().map(|h| h.full_words).collect();
        assert_eq!(full, vec![10.0, 40.0, 130.0, 400.0]);
        assert!(cfg.out.join("bench.json").exists());
    }
}
