//! Corpus growth: words in full neighborhood documents versus walk corpora
//! as the neighborhood radius grows.

use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::{layout, render};
use crate::error::GraphError;
use crate::graph::{NodeId, TextAttributedGraph};
use crate::par::{self, Execution};
use crate::walks::{walk_body_words, walk_corpus, WalkConfig};

/// Word counts count node-text words only, so section headers and
/// reference lines do not inflate either side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopStats {
    pub k: usize,
    /// Mean over roots of the full document's words.
    pub full_words: f64,
    /// Mean over roots and walks of one walk's sub-document words.
    pub walk_words_per_walk: f64,
    /// Mean over roots of the whole walk corpus's words.
    pub walk_words_total: f64,
    pub full_seconds: f64,
    pub walk_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub roots: Vec<NodeId>,
    pub average_degree: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub num_walks: usize,
    pub jump_probability: f64,
    pub hops: Vec<HopStats>,
}

/// `count` distinct roots drawn uniformly, ascending; every node when the
/// graph is smaller.
pub fn sample_roots(graph: &TextAttributedGraph, count: usize, seed: u64) -> Vec<NodeId> {
    let n = graph.num_nodes();
    if count >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut roots = sample(&mut rng, n, count).into_vec();
    roots.sort_unstable();
    roots
}

/// Measures hops `0..=k_max`. Walks have `k + 1` nodes unless the walk
/// configuration fixes a length.
pub fn bench_corpus(
    graph: &TextAttributedGraph,
    roots: &[NodeId],
    k_max: usize,
    walk: &WalkConfig,
    dimension: Option<usize>,
    exec: Execution,
) -> Result<BenchReport, GraphError> {
    let mut hops = Vec::with_capacity(k_max + 1);
    let egos_by_hop = (0..=k_max)
        .map(|k| roots.iter().map(|&r| graph.ego_graph(r, k)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    for (k, egos) in egos_by_hop.iter().enumerate() {
        let cfg = WalkConfig { max_length: Some(walk.max_length.unwrap_or(k + 1)), ..*walk };

        let start = Instant::now();
        let full: Vec<usize> = par::map(exec, egos, |ego| {
            let doc = layout(ego, graph);
            let _ = render(&doc);
            doc.body_word_count()
        });
        let full_seconds = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let walks: Vec<Vec<usize>> = par::map(exec, egos, |ego| {
            let doc = layout(ego, graph);
            let _ = walk_corpus(ego, &doc, &cfg, Execution::Sequential);
            walk_body_words(ego, &doc, &cfg, Execution::Sequential)
        });
        let walk_seconds = start.elapsed().as_secs_f64();

        let r = roots.len().max(1) as f64;
        let totals: Vec<usize> = walks.iter().map(|w| w.iter().sum()).collect();
        let n_walks = walks.iter().map(Vec::len).sum::<usize>().max(1) as f64;
        hops.push(HopStats {
            k,
            full_words: full.iter().sum::<usize>() as f64 / r,
            walk_words_per_walk: totals.iter().sum::<usize>() as f64 / n_walks,
            walk_words_total: totals.iter().sum::<usize>() as f64 / r,
            full_seconds,
            walk_seconds,
        });
    }
    Ok(BenchReport {
        roots: roots.to_vec(),
        average_degree: graph.average_degree(),
        dimension,
        num_walks: walk.num_walks,
        jump_probability: walk.jump_probability,
        hops,
    })
}
