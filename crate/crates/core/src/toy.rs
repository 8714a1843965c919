//! Synthetic graphs: a planted two-topic partition and complete trees.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{NodeId, TextAttributedGraph};

const TOPICS: [(&str, &[&str]); 2] = [
    (
        "astronomy star planet",
        &[
            "astronomy",
            "star",
            "planet",
            "galaxy",
            "orbit",
            "comet",
            "nebula",
            "telescope",
            "lunar",
            "solar",
            "meteor",
            "quasar",
            "cosmic",
            "stellar",
            "eclipse",
            "asteroid",
            "supernova",
            "redshift",
            "pulsar",
            "constellation",
            "celestial",
            "gravity",
            "spectrum",
            "parallax",
        ],
    ),
    (
        "botany leaf flower",
        &[
            "botany",
            "leaf",
            "flower",
            "petal",
            "stem",
            "pollen",
            "seed",
            "root",
            "chlorophyll",
            "fern",
            "moss",
            "orchid",
            "blossom",
            "sprout",
            "foliage",
            "germination",
            "photosynthesis",
            "shrub",
            "bark",
            "sapling",
            "meadow",
            "cactus",
            "tulip",
            "vine",
        ],
    ),
];

const SHARED: &[&str] = &[
    "study",
    "analysis",
    "method",
    "observation",
    "sample",
    "measurement",
    "report",
    "survey",
    "theory",
    "field",
    "result",
    "model",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToyConfig {
    pub nodes: usize,
    pub intra_probability: f64,
    pub inter_probability: f64,
    /// Chance that a word comes from the shared vocabulary.
    pub shared_fraction: f64,
    pub min_words: usize,
    pub max_words: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            nodes: 60,
            intra_probability: 0.2,
            inter_probability: 0.02,
            shared_fraction: 0.2,
            min_words: 4,
            max_words: 8,
            seed: 7,
        }
    }
}

/// Two equal classes with class-specific vocabularies; labels are the topic
/// prompts, which reuse words from their class vocabulary.
pub fn planted_partition(cfg: &ToyConfig) -> TextAttributedGraph {
    assert!(cfg.min_words >= 1 && cfg.min_words <= cfg.max_words, "bad word range");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let classes: Vec<usize> = (0..cfg.nodes).map(|v| v * TOPICS.len() / cfg.nodes.max(1)).collect();
    let texts: Vec<String> = classes
        .iter()
        .map(|&c| {
            let n = rng.random_range(cfg.min_words..=cfg.max_words);
            (0..n)
                .map(|_| {
                    let pool = if rng.random_bool(cfg.shared_fraction) { SHARED } else { TOPICS[c].1 };
                    *pool.choose(&mut rng).expect("nonempty vocabulary")
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let mut edges = Vec::new();
    for a in 0..cfg.nodes {
        for b in a + 1..cfg.nodes {
            let p = if classes[a] == classes[b] { cfg.intra_probability } else { cfg.inter_probability };
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    let labels = TOPICS.iter().map(|(l, _)| l.to_string()).collect();
    TextAttributedGraph::new(texts, &edges)
        .and_then(|g| g.with_labels(classes.into_iter().map(Some).collect(), labels))
        .expect("generated ids are dense")
}

/// Complete `branching`-ary tree of the given depth in BFS numbering, every
/// node carrying `words` distinct words.
pub fn complete_tree(branching: usize, depth: usize, words: usize) -> TextAttributedGraph {
    let mut n = 1;
    let mut level = 1;
    for _ in 0..depth {
        level *= branching;
        n += level;
    }
    let texts = (0..n).map(|v| (0..words).map(|w| format!("n{v}w{w}")).collect::<Vec<_>>().join(" ")).collect();
    let edges: Vec<(NodeId, NodeId)> = (1..n).map(|v| ((v - 1) / branching, v)).collect();
    TextAttributedGraph::new(texts, &edges).expect("tree ids are dense")
}
