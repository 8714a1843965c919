//! Structure-preserving random walks over an ego-graph's BFS tree.
//!
//! A walk starts at the root and descends through tree children, taking a
//! cross-edge instead with probability `p` whenever the current node has
//! one. Each walk selects a sub-document of the full layout; averaging the
//! embeddings of several such sub-documents stands in for embedding the
//! whole (exponentially growing) document.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::document::{render, DocumentText, HierarchicalDocument};
use crate::error::DocumentError;
use crate::graph::{EgoGraph, NodeId};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub jump_probability: f64,
    /// Maximum path length in nodes; `None` means `hops + 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_length: Option<usize>,
    pub num_walks: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self { jump_probability: 0.3, max_length: None, num_walks: 8, seed: 0 }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.jump_probability) {
            return Err(format!("jump probability {} outside [0, 1]", self.jump_probability));
        }
        if self.max_length == Some(0) {
            return Err("walk length must be at least 1".into());
        }
        if self.num_walks == 0 {
            return Err("number of walks must be at least 1".into());
        }
        Ok(())
    }

    pub fn length_for(&self, hops: usize) -> usize {
        self.max_length.unwrap_or(hops + 2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkPath {
    pub nodes: Vec<NodeId>,
    /// Indices into `nodes` reached through a cross-edge.
    pub jump_positions: Vec<usize>,
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for walk `index` rooted at `root`.
pub fn walk_rng(seed: u64, root: NodeId, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&mix(seed).to_le_bytes());
    key[8..16].copy_from_slice(&mix(seed ^ mix(root as u64)).to_le_bytes());
    key[16..24].copy_from_slice(&mix(index as u64 ^ 0x5851_f42d_4c95_7f2d).to_le_bytes());
    key[24..].copy_from_slice(&mix(seed.rotate_left(17) ^ root as u64 ^ (index as u64).rotate_left(40)).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

pub fn sample_walk<R: Rng + ?Sized>(ego: &EgoGraph, cfg: &WalkConfig, rng: &mut R) -> WalkPath {
    let max_len = cfg.length_for(ego.hops());
    let mut v = ego.root();
    let mut path = WalkPath { nodes: vec![v], jump_positions: Vec::new() };
    while path.nodes.len() < max_len && !ego.children(v).is_empty() {
        let draw: f64 = rng.random();
        let cross = ego.cross_neighbors(v);
        if draw < cfg.jump_probability && !cross.is_empty() {
            v = *cross.choose(rng).expect("nonempty");
            path.jump_positions.push(path.nodes.len());
        } else {
            v = *ego.children(v).choose(rng).expect("nonempty");
        }
        path.nodes.push(v);
    }
    path
}

/// The sections of the distinct nodes on `path`, in document order.
pub fn walk_subdocument(doc: &HierarchicalDocument, path: &WalkPath) -> Result<DocumentText, DocumentError> {
    let visited: BTreeSet<NodeId> = path.nodes.iter().copied().collect();
    if let Some(&missing) = visited.iter().find(|v| !doc.by_node.contains_key(v)) {
        return Err(DocumentError::MissingSection(missing));
    }
    Ok(render(&doc.restrict(&visited)))
}

pub fn sample_walks(ego: &EgoGraph, cfg: &WalkConfig, exec: Execution) -> Vec<WalkPath> {
    par::map_range(exec, cfg.num_walks, |i| {
        let mut rng = walk_rng(cfg.seed, ego.root(), i);
        sample_walk(ego, cfg, &mut rng)
    })
}

/// One sub-document per walk, in walk-index order.
pub fn walk_corpus(ego: &EgoGraph, doc: &HierarchicalDocument, cfg: &WalkConfig, exec: Execution) -> Vec<DocumentText> {
    sample_walks(ego, cfg, exec)
        .iter()
        .map(|p| walk_subdocument(doc, p).expect("walks stay inside the ego-graph"))
        .collect()
}

/// Node-text words of each walk's sub-document.
pub fn walk_body_words(ego: &EgoGraph, doc: &HierarchicalDocument, cfg: &WalkConfig, exec: Execution) -> Vec<usize> {
    sample_walks(ego, cfg, exec)
        .iter()
        .map(|p| doc.restrict(&p.nodes.iter().copied().collect()).body_word_count())
        .collect()
}
