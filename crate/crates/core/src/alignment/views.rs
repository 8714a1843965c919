use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, RwLock};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::document::{layout, render};
use crate::embed::{EmbeddingVector, TextEmbedder};
use crate::error::{EmbedError, TrainError};
use crate::gnn::{forward_trace, ForwardTrace, GnnParameters, GraphInput};
use crate::graph::{NodeId, TextAttributedGraph};
use crate::par::{self, Execution};
use crate::walks::{walk_corpus, WalkConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TofgMode {
    #[default]
    Full,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewConfig {
    /// Highest neighborhood order `K`.
    pub max_order: usize,
    pub tofg_mode: TofgMode,
    pub walk: WalkConfig,
}

impl Default for ViewConfig {
    fn default() -> Self {
        Self { max_order: 2, tofg_mode: TofgMode::Full, walk: WalkConfig::default() }
    }
}

impl ViewConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.max_order == 0 {
            return Err(TrainError::Config("maximum order must be at least 1".into()));
        }
        if self.tofg_mode == TofgMode::RandomWalk {
            self.walk.validate().map_err(TrainError::Config)?;
        }
        Ok(())
    }

    /// Number of GNN layers the shared stack needs; the `(k, l)` view uses
    /// the first `k - l` of them.
    pub fn num_layers(&self) -> usize {
        self.max_order
    }
}

/// The `(k, l)` orders aligned by the objective, `k` ascending then `l`
/// ascending. `global_only` keeps only `l = 0`.
pub fn view_pairs(max_order: usize, global_only: bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for k in 1..=max_order {
        for l in 0..k {
            if !global_only || l == 0 {
                out.push((k, l));
            }
        }
    }
    out
}

type Memo = HashMap<(NodeId, usize), Arc<EmbeddingVector>>;

/// Text-view embeddings `h_k(v)`, computed on demand and memoized. Documents
/// and walks are deterministic, so every `(node, k)` is embedded once.
pub struct TofgStore<'a> {
    graph: &'a TextAttributedGraph,
    provider: &'a dyn TextEmbedder,
    config: ViewConfig,
    memo: RwLock<Memo>,
}

impl<'a> TofgStore<'a> {
    pub fn new(graph: &'a TextAttributedGraph, provider: &'a dyn TextEmbedder, config: ViewConfig) -> Self {
        Self { graph, provider, config, memo: RwLock::new(HashMap::new()) }
    }

    pub fn graph(&self) -> &'a TextAttributedGraph {
        self.graph
    }

    pub fn provider(&self) -> &'a dyn TextEmbedder {
        self.provider
    }

    pub fn config(&self) -> &ViewConfig {
        &self.config
    }

    pub fn dimension(&self) -> usize {
        self.provider.dimension()
    }

    pub fn len(&self) -> usize {
        self.memo.read().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The texts whose embeddings average to `h_k(v)`.
    pub fn texts(&self, v: NodeId, k: usize) -> Result<Vec<String>, TrainError> {
        if k == 0 {
            self.graph.ego_graph(v, 0)?;
            return Ok(vec![self.graph.text(v).to_string()]);
        }
        let ego = self.graph.ego_graph(v, k)?;
        let doc = layout(&ego, self.graph);
        Ok(match self.config.tofg_mode {
            TofgMode::Full => vec![render(&doc).content],
            TofgMode::RandomWalk => walk_corpus(&ego, &doc, &self.config.walk, Execution::Sequential)
                .into_iter()
                .map(|d| d.content)
                .collect(),
        })
    }

    /// Embeds every missing key with a single provider call. Documents are
    /// rendered in parallel; results enter the memo in key order.
    pub fn prefetch(&self, keys: &[(NodeId, usize)], exec: Execution) -> Result<(), TrainError> {
        let missing: Vec<(NodeId, usize)> = {
            let memo = self.memo.read().expect("memo lock");
            keys.iter().copied().filter(|k| !memo.contains_key(k)).collect::<BTreeSet<_>>().into_iter().collect()
        };
        if missing.is_empty() {
            return Ok(());
        }
        let texts = par::try_map(exec, &missing, |&(v, k)| self.texts(v, k))?;
        let flat: Vec<String> = texts.iter().flatten().cloned().collect();
        let vectors = self.provider.embed(&flat)?;
        let dim = self.dimension();
        if vectors.len() != flat.len() {
            return Err(EmbedError::PartialResponse { expected: flat.len(), got: vectors.len() }.into());
        }
        if let Some(bad) = vectors.iter().find(|x| x.dim() != dim) {
            return Err(EmbedError::DimensionMismatch { expected: dim, got: bad.dim() }.into());
        }
        let mut memo = self.memo.write().expect("memo lock");
        let mut at = 0;
        for (key, group) in missing.into_iter().zip(&texts) {
            let slice = &vectors[at..at + group.len()];
            at += group.len();
            let h = if slice.len() == 1 { slice[0].clone() } else { EmbeddingVector::mean(slice).expect("nonempty") };
            memo.entry(key).or_insert_with(|| Arc::new(h));
        }
        Ok(())
    }

    pub fn get(&self, v: NodeId, k: usize) -> Result<Arc<EmbeddingVector>, TrainError> {
        if let Some(h) = self.memo.read().expect("memo lock").get(&(v, k)) {
            return Ok(Arc::clone(h));
        }
        self.prefetch(&[(v, k)], Execution::Sequential)?;
        Ok(Arc::clone(&self.memo.read().expect("memo lock")[&(v, k)]))
    }

    /// Every key the views of `nodes` over `pairs` will read.
    pub fn required_keys(
        &self,
        nodes: &[NodeId],
        pairs: &[(usize, usize)],
    ) -> Result<Vec<(NodeId, usize)>, TrainError> {
        let mut keys = BTreeSet::new();
        for &v in nodes {
            for &(k, l) in pairs {
                keys.insert((v, k));
                keys.insert((v, l));
                for u in self.graph.k_hop_neighborhood(v, k - l)? {
                    keys.insert((u, l));
                }
            }
        }
        Ok(keys.into_iter().collect())
    }
}

/// Subgraph induced by `v` and its `radius`-hop neighborhood with order-`l`
/// text views as features. Returns the input and the local index of `v`.
pub fn local_input(
    store: &TofgStore<'_>,
    v: NodeId,
    radius: usize,
    l: usize,
) -> Result<(GraphInput, usize), TrainError> {
    let graph = store.graph();
    let mut members = graph.k_hop_neighborhood(v, radius)?;
    members.insert(v);
    let members: Vec<NodeId> = members.into_iter().collect();
    let index: BTreeMap<NodeId, usize> = members.iter().enumerate().map(|(i, &u)| (u, i)).collect();
    let mut features = Array2::zeros((members.len(), store.dimension()));
    let mut edges = Vec::new();
    for (i, &u) in members.iter().enumerate() {
        features.row_mut(i).assign(&ndarray::ArrayView1::from(&store.get(u, l)?[..]));
        for w in graph.neighbors(u) {
            if let Some(&j) = index.get(w) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
    }
    Ok((GraphInput::new(features, &edges)?, index[&v]))
}

pub(crate) fn view_trace(
    store: &TofgStore<'_>,
    params: &GnnParameters,
    v: NodeId,
    k: usize,
    l: usize,
) -> Result<ForwardTrace, TrainError> {
    let (input, target) = local_input(store, v, k - l, l)?;
    Ok(forward_trace(params, &input, target, k - l)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewEmbeddingSet {
    pub node: NodeId,
    /// Text views `h_k`, `k = 0..=K`.
    pub h: BTreeMap<usize, EmbeddingVector>,
    /// Graph views `b^l_k`.
    pub b: BTreeMap<(usize, usize), EmbeddingVector>,
}

impl ViewEmbeddingSet {
    pub fn max_order(&self) -> usize {
        self.h.keys().next_back().copied().unwrap_or(0)
    }
}

/// Builds every text and graph view of `v` up to the store's maximum order.
pub fn build_views(store: &TofgStore<'_>, params: &GnnParameters, v: NodeId) -> Result<ViewEmbeddingSet, TrainError> {
    let max_order = store.config().max_order;
    if params.dim != store.dimension() {
        return Err(EmbedError::DimensionMismatch { expected: params.dim, got: store.dimension() }.into());
    }
    let pairs = view_pairs(max_order, false);
    store.prefetch(&store.required_keys(&[v], &pairs)?, Execution::Sequential)?;
    let mut h = BTreeMap::new();
    for k in 0..=max_order {
        h.insert(k, (*store.get(v, k)?).clone());
    }
    let mut b = BTreeMap::new();
    for (k, l) in pairs {
        b.insert((k, l), view_trace(store, params, v, k, l)?.output());
    }
    Ok(ViewEmbeddingSet { node: v, h, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::{hash_embed, HashEmbedder};
    use crate::gnn::init_params;

    fn g0() -> TextAttributedGraph {
        let texts = (0..6).map(|i| format!("node {i} text about topic{i}")).collect();
        TextAttributedGraph::new(texts, &[(0, 1), (0, 2), (1, 3), (2, 3), (2, 4), (3, 5)]).unwrap()
    }

    #[test]
    fn pair_enumeration() {
        assert_eq!(view_pairs(3, false), vec![(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)]);
        assert_eq!(view_pairs(3, true), vec![(1, 0), (2, 0), (3, 0)]);
        assert_eq!(view_pairs(1, false), vec![(1, 0)]);
    }

    #[test]
    fn views_on_g0() {
        let g = g0();
        let p = HashEmbedder::new(16);
        let store = TofgStore::new(&g, &p, ViewConfig { max_order: 3, ..Default::default() });
        let params = init_params(crate::gnn::Architecture::Gcn, 3, 16, 1);
        let views = build_views(&store, &params, 0).unwrap();
        assert_eq!(views.b.len(), 6);
        assert_eq!(views.h.len(), 4);
        assert_eq!(views.h[&0], hash_embed(g.text(0), 16));
        assert!(views.b.values().all(|x| x.dim() == 16 && x.is_finite()));
        let doc = render(&layout(&g.ego_graph(0, 2).unwrap(), &g)).content;
        assert_eq!(views.h[&2], hash_embed(&doc, 16));
    }

    #[test]
    fn isolated_node_sees_only_itself() {
        let g = TextAttributedGraph::new(vec!["lonely words".into(), "other".into()], &[]).unwrap();
        let p = HashEmbedder::new(8);
        let store = TofgStore::new(&g, &p, ViewConfig { max_order: 1, ..Default::default() });
        let params = init_params(crate::gnn::Architecture::Gcn, 1, 8, 3);
        let views = build_views(&store, &params, 0).unwrap();
        let x = hash_embed("lonely words", 8);
        let w = &params.layers[0].weight;
        let expected: Vec<f64> = (0..8).map(|i| (0..8).map(|j| w[[i, j]] * x[j]).sum::<f64>().tanh()).collect();
        for (a, e) in views.b[&(1, 0)].iter().zip(&expected) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_mode_averages_walk_documents() {
        let g = g0();
        let p = HashEmbedder::new(32);
        let cfg = ViewConfig {
            max_order: 2,
            tofg_mode: TofgMode::RandomWalk,
            walk: WalkConfig { num_walks: 3, ..Default::default() },
        };
        let store = TofgStore::new(&g, &p, cfg);
        let texts = store.texts(0, 2).unwrap();
        assert_eq!(texts.len(), 3);
        let expected = EmbeddingVector::mean(&texts.iter().map(|t| hash_embed(t, 32)).collect::<Vec<_>>()).unwrap();
        assert_eq!(*store.get(0, 2).unwrap(), expected);
        assert_eq!(*store.get(0, 0).unwrap(), hash_embed(g.text(0), 32));
    }

    #[test]
    fn prefetch_matches_lazy_lookup() {
        let g = g0();
        let p = HashEmbedder::new(16);
        let cfg = ViewConfig { max_order: 2, ..Default::default() };
        let eager = TofgStore::new(&g, &p, cfg);
        let keys: Vec<_> = (0..6).flat_map(|v| (0..=2).map(move |k| (v, k))).collect();
        eager.prefetch(&keys, Execution::Parallel).unwrap();
        assert_eq!(eager.len(), 18);
        let lazy = TofgStore::new(&g, &p, cfg);
        for &(v, k) in &keys {
            assert_eq!(eager.get(v, k).unwrap(), lazy.get(v, k).unwrap());
        }
    }
}
