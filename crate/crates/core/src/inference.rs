//! Zero- and few-shot node classification with label-text embeddings.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::alignment::{OptimizerKind, OptimizerState, TofgStore};
use crate::checkpoint::Checkpoint;
use crate::embed::{add_cosine_grad, cosine_slices, EmbeddingVector, TextEmbedder};
use crate::error::InferenceError;
use crate::gnn::forward_trace;
use crate::graph::{NodeId, TextAttributedGraph};
use crate::par::{self, Execution};

/// Which representation of a node to classify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    /// Graph view `b^0_K` from a model trained on every order pair.
    Taga,
    /// Text view `h_k`, no network.
    TofgK(usize),
    /// Graph view `b^0_K` from a model trained on `l = 0` pairs only.
    GloGoft,
}

/// Checks that a checkpoint was trained against the provider a store uses.
pub fn check_compatible(checkpoint: &Checkpoint, store: &TofgStore<'_>) -> Result<(), InferenceError> {
    let ours = store.provider().descriptor();
    let theirs = &checkpoint.provider;
    if theirs.dimension != ours.dimension || checkpoint.params.dim != ours.dimension {
        return Err(InferenceError::IncompatibleCheckpoint(format!(
            "checkpoint dimension {} but provider dimension {}",
            checkpoint.params.dim, ours.dimension
        )));
    }
    if theirs.kind != ours.kind || theirs.model_name != ours.model_name {
        return Err(InferenceError::IncompatibleCheckpoint(format!(
            "checkpoint trained with {:?} {:?}, provider is {:?} {:?}",
            theirs.kind, theirs.model_name, ours.kind, ours.model_name
        )));
    }
    if checkpoint.params.num_layers() < checkpoint.view.max_order {
        return Err(InferenceError::IncompatibleCheckpoint("fewer layers than the trained maximum order".into()));
    }
    Ok(())
}

/// Embeddings of `nodes` in input order.
pub fn node_embeddings(
    store: &TofgStore<'_>,
    checkpoint: Option<&Checkpoint>,
    nodes: &[NodeId],
    mode: EmbeddingMode,
    exec: Execution,
) -> Result<Vec<EmbeddingVector>, InferenceError> {
    match mode {
        EmbeddingMode::TofgK(k) => {
            if let Some(c) = checkpoint {
                check_compatible(c, store)?;
            }
            let keys: Vec<_> = nodes.iter().map(|&v| (v, k)).collect();
            store.prefetch(&keys, exec)?;
            Ok(nodes.iter().map(|&v| store.get(v, k).map(|h| (*h).clone())).collect::<Result<_, _>>()?)
        }
        EmbeddingMode::Taga | EmbeddingMode::GloGoft => {
            let c = checkpoint
                .ok_or_else(|| InferenceError::IncompatibleCheckpoint("graph-view modes need a checkpoint".into()))?;
            check_compatible(c, store)?;
            let ablated = mode == EmbeddingMode::GloGoft;
            if c.train.glo_goft_only != ablated {
                return Err(InferenceError::IncompatibleCheckpoint(format!(
                    "mode {mode:?} needs a checkpoint trained with glo_goft_only = {ablated}"
                )));
            }
            let k = c.view.max_order;
            store.prefetch(&store.required_keys(nodes, &[(k, 0)])?, exec)?;
            par::try_map(exec, nodes, |&v| -> Result<EmbeddingVector, InferenceError> {
                let (input, target) = crate::alignment::local_input(store, v, k, 0)?;
                Ok(forward_trace(&c.params, &input, target, k)?.output())
            })
        }
    }
}

pub fn node_embedding(
    store: &TofgStore<'_>,
    checkpoint: Option<&Checkpoint>,
    node: NodeId,
    mode: EmbeddingMode,
) -> Result<EmbeddingVector, InferenceError> {
    Ok(node_embeddings(store, checkpoint, &[node], mode, Execution::Sequential)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEmbeddings {
    pub labels: Vec<String>,
    pub vectors: Vec<EmbeddingVector>,
}

impl LabelEmbeddings {
    /// Embeds each label, substituted into `template` at `{}` when given.
    pub fn new(provider: &dyn TextEmbedder, labels: &[String], template: Option<&str>) -> Result<Self, InferenceError> {
        if labels.is_empty() {
            return Err(InferenceError::NoLabels);
        }
        let prompts: Vec<String> = labels
            .iter()
            .map(|l| match template {
                Some(t) => t.replace("{}", l),
                None => l.clone(),
            })
            .collect();
        Ok(Self { labels: labels.to_vec(), vectors: provider.embed(&prompts)? })
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.dim())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub node: NodeId,
    pub probabilities: Vec<f64>,
    pub predicted: usize,
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// First index of the largest value.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn predict_one(node: NodeId, x: &[f64], labels: &LabelEmbeddings) -> Prediction {
    let scores: Vec<f64> = labels.vectors.iter().map(|l| cosine_slices(x, l)).collect();
    Prediction { node, predicted: argmax(&scores), probabilities: softmax(&scores) }
}

fn check_dims(embeddings: &[EmbeddingVector], labels: &LabelEmbeddings) -> Result<(), InferenceError> {
    if labels.vectors.is_empty() {
        return Err(InferenceError::NoLabels);
    }
    let dim = labels.dimension();
    if let Some(bad) = embeddings.iter().chain(&labels.vectors).find(|v| v.dim() != dim) {
        return Err(InferenceError::DimensionMismatch { expected: dim, got: bad.dim() });
    }
    Ok(())
}

/// Softmax over cosine similarities to each label.
pub fn zero_shot(
    nodes: &[NodeId],
    embeddings: &[EmbeddingVector],
    labels: &LabelEmbeddings,
    exec: Execution,
) -> Result<Vec<Prediction>, InferenceError> {
    assert_eq!(nodes.len(), embeddings.len(), "one embedding per node");
    check_dims(embeddings, labels)?;
    let idx: Vec<usize> = (0..nodes.len()).collect();
    Ok(par::map(exec, &idx, |&i| predict_one(nodes[i], &embeddings[i], labels)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FewShotConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for FewShotConfig {
    fn default() -> Self {
        Self { epochs: 100, learning_rate: 1e-2, seed: 0 }
    }
}

/// `g(x) = x + W2 · tanh(W1 · x + b1) + b2`. `W2` and `b2` start at zero, so
/// an unfitted adapter is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct FewShotAdapter {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub config: FewShotConfig,
    /// Epoch whose parameters were kept (0 = initialization).
    pub best_epoch: usize,
    pub initial_loss: f64,
    pub best_loss: f64,
}

impl FewShotAdapter {
    pub fn identity(dim: usize, config: FewShotConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let bound = (6.0 / (2.0 * dim as f64)).sqrt();
        Self {
            w1: Array2::from_shape_simple_fn((dim, dim), || rng.random_range(-bound..=bound)),
            b1: Array1::zeros(dim),
            w2: Array2::zeros((dim, dim)),
            b2: Array1::zeros(dim),
            config,
            best_epoch: 0,
            initial_loss: f64::NAN,
            best_loss: f64::NAN,
        }
    }

    pub fn dimension(&self) -> usize {
        self.b2.len()
    }

    fn hidden(&self, x: &[f64]) -> Array1<f64> {
        (self.w1.dot(&Array1::from(x.to_vec())) + &self.b1).mapv(f64::tanh)
    }

    pub fn apply(&self, x: &EmbeddingVector) -> EmbeddingVector {
        let t = self.hidden(x);
        let out = Array1::from(x.to_vec()) + self.w2.dot(&t) + &self.b2;
        EmbeddingVector::new(out.to_vec())
    }

    fn flatten(&self) -> Vec<f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).copied().collect()
    }

    fn assign(&mut self, flat: &[f64]) {
        let mut it = flat.iter().copied();
        for x in self.w1.iter_mut().chain(self.b1.iter_mut()).chain(self.w2.iter_mut()).chain(self.b2.iter_mut()) {
            *x = it.next().expect("flat parameter length");
        }
    }

    /// Mean cross-entropy over the support set and its gradient.
    fn loss_and_grad(&self, xs: &[EmbeddingVector], ys: &[usize], labels: &LabelEmbeddings) -> (f64, Vec<f64>) {
        let dim = self.dimension();
        let n = xs.len() as f64;
        let mut loss = 0.0;
        let mut gw1 = Array2::<f64>::zeros((dim, dim));
        let mut gb1 = Array1::<f64>::zeros(dim);
        let mut gw2 = Array2::<f64>::zeros((dim, dim));
        let mut gb2 = Array1::<f64>::zeros(dim);
        for (x, &y) in xs.iter().zip(ys) {
            let t = self.hidden(x);
            let g = self.apply(x);
            let scores: Vec<f64> = labels.vectors.iter().map(|l| cosine_slices(&g, l)).collect();
            let p = softmax(&scores);
            loss -= p[y].ln() / n;
            let mut dg = vec![0.0; dim];
            for (j, l) in labels.vectors.iter().enumerate() {
                let coef = (p[j] - if j == y { 1.0 } else { 0.0 }) / n;
                add_cosine_grad(&g, l, coef, &mut dg);
            }
            let dg = Array1::from(dg);
            gb2 += &dg;
            gw2 += &outer(&dg, &t);
            let da = self.w2.t().dot(&dg) * t.mapv(|v| 1.0 - v * v);
            gb1 += &da;
            gw1 += &outer(&da, &Array1::from(x.to_vec()));
        }
        let grad = gw1.iter().chain(&gb1).chain(&gw2).chain(&gb2).copied().collect();
        (loss, grad)
    }

    /// Full-batch Adam on the support cross-entropy. Keeps the parameters
    /// with the lowest support loss seen, including the initialization.
    pub fn fit(
        support: &[EmbeddingVector],
        targets: &[usize],
        labels: &LabelEmbeddings,
        config: FewShotConfig,
    ) -> Result<Self, InferenceError> {
        if support.is_empty() {
            return Err(InferenceError::EmptySupport);
        }
        assert_eq!(support.len(), targets.len(), "one target per support example");
        check_dims(support, labels)?;
        if let Some(&bad) = targets.iter().find(|&&y| y >= labels.labels.len()) {
            return Err(InferenceError::Split(format!("target label {bad} outside the label set")));
        }
        let mut adapter = Self::identity(labels.dimension(), config);
        let mut optimizer = OptimizerState::new(OptimizerKind::default(), adapter.flatten().len());
        let mut best = adapter.flatten();
        let mut best_loss = f64::INFINITY;
        let mut best_epoch = 0;
        let mut initial_loss = f64::NAN;
        for epoch in 0..=config.epochs {
            let (loss, grad) = adapter.loss_and_grad(support, targets, labels);
            if !loss.is_finite() {
                return Err(InferenceError::NonFiniteLoss(epoch));
            }
            if epoch == 0 {
                initial_loss = loss;
            }
            if loss < best_loss {
                best_loss = loss;
                best_epoch = epoch;
                best = adapter.flatten();
            }
            if epoch < config.epochs {
                let mut flat = adapter.flatten();
                optimizer.update(&mut flat, &grad, config.learning_rate);
                adapter.assign(&flat);
            }
        }
        adapter.assign(&best);
        adapter.best_epoch = best_epoch;
        adapter.initial_loss = initial_loss;
        adapter.best_loss = best_loss;
        Ok(adapter)
    }

    pub fn support_loss(&self, support: &[EmbeddingVector], targets: &[usize], labels: &LabelEmbeddings) -> f64 {
        self.loss_and_grad(support, targets, labels).0
    }

    pub fn predict(
        &self,
        nodes: &[NodeId],
        embeddings: &[EmbeddingVector],
        labels: &LabelEmbeddings,
        exec: Execution,
    ) -> Result<Vec<Prediction>, InferenceError> {
        check_dims(embeddings, labels)?;
        let adapted = par::map(exec, embeddings, |x| self.apply(x));
        zero_shot(nodes, &adapted, labels, exec)
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub support: Vec<NodeId>,
    pub validation: Vec<NodeId>,
    pub test: Vec<NodeId>,
}

/// Samples `shots` support nodes per class, then splits the remaining
/// labeled nodes 1:9 into validation and test. With `shots = 0` every
/// labeled node is a test node.
pub fn few_shot_split(graph: &TextAttributedGraph, shots: usize, seed: u64) -> Result<Split, InferenceError> {
    let mut by_class: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for v in 0..graph.num_nodes() {
        if let Some(y) = graph.label(v) {
            by_class.entry(y).or_default().push(v);
        }
    }
    if by_class.is_empty() {
        return Err(InferenceError::Split("graph has no labeled nodes".into()));
    }
    if shots == 0 {
        let test =
            by_class.values().flatten().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
        return Ok(Split { support: Vec::new(), validation: Vec::new(), test });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support = Vec::new();
    let mut rest = Vec::new();
    for (class, mut members) in by_class {
        if members.len() < shots {
            return Err(InferenceError::Split(format!(
                "class {class} has {} nodes, fewer than {shots} shots",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        support.extend_from_slice(&members[..shots]);
        rest.extend_from_slice(&members[shots..]);
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let n_val = rest.len() / 10;
    let validation = rest[..n_val].to_vec();
    let test = rest[n_val..].to_vec();
    Ok(Split { support, validation, test })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
}

/// Accuracy of `predictions` on the nodes in `nodes`.
pub fn evaluate(
    predictions: &[Prediction],
    graph: &TextAttributedGraph,
    nodes: &[NodeId],
) -> Result<AccuracyReport, InferenceError> {
    let by_node: BTreeMap<NodeId, usize> = predictions.iter().map(|p| (p.node, p.predicted)).collect();
    let mut correct = 0;
    for &v in nodes {
        let truth = graph.label(v).ok_or(InferenceError::MissingLabel(v))?;
        let guess = by_node.get(&v).ok_or_else(|| InferenceError::Split(format!("no prediction for node {v}")))?;
        correct += usize::from(*guess == truth);
    }
    let total = nodes.len();
    let accuracy = if total == 0 { 0.0 } else { correct as f64 / total as f64 };
    Ok(AccuracyReport { accuracy, correct, total })
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
