use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::embed::add_cosine_grad;
use crate::error::{EmbedError, TrainError};
use crate::gnn::{backward, init_params, Architecture, ForwardTrace, GnnParameters, Gradients};
use crate::graph::NodeId;
use crate::par::{self, Execution};

use super::loss::{total_loss_over, LossReport};
use super::optim::{OptimizerKind, OptimizerState};
use super::views::{view_pairs, view_trace, TofgStore, ViewEmbeddingSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// The rate is multiplied by `decay_rate` once every `decay_every` steps.
    pub decay_rate: f64,
    pub decay_every: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Align only graph views built on raw node-text embeddings (`l = 0`).
    pub glo_goft_only: bool,
    pub architecture: Architecture,
    /// Keep a loss record every this many steps.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 40_000,
            batch_size: 8,
            learning_rate: 1e-3,
            decay_rate: 0.999,
            decay_every: 10,
            seed: 0,
            optimizer: OptimizerKind::default(),
            glo_goft_only: false,
            architecture: Architecture::Gcn,
            log_every: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, num_nodes: usize) -> Result<(), TrainError> {
        let fail = |m: String| Err(TrainError::Config(m));
        if self.batch_size < 2 {
            return fail("batch size must be at least 2".into());
        }
        if self.batch_size > num_nodes {
            return fail(format!("batch size {} exceeds the {num_nodes} nodes in the graph", self.batch_size));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!("learning rate {} must be positive", self.learning_rate));
        }
        if !(self.decay_rate > 0.0 && self.decay_rate <= 1.0) {
            return fail(format!("decay rate {} outside (0, 1]", self.decay_rate));
        }
        if self.decay_every == 0 || self.log_every == 0 {
            return fail("decay and log intervals must be positive".into());
        }
        Ok(())
    }

    /// Learning rate in effect at zero-based step `t`.
    pub fn learning_rate_at(&self, t: usize) -> f64 {
        self.learning_rate * self.decay_rate.powi((t / self.decay_every) as i32)
    }
}

/// One line of the training log. `step` is one-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub lr: f64,
    pub positive: f64,
    pub negative: f64,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<LossRecord>,
}

struct NodeViews {
    set: ViewEmbeddingSet,
    traces: Vec<ForwardTrace>,
}

/// Loss over `batch` restricted to `pairs`, and its exact gradient with
/// respect to every GNN parameter. Text views are constants.
pub fn loss_and_gradients(
    store: &TofgStore<'_>,
    params: &GnnParameters,
    batch: &[NodeId],
    pairs: &[(usize, usize)],
    exec: Execution,
) -> Result<(LossReport, Gradients), TrainError> {
    let max_order = store.config().max_order;
    if params.dim != store.dimension() {
        return Err(EmbedError::DimensionMismatch { expected: params.dim, got: store.dimension() }.into());
    }
    store.prefetch(&store.required_keys(batch, pairs)?, exec)?;
    let views = par::try_map(exec, batch, |&v| -> Result<NodeViews, TrainError> {
        let mut traces = Vec::with_capacity(pairs.len());
        let mut b = BTreeMap::new();
        for &(k, l) in pairs {
            let trace = view_trace(store, params, v, k, l)?;
            b.insert((k, l), trace.output());
            traces.push(trace);
        }
        let mut h = BTreeMap::new();
        for k in 0..=max_order {
            h.insert(k, (*store.get(v, k)?).clone());
        }
        Ok(NodeViews { set: ViewEmbeddingSet { node: v, h, b }, traces })
    })?;
    let sets: Vec<ViewEmbeddingSet> = views.iter().map(|n| n.set.clone()).collect();
    let report = total_loss_over(&sets, max_order, pairs)?;

    let scale = 1.0 / (max_order as f64 * batch.len() as f64);
    let indices: Vec<usize> = (0..views.len()).collect();
    let per_node = par::try_map(exec, &indices, |&i| -> Result<Gradients, TrainError> {
        let mut acc = params.zeros_like();
        for (&(k, l), trace) in pairs.iter().zip(&views[i].traces) {
            let b = &sets[i].b[&(k, l)];
            let mut upstream = vec![0.0; params.dim];
            add_cosine_grad(b, &sets[i].h[&k], -scale, &mut upstream);
            for (j, sj) in sets.iter().enumerate() {
                if j != i {
                    add_cosine_grad(b, &sj.h[&k], scale, &mut upstream);
                }
            }
            acc.add_assign(&backward(params, trace, &upstream)?);
        }
        Ok(acc)
    })?;
    let mut grads = params.zeros_like();
    for g in &per_node {
        grads.add_assign(g);
    }
    Ok((report, grads))
}

/// Runs the alignment objective for `cfg.steps` steps from a fresh
/// initialization.
pub fn train(store: &TofgStore<'_>, cfg: &TrainConfig, exec: Execution) -> Result<TrainOutcome, TrainError> {
    let view = *store.config();
    view.validate()?;
    let n = store.graph().num_nodes();
    cfg.validate(n)?;
    let pairs = view_pairs(view.max_order, cfg.glo_goft_only);
    let mut params = init_params(cfg.architecture, view.num_layers(), store.dimension(), cfg.seed);
    let mut optimizer = OptimizerState::new(cfg.optimizer, params.num_scalars());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7461_6761_6261_7463);
    let mut log = Vec::new();
    for t in 0..cfg.steps {
        let batch = sample(&mut rng, n, cfg.batch_size).into_vec();
        let (report, grads) = loss_and_gradients(store, &params, &batch, &pairs, exec)?;
        if !report.total.is_finite() {
            return Err(TrainError::NonFiniteLoss {
                step: t + 1,
                positive: report.positive,
                negative: report.negative,
            });
        }
        let lr = cfg.learning_rate_at(t);
        let mut flat = params.flatten();
        optimizer.update(&mut flat, &grads.flatten(), lr);
        params.assign_flat(&flat);
        if (t + 1) % cfg.log_every == 0 {
            let rec = LossRecord {
                step: t + 1,
                lr,
                positive: report.positive,
                negative: report.negative,
                total: report.total,
            };
            log::debug!("step {} lr {:.3e} loss {:.6}", rec.step, rec.lr, rec.total);
            log.push(rec);
        }
    }
    let checkpoint = Checkpoint::new(params, store.provider().descriptor().clone(), cfg.steps, view, *cfg);
    Ok(TrainOutcome { checkpoint, log })
}
