//! Message-passing networks with hand-written reverse-mode gradients.
//!
//! Three layer types share one parameter layout (all weights `F × F`,
//! applied as `W · x`):
//!
//! * GCN: `tanh(W · Σ_{j ∈ N(i) ∪ {i}} h_j / sqrt(d_i d_j) + b)` with `d`
//!   counting the self-loop;
//! * GraphSAGE: `tanh(W_self · h_i + W_neigh · mean_{j ∈ N(i)} h_j + b)`;
//! * GIN: `tanh(W · ((1 + ε) h_i + Σ_{j ∈ N(i)} h_j) + b)`.
//!
//! Neighbor sums always run in ascending local index order.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::EmbeddingVector;
use crate::error::GnnError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    #[default]
    Gcn,
    Sage,
    Gin,
}

impl std::str::FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gcn" => Ok(Self::Gcn),
            "sage" | "graphsage" => Ok(Self::Sage),
            "gin" => Ok(Self::Gin),
            other => Err(format!("unknown architecture {other:?}")),
        }
    }
}

/// `Identity` exists for tests that need a linear network.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Parameters of one layer. Also used to hold gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    /// GraphSAGE neighbor block.
    pub neighbor_weight: Option<Array2<f64>>,
    pub bias: Array1<f64>,
    /// GIN self-weighting.
    pub epsilon: f64,
}

impl Layer {
    fn zeros_like(&self) -> Self {
        Self {
            weight: Array2::zeros(self.weight.raw_dim()),
            neighbor_weight: self.neighbor_weight.as_ref().map(|w| Array2::zeros(w.raw_dim())),
            bias: Array1::zeros(self.bias.raw_dim()),
            epsilon: 0.0,
        }
    }

    /// Visits every scalar in a fixed order: weight, neighbor weight, bias, ε.
    pub fn for_each_mut(&mut self, arch: Architecture, mut f: impl FnMut(&mut f64)) {
        self.weight.iter_mut().for_each(&mut f);
        if let Some(w) = self.neighbor_weight.as_mut() {
            w.iter_mut().for_each(&mut f);
        }
        self.bias.iter_mut().for_each(&mut f);
        if arch == Architecture::Gin {
            f(&mut self.epsilon);
        }
    }

    pub fn values(&self, arch: Architecture) -> Vec<f64> {
        let mut out: Vec<f64> = self.weight.iter().copied().collect();
        if let Some(w) = &self.neighbor_weight {
            out.extend(w.iter());
        }
        out.extend(self.bias.iter());
        if arch == Architecture::Gin {
            out.push(self.epsilon);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnParameters {
    pub architecture: Architecture,
    pub activation: Activation,
    pub layers: Vec<Layer>,
    pub dim: usize,
    pub seed: u64,
}

impl GnnParameters {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn num_scalars(&self) -> usize {
        self.layers.iter().map(|l| l.values(self.architecture).len()).sum()
    }

    /// All scalars, layer by layer, in [`Layer::for_each_mut`] order.
    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.values(self.architecture)).collect()
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        let arch = self.architecture;
        for l in &mut self.layers {
            l.for_each_mut(arch, &mut f);
        }
    }

    pub fn assign_flat(&mut self, values: &[f64]) {
        let mut it = values.iter();
        self.for_each_mut(|x| *x = *it.next().expect("flat length matches parameter count"));
    }

    pub fn zeros_like(&self) -> Gradients {
        Gradients { architecture: self.architecture, layers: self.layers.iter().map(Layer::zeros_like).collect() }
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|x| x.is_finite())
    }
}

/// Gradients with the same layout as [`GnnParameters`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub architecture: Architecture,
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight += &b.weight;
            if let (Some(x), Some(y)) = (a.neighbor_weight.as_mut(), b.neighbor_weight.as_ref()) {
                *x += y;
            }
            a.bias += &b.bias;
            a.epsilon += b.epsilon;
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.values(self.architecture)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.flatten().iter().all(|&x| x == 0.0)
    }
}

/// Glorot-uniform weights in `±sqrt(6 / 2F)`, zero biases, `ε = 0`.
pub fn init_params(architecture: Architecture, num_layers: usize, dim: usize, seed: u64) -> GnnParameters {
    assert!(num_layers >= 1 && dim >= 1, "need at least one layer and one feature");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = (6.0 / (2.0 * dim as f64)).sqrt();
    let draw = |rng: &mut ChaCha8Rng| Array2::from_shape_simple_fn((dim, dim), || rng.random_range(-bound..=bound));
    let layers = (0..num_layers)
        .map(|_| {
            let weight = draw(&mut rng);
            let neighbor_weight = (architecture == Architecture::Sage).then(|| draw(&mut rng));
            Layer { weight, neighbor_weight, bias: Array1::zeros(dim), epsilon: 0.0 }
        })
        .collect();
    GnnParameters { architecture, activation: Activation::Tanh, layers, dim, seed }
}

/// A small graph with one feature row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub features: Array2<f64>,
    /// Sorted, symmetric, no self-loops.
    pub adjacency: Vec<Vec<usize>>,
}

impl GraphInput {
    pub fn new(features: Array2<f64>, edges: &[(usize, usize)]) -> Result<Self, GnnError> {
        let n = features.nrows();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(GnnError::EdgeOutOfRange(a, b));
            }
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for ns in &mut adjacency {
            ns.sort_unstable();
            ns.dedup();
        }
        Ok(Self { features, adjacency })
    }

    pub fn from_rows(rows: &[&[f64]], edges: &[(usize, usize)]) -> Result<Self, GnnError> {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut features = Array2::zeros((rows.len(), dim));
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(GnnError::DimensionMismatch { expected: dim, got: r.len() });
            }
            features.row_mut(i).assign(&ArrayView1::from(*r));
        }
        Self::new(features, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.features.nrows()
    }
}

/// Activations retained by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    target: usize,
    adjacency: Vec<Vec<usize>>,
    /// Input to each layer (`inputs[0]` are the features).
    inputs: Vec<Array2<f64>>,
    /// Aggregated input that multiplies the layer weight.
    aggregated: Vec<Array2<f64>>,
    /// Neighbor mean for GraphSAGE.
    neighbor_means: Vec<Option<Array2<f64>>>,
    outputs: Vec<Array2<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> EmbeddingVector {
        let last = self.outputs.last().unwrap_or(&self.inputs[0]);
        EmbeddingVector::new(last.row(self.target).to_vec())
    }

    pub fn depth(&self) -> usize {
        self.outputs.len()
    }
}

fn gcn_propagate(h: &Array2<f64>, adjacency: &[Vec<usize>]) -> Array2<f64> {
    let deg: Vec<f64> = adjacency.iter().map(|ns| (ns.len() + 1) as f64).collect();
    let mut out = Array2::zeros(h.raw_dim());
    for (i, ns) in adjacency.iter().enumerate() {
        let mut row = out.row_mut(i);
        let self_pos = ns.partition_point(|&j| j < i);
        let ordered = ns[..self_pos].iter().chain(std::iter::once(&i)).chain(&ns[self_pos..]);
        for &j in ordered {
            let c = 1.0 / (deg[i] * deg[j]).sqrt();
            row.scaled_add(c, &h.row(j));
        }
    }
    out
}

fn neighbor_sum(h: &Array2<f64>, adjacency: &[Vec<usize>]) -> Array2<f64> {
    let mut out = Array2::zeros(h.raw_dim());
    for (i, ns) in adjacency.iter().enumerate() {
        let mut row = out.row_mut(i);
        for &j in ns {
            row += &h.row(j);
        }
    }
    out
}

fn neighbor_mean(h: &Array2<f64>, adjacency: &[Vec<usize>]) -> Array2<f64> {
    let mut out = neighbor_sum(h, adjacency);
    for (i, ns) in adjacency.iter().enumerate() {
        if !ns.is_empty() {
            out.row_mut(i).mapv_inplace(|x| x / ns.len() as f64);
        }
    }
    out
}

/// Transpose of the neighbor-mean operator.
fn neighbor_mean_transpose(g: &Array2<f64>, adjacency: &[Vec<usize>]) -> Array2<f64> {
    let mut out = Array2::zeros(g.raw_dim());
    for (i, ns) in adjacency.iter().enumerate() {
        if ns.is_empty() {
            continue;
        }
        let scale = 1.0 / ns.len() as f64;
        for &j in ns {
            out.row_mut(j).scaled_add(scale, &g.row(i));
        }
    }
    out
}

/// Runs the first `depth` layers and keeps every activation.
pub fn forward_trace(
    params: &GnnParameters,
    input: &GraphInput,
    target: usize,
    depth: usize,
) -> Result<ForwardTrace, GnnError> {
    let n = input.num_nodes();
    if input.features.ncols() != params.dim {
        return Err(GnnError::DimensionMismatch { expected: params.dim, got: input.features.ncols() });
    }
    if target >= n {
        return Err(GnnError::UnknownTarget { target, nodes: n });
    }
    if depth > params.num_layers() {
        return Err(GnnError::TooManyLayers { requested: depth, available: params.num_layers() });
    }
    let adj = &input.adjacency;
    let act = params.activation;
    let mut trace = ForwardTrace {
        target,
        adjacency: adj.clone(),
        inputs: vec![input.features.clone()],
        aggregated: Vec::with_capacity(depth),
        neighbor_means: Vec::with_capacity(depth),
        outputs: Vec::with_capacity(depth),
    };
    for layer in &params.layers[..depth] {
        let h = trace.outputs.last().unwrap_or(&trace.inputs[0]);
        let (agg, mean) = match params.architecture {
            Architecture::Gcn => (gcn_propagate(h, adj), None),
            Architecture::Sage => (h.clone(), Some(neighbor_mean(h, adj))),
            Architecture::Gin => {
                let mut s = neighbor_sum(h, adj);
                s.scaled_add(1.0 + layer.epsilon, h);
                (s, None)
            }
        };
        let mut z = agg.dot(&layer.weight.t());
        if let (Some(m), Some(wn)) = (&mean, &layer.neighbor_weight) {
            z += &m.dot(&wn.t());
        }
        z += &layer.bias;
        z.mapv_inplace(|v| act.apply(v));
        let h_in = h.clone();
        if !trace.outputs.is_empty() {
            trace.inputs.push(h_in);
        }
        trace.aggregated.push(agg);
        trace.neighbor_means.push(mean);
        trace.outputs.push(z);
    }
    Ok(trace)
}

/// Output vector of `target` after all layers.
pub fn forward(
    params: &GnnParameters,
    features: &Array2<f64>,
    edges: &[(usize, usize)],
    target: usize,
) -> Result<EmbeddingVector, GnnError> {
    let input = GraphInput::new(features.clone(), edges)?;
    Ok(forward_trace(params, &input, target, params.num_layers())?.output())
}

/// Reverse-mode gradients of `upstream · output` with respect to every
/// parameter of the layers used by `trace`.
pub fn backward(params: &GnnParameters, trace: &ForwardTrace, upstream: &[f64]) -> Result<Gradients, GnnError> {
    let mut grads = params.zeros_like();
    if trace.outputs.is_empty() {
        return Err(GnnError::MissingActivations);
    }
    if upstream.len() != params.dim {
        return Err(GnnError::GradientShape { expected: params.dim, got: upstream.len() });
    }
    let adj = &trace.adjacency;
    let act = params.activation;
    let n = trace.inputs[0].nrows();
    let mut g = Array2::zeros((n, params.dim));
    g.row_mut(trace.target).assign(&ArrayView1::from(upstream));

    for l in (0..trace.depth()).rev() {
        let layer = &params.layers[l];
        let grad = &mut grads.layers[l];
        let mut dz = g;
        ndarray::Zip::from(&mut dz).and(&trace.outputs[l]).for_each(|d, &y| *d *= act.derivative_from_output(y));
        grad.weight += &dz.t().dot(&trace.aggregated[l]);
        grad.bias += &dz.sum_axis(Axis(0));
        if let (Some(m), Some(gw)) = (&trace.neighbor_means[l], grad.neighbor_weight.as_mut()) {
            *gw += &dz.t().dot(m);
        }
        let h_in = &trace.inputs[l];
        let d_agg = dz.dot(&layer.weight);
        if params.architecture == Architecture::Gin {
            grad.epsilon += (&d_agg * h_in).sum();
        }
        if l == 0 {
            break;
        }
        g = match params.architecture {
            Architecture::Gcn => gcn_propagate(&d_agg, adj),
            Architecture::Sage => {
                let wn = layer.neighbor_weight.as_ref().expect("sage layers carry a neighbor block");
                d_agg + neighbor_mean_transpose(&dz.dot(wn), adj)
            }
            Architecture::Gin => {
                let mut s = neighbor_sum(&d_agg, adj);
                s.scaled_add(1.0 + layer.epsilon, &d_agg);
                s
            }
        };
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn random_input(n: usize, dim: usize, edges: &[(usize, usize)], seed: u64) -> GraphInput {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = Array2::from_shape_simple_fn((n, dim), || rng.random_range(-1.0..1.0));
        GraphInput::new(f, edges).unwrap()
    }

    fn randomize(params: &mut GnnParameters, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        params.for_each_mut(|x| *x = rng.random_range(-0.8..0.8));
    }

    #[test]
    fn init_is_seeded_and_shaped() {
        let a = init_params(Architecture::Gcn, 3, 4, 9);
        assert_eq!(a.layers.len(), 3);
        assert!(a.layers.iter().all(|l| l.weight.dim() == (4, 4) && l.bias.iter().all(|&b| b == 0.0)));
        assert_eq!(a, init_params(Architecture::Gcn, 3, 4, 9));
        assert_ne!(a, init_params(Architecture::Gcn, 3, 4, 10));
        let bound = (6.0f64 / 8.0).sqrt();
        assert!(a.flatten().iter().all(|x| x.abs() <= bound));
        let s = init_params(Architecture::Sage, 2, 4, 9);
        assert!(s.layers.iter().all(|l| l.neighbor_weight.is_some()));
        assert_eq!(init_params(Architecture::Gin, 1, 4, 0).layers[0].epsilon, 0.0);
    }

    #[test]
    fn isolated_node_is_tanh_of_linear_map() {
        let mut p = init_params(Architecture::Gcn, 1, 3, 1);
        p.layers[0].weight = Array2::eye(3) * 0.1;
        let x = [0.5, -1.0, 2.0];
        let input = GraphInput::from_rows(&[&x], &[]).unwrap();
        let out = forward(&p, &input.features, &[], 0).unwrap();
        for i in 0..3 {
            assert!((out[i] - (0.1 * x[i]).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn errors() {
        let p = init_params(Architecture::Gin, 2, 3, 1);
        let input = random_input(2, 3, &[(0, 1)], 0);
        assert!(matches!(forward_trace(&p, &input, 2, 1), Err(GnnError::UnknownTarget { .. })));
        assert!(matches!(forward_trace(&p, &input, 0, 3), Err(GnnError::TooManyLayers { .. })));
        let wrong = random_input(2, 4, &[], 0);
        assert!(matches!(forward_trace(&p, &wrong, 0, 1), Err(GnnError::DimensionMismatch { .. })));
        assert!(matches!(GraphInput::new(Array2::zeros((2, 3)), &[(0, 5)]), Err(GnnError::EdgeOutOfRange(0, 5))));
        let tr = forward_trace(&p, &input, 0, 2).unwrap();
        assert!(matches!(backward(&p, &tr, &[1.0]), Err(GnnError::GradientShape { .. })));
        let empty = forward_trace(&p, &input, 0, 0).unwrap();
        assert!(matches!(backward(&p, &empty, &[0.0; 3]), Err(GnnError::MissingActivations)));
    }

    /// Path 0-1-2-3-4-5 plus a pendant 6 on node 2.
    const EDGES: [(usize, usize); 6] = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (2, 6)];

    fn bfs_ball(n: usize, edges: &[(usize, usize)], v: usize, m: usize) -> BTreeSet<usize> {
        let mut ball = BTreeSet::from([v]);
        for _ in 0..m {
            let grow: Vec<usize> = edges
                .iter()
                .flat_map(|&(a, b)| [(a, b), (b, a)])
                .filter(|(a, _)| ball.contains(a))
                .map(|(_, b)| b)
                .collect();
            ball.extend(grow);
        }
        ball.retain(|&u| u < n);
        ball
    }

    #[test]
    fn gin_identity_support_is_reachability() {
        let n = 7;
        let mut p = init_params(Architecture::Gin, 3, n, 0);
        p.activation = Activation::Identity;
        for l in &mut p.layers {
            l.weight = Array2::eye(n);
        }
        let input = GraphInput::new(Array2::eye(n), &EDGES).unwrap();
        for v in 0..n {
            for m in 1..=3 {
                let out = forward_trace(&p, &input, v, m).unwrap().output();
                let support: BTreeSet<usize> = (0..n).filter(|&u| out[u] != 0.0).collect();
                assert_eq!(support, bfs_ball(n, &EDGES, v, m), "v={v} m={m}");
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let n = 7;
        let perm = [3, 6, 0, 5, 1, 4, 2];
        for arch in [Architecture::Gcn, Architecture::Sage, Architecture::Gin] {
            let mut p = init_params(arch, 2, 4, 5);
            randomize(&mut p, 8);
            let input = random_input(n, 4, &EDGES, 2);
            let mut pf = Array2::zeros((n, 4));
            for i in 0..n {
                pf.row_mut(perm[i]).assign(&input.features.row(i));
            }
            let pe: Vec<(usize, usize)> = EDGES.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
            for v in 0..n {
                let a = forward(&p, &input.features, &EDGES, v).unwrap();
                let b = forward(&p, &pf, &pe, perm[v]).unwrap();
                for (x, y) in a.iter().zip(b.iter()) {
                    assert!((x - y).abs() < 1e-12, "{arch:?}");
                }
            }
        }
    }

    fn objective(p: &GnnParameters, input: &GraphInput, target: usize, depth: usize, w: &[f64]) -> f64 {
        let out = forward_trace(p, input, target, depth).unwrap().output();
        out.iter().zip(w).map(|(a, b)| a * b).sum::<f64>()
    }

    fn max_rel_error(p: &GnnParameters, input: &GraphInput, target: usize, depth: usize, w: &[f64]) -> f64 {
        let trace = forward_trace(p, input, target, depth).unwrap();
        let analytic = backward(p, &trace, w).unwrap().flatten();
        let base = p.flatten();
        let h = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..base.len() {
            let mut q = p.clone();
            let mut v = base.clone();
            v[i] += h;
            q.assign_flat(&v);
            let up = objective(&q, input, target, depth, w);
            v[i] -= 2.0 * h;
            q.assign_flat(&v);
            let down = objective(&q, input, target, depth, w);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-6);
            worst = worst.max(rel);
        }
        worst
    }

    #[test]
    fn gradients_match_finite_differences() {
        let edges = [(0, 1), (1, 2), (2, 3), (0, 3), (3, 4)];
        for arch in [Architecture::Gcn, Architecture::Sage, Architecture::Gin] {
            for seed in 0..3 {
                let mut p = init_params(arch, 2, 4, seed);
                randomize(&mut p, seed + 100);
                let input = random_input(5, 4, &edges, seed + 7);
                let w = [0.3, -1.1, 0.6, 0.9];
                for depth in 1..=2 {
                    let err = max_rel_error(&p, &input, (seed as usize) % 5, depth, &w);
                    assert!(err < 1e-4, "{arch:?} seed {seed} depth {depth}: {err}");
                }
            }
        }
    }

    #[test]
    fn squared_norm_on_isolated_linear_node() {
        // loss = |W x|^2 / 2, so dL/dW = (W x) x^T.
        let mut p = init_params(Architecture::Gcn, 1, 3, 4);
        p.activation = Activation::Identity;
        let x = [0.2, -0.7, 1.3];
        let input = GraphInput::from_rows(&[&x], &[]).unwrap();
        let trace = forward_trace(&p, &input, 0, 1).unwrap();
        let y = trace.output();
        let g = backward(&p, &trace, &y).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!((g.layers[0].weight[[r, c]] - y[r] * x[c]).abs() < 1e-12);
            }
        }
        let h = 1e-6;
        let base = p.flatten();
        let loss = |q: &GnnParameters| {
            forward_trace(q, &input, 0, 1).unwrap().output().iter().map(|v| v * v).sum::<f64>() / 2.0
        };
        for i in 0..9 {
            let mut q = p.clone();
            let mut v = base.clone();
            v[i] += h;
            q.assign_flat(&v);
            let up = loss(&q);
            v[i] -= 2.0 * h;
            q.assign_flat(&v);
            let fd = (up - loss(&q)) / (2.0 * h);
            assert!((fd - g.flatten()[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let p = init_params(Architecture::Sage, 2, 4, 3);
        let input = random_input(5, 4, &EDGES[..4], 1);
        let trace = forward_trace(&p, &input, 1, 2).unwrap();
        assert!(backward(&p, &trace, &[0.0; 4]).unwrap().is_zero());
    }

    #[test]
    fn flatten_round_trip() {
        let mut p = init_params(Architecture::Gin, 2, 3, 3);
        let mut v = p.flatten();
        assert_eq!(v.len(), p.num_scalars());
        assert_eq!(v.len(), 2 * (9 + 3 + 1));
        v.iter_mut().for_each(|x| *x += 1.0);
        p.assign_flat(&v);
        assert_eq!(p.flatten(), v);
    }
}
