use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node ids must be dense: expected {expected}, found {found}")]
    NonDenseIds { expected: NodeId, found: NodeId },
    #[error("node {node} has label index {label} outside the label vocabulary")]
    UnknownLabelIndex { node: NodeId, label: usize },
    #[error("{labels} labels given for {nodes} nodes")]
    LabelCount { nodes: usize, labels: usize },
    #[error("invalid ego-graph: {0}")]
    InvalidEgo(String),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{file} line {line}: {reason}")]
    Malformed { file: &'static str, line: usize, reason: String },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("edge references unknown node id {id} (line {line})")]
    UnknownNode { id: NodeId, line: usize },
    #[error("node ids are not contiguous: missing id {0}")]
    MissingNode(NodeId),
    #[error("node {node} has label {label:?} not present in the label vocabulary")]
    UnknownLabel { node: NodeId, label: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DocumentError {
    #[error("line {line}: malformed section header {text:?}")]
    MalformedHeader { line: usize, text: String },
    #[error("line {line}: section {number} breaks child numbering")]
    NonContiguous { line: usize, number: String },
    #[error("line {line}: reference to unknown section {target}")]
    UnknownTarget { line: usize, target: String },
    #[error("line {line}: reference to section {target} which does not precede it")]
    ForwardReference { line: usize, target: String },
    #[error("line {line}: reference to {target} duplicates an existing edge")]
    DuplicateReference { line: usize, target: String },
    #[error("document has no sections")]
    Empty,
    #[error("node {0} has no section in the document")]
    MissingSection(NodeId),
}

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("response carried {got} embeddings for {expected} inputs")]
    PartialResponse { expected: usize, got: usize },
    #[error("request failed after {attempts} attempts: {message}")]
    Network { attempts: usize, message: String },
    #[error("malformed response: {0}")]
    BadResponse(String),
    #[error("embedding contains non-finite values")]
    NonFinite,
    #[error("cache file {path}: {reason}")]
    CorruptCache { path: String, reason: String },
    #[error("invalid provider descriptor: {0}")]
    Descriptor(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum GnnError {
    #[error("feature dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target {target} is outside the {nodes}-node input")]
    UnknownTarget { target: usize, nodes: usize },
    #[error("edge ({0}, {1}) references a node outside the input")]
    EdgeOutOfRange(usize, usize),
    #[error("requested {requested} layers but the model has {available}")]
    TooManyLayers { requested: usize, available: usize },
    #[error("backward requires retained activations")]
    MissingActivations,
    #[error("upstream gradient has dimension {got}, expected {expected}")]
    GradientShape { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("checkpoint payload does not match header: {0}")]
    Payload(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite loss at step {step}: positive={positive} negative={negative}")]
    NonFiniteLoss { step: usize, positive: f64, negative: f64 },
    #[error("batch is missing view ({k}, {l}) for node {node}")]
    MissingView { node: NodeId, k: usize, l: usize },
    #[error("views in a batch disagree on the maximum order")]
    InconsistentOrder,
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("label set is empty")]
    NoLabels,
    #[error("support set is empty")]
    EmptySupport,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("incompatible checkpoint: {0}")]
    IncompatibleCheckpoint(String),
    #[error("node {0} has no ground-truth label")]
    MissingLabel(NodeId),
    #[error("non-finite loss during adapter fitting at epoch {0}")]
    NonFiniteLoss(usize),
    #[error("invalid split: {0}")]
    Split(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
}
