//! Self-supervised representation learning for text-attributed graphs by
//! aligning text views and graph views of node neighborhoods.
//!
//! A node's k-hop neighborhood is written out as a hierarchical document
//! ([`document`]) and embedded by a text encoder ([`embed`]); in parallel, a
//! message-passing network ([`gnn`]) aggregates lower-order document
//! embeddings over the graph. [`alignment`] trains the network so the two
//! views agree, and [`inference`] uses the aligned embeddings for zero- and
//! few-shot node classification.

pub mod alignment;
pub mod bench;
pub mod checkpoint;
pub mod dataset;
pub mod document;
pub mod embed;
pub mod error;
pub mod gnn;
pub mod graph;
pub mod inference;
pub mod par;
pub mod toy;
pub mod walks;

pub use error::{DatasetError, DocumentError, EmbedError, GraphError};
pub use graph::{EgoGraph, NodeId, NodeRecord, TextAttributedGraph};
pub use par::Execution;
