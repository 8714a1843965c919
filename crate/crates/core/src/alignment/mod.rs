//! Multi-order text/graph views and their contrastive alignment.
//!
//! For a node `v` and order `k`, the text view `h_k(v)` embeds the rendered
//! `k`-hop document. The graph view `b^l_k(v)` runs the first `k - l` GNN
//! layers over the `(k - l)`-hop neighborhood of `v`, using the order-`l`
//! text views as node features, so both views see exactly the `k`-hop
//! neighborhood.

mod loss;
mod optim;
mod train;
mod views;

pub use loss::{negative_loss, positive_loss, total_loss, total_loss_over, LossReport, PairLoss};
pub use optim::{OptimizerKind, OptimizerState};
pub use train::{loss_and_gradients, train, LossRecord, TrainConfig, TrainOutcome};
pub use views::{build_views, local_input, view_pairs, TofgMode, TofgStore, ViewConfig, ViewEmbeddingSet};
