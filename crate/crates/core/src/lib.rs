//! Topology-preserving graph coarsening.
//!
//! Dominated nodes and edges are collapsed and neighborhood coning removes
//! further nodes, all without changing the homotopy type of the clique
//! complex. When a target size demands more, r-relaxed strong collapse trades
//! that guarantee for reach. The [`oracle`] module supplies brute-force
//! references (Betti numbers, dominance scans, distances) for checking it.

pub mod collapse;
pub mod coning;
pub mod generate;
pub mod graph;
pub mod io;
pub mod oracle;
pub mod pipeline;

pub use collapse::{find_edge_dominator, find_node_dominator, Move, MoveObserver};
pub use graph::{AttributedData, GraphError, NodeId, SupernodeMap, WorkingGraph};
pub use pipeline::{coarsen, CoarseningConfig, CoarseningReport, CoarseningResult, PipelineError};
