//! Time-expanded graph construction and the exact min-cost flow engine
//! underneath every planning objective.

mod decompose;
mod expand;
mod graph;
mod solver;

pub use decompose::{decompose_period_paths, FlowPath, PathEntry};
pub use expand::{expand, expand_with_carries, ExpandError};
pub use graph::{Edge, EdgeTag, FlowAssignment, TimeExpandedGraph, VertexTag};
pub use solver::{min_cost_flow, residual_optimality_check, FlowError};

/// Quantities below this are treated as zero flow.
pub const FLOW_EPS: f64 = 1e-9;
