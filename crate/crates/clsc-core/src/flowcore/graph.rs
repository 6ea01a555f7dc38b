//! The time-expanded graph: vertices per (node, period) with an in/out
//! capacity split, plus super-source/sink and demand plumbing.

use alloc::vec::Vec;

use super::FLOW_EPS;

/// Role of a vertex; node and product references are indices into the
/// originating problem.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexTag {
    Source,
    Sink,
    NodeIn { node: usize, period: usize },
    NodeOut { node: usize, period: usize },
    /// Delivered units of one demand entry before consumption or return.
    DeliveryPoint { customer: usize, product: usize, period: usize },
    /// Pool of returned units at a customer, shared across products.
    ReturnPool { customer: usize, period: usize },
    /// Entry gate of an end-of-life facility carrying its yield budget.
    EolEntry { node: usize, period: usize },
}

/// Role of an edge. Every edge belongs to exactly one period except the
/// source-to-sink slack.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeTag {
    /// Super-source into a supplier.
    SourceSupply { node: usize, period: usize },
    /// Node throughput within the nominal upper bound.
    NodeNominal { node: usize, period: usize },
    /// Node throughput drawn from the volume buffer, priced at the
    /// expansion cost on top of processing.
    NodeExpansion { node: usize, period: usize },
    /// Traversal of a network arc. Loop-closing arcs start in `period`
    /// and land in `period + 1`.
    ArcTraverse { arc: usize, period: usize },
    /// Delivery against one demand entry; carries the negated unit profit.
    Delivery { customer: usize, product: usize, period: usize },
    /// Delivered units leaving the system.
    Consume { customer: usize, product: usize, period: usize },
    /// Entry of returned units into the reverse chain, capped by the
    /// return fraction of the demand entry.
    Gate { customer: usize, product: usize, period: usize },
    /// Yield-scaled admission budget of an end-of-life facility: total
    /// remanufacturing, recycling or disposal per period is bounded by
    /// the yield-weighted return stream.
    EolBudget { node: usize, period: usize },
    /// Disposal site exit to the sink.
    DisposalExit { node: usize, period: usize },
    /// Unused carried-over input idling at its arrival node.
    CarrySlack { node: usize },
    /// Source-to-sink slack closing the balance for unserved demand.
    Null,
}

impl EdgeTag {
    /// The period an edge belongs to; `None` for the slack edge.
    pub fn period(&self) -> Option<usize> {
        match *self {
            EdgeTag::SourceSupply { period, .. }
            | EdgeTag::NodeNominal { period, .. }
            | EdgeTag::NodeExpansion { period, .. }
            | EdgeTag::ArcTraverse { period, .. }
            | EdgeTag::Delivery { period, .. }
            | EdgeTag::Consume { period, .. }
            | EdgeTag::Gate { period, .. }
            | EdgeTag::EolBudget { period, .. }
            | EdgeTag::DisposalExit { period, .. } => Some(period),
            EdgeTag::CarrySlack { .. } => Some(0),
            EdgeTag::Null => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub capacity: f64,
    pub cost: f64,
    pub time: f64,
    pub tag: EdgeTag,
}

/// A multi-period flow network with signed vertex supplies.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeExpandedGraph {
    vertex_tags: Vec<VertexTag>,
    edges: Vec<Edge>,
    supplies: Vec<f64>,
}

impl TimeExpandedGraph {
    pub fn new() -> Self {
        TimeExpandedGraph {
            vertex_tags: Vec::new(),
            edges: Vec::new(),
            supplies: Vec::new(),
        }
    }

    pub fn add_vertex(&mut self, tag: VertexTag) -> usize {
        self.vertex_tags.push(tag);
        self.supplies.push(0.0);
        self.vertex_tags.len() - 1
    }

    pub fn add_edge(
        &mut self,
        tail: usize,
        head: usize,
        capacity: f64,
        cost: f64,
        time: f64,
        tag: EdgeTag,
    ) -> usize {
        debug_assert!(tail != head, "self-loop edge");
        debug_assert!(capacity >= 0.0);
        self.edges.push(Edge {
            tail,
            head,
            capacity,
            cost,
            time,
            tag,
        });
        self.edges.len() - 1
    }

    pub fn add_supply(&mut self, vertex: usize, amount: f64) {
        self.supplies[vertex] += amount;
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_tags.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn supplies(&self) -> &[f64] {
        &self.supplies
    }

    pub fn vertex_tag(&self, v: usize) -> VertexTag {
        self.vertex_tags[v]
    }

    /// Number of distinct (node, period) pairs among the vertices.
    pub fn node_period_count(&self) -> usize {
        let mut pairs: alloc::collections::BTreeSet<(usize, usize)> =
            alloc::collections::BTreeSet::new();
        for tag in &self.vertex_tags {
            match *tag {
                VertexTag::NodeIn { node, period } | VertexTag::NodeOut { node, period } => {
                    pairs.insert((node, period));
                }
                _ => {}
            }
        }
        pairs.len()
    }

    /// A graph clone with every edge cost replaced by `f(edge)`; used by
    /// planners to re-cost the same structure per objective.
    pub fn with_costs(&self, mut f: impl FnMut(&Edge) -> f64) -> TimeExpandedGraph {
        let mut g = self.clone();
        for edge in &mut g.edges {
            edge.cost = f(edge);
        }
        g
    }

    /// Sum of positive supplies (equals total routable quantity).
    pub fn total_supply(&self) -> f64 {
        self.supplies.iter().filter(|s| **s > 0.0).sum()
    }
}

impl Default for TimeExpandedGraph {
    fn default() -> Self {
        Self::new()
    }
}

/// A feasible flow with its cost and time accumulators.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowAssignment {
    /// Flow per edge, indexed like `TimeExpandedGraph::edges`.
    pub flow: Vec<f64>,
    pub total_cost: f64,
    pub total_time: f64,
}

impl FlowAssignment {
    /// Recompute cost and time from the raw flow in edge-id order.
    pub fn recompute(graph: &TimeExpandedGraph, flow: Vec<f64>) -> FlowAssignment {
        let mut total_cost = 0.0;
        let mut total_time = 0.0;
        for (edge, f) in graph.edges().iter().zip(flow.iter()) {
            total_cost += edge.cost * f;
            total_time += edge.time * f;
        }
        FlowAssignment {
            flow,
            total_cost,
            total_time,
        }
    }

    /// Max conservation violation over all vertices: |inflow + supply - outflow|.
    pub fn conservation_gap(&self, graph: &TimeExpandedGraph) -> f64 {
        let mut balance: Vec<f64> = graph.supplies().to_vec();
        for (edge, f) in graph.edges().iter().zip(self.flow.iter()) {
            balance[edge.tail] -= f;
            balance[edge.head] += f;
        }
        balance.iter().fold(0.0f64, |acc, b| acc.max(b.abs()))
    }

    /// True when every edge flow lies within [0, capacity] up to FLOW_EPS.
    pub fn within_capacity(&self, graph: &TimeExpandedGraph) -> bool {
        graph
            .edges()
            .iter()
            .zip(self.flow.iter())
            .all(|(e, f)| *f >= -FLOW_EPS && *f <= e.capacity + FLOW_EPS)
    }
}
