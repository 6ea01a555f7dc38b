//! Deterministic per-period path decomposition of a flow.
//!
//! Every period's subflow is peeled into source-to-exit paths: entries are
//! virgin supply, loop-arc arrivals from the previous period, or injected
//! carries; exits are consumption, disposal, idle carry slack, or a
//! loop-closing arc into the next period. Zero-cost cycles are removed and
//! dropped. The peel order is fixed (edge ids ascending), so the result is
//! reproducible.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::graph::{EdgeTag, FlowAssignment, TimeExpandedGraph, VertexTag};

const PEEL_EPS: f64 = 1e-9;

/// Where a period path takes its flow from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathEntry {
    /// Virgin input from the super-source.
    Source,
    /// Recovered input arriving over a loop-closing arc traversed in the
    /// previous period.
    LoopIn { arc: usize },
    /// In-flight carry injected at this node for local period 0.
    Carry { node: usize },
}

/// One unit-commodity path within a single period.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowPath {
    pub period: usize,
    pub entry: PathEntry,
    /// Edge ids in traversal order (the source-supply edge included for
    /// virgin paths).
    pub edges: Vec<u32>,
    pub quantity: f64,
}

struct Peeler<'a> {
    graph: &'a TimeExpandedGraph,
    remaining: Vec<f64>,
    /// Outgoing non-slack edges per vertex, ascending edge id.
    out_edges: Vec<Vec<u32>>,
}

enum WalkExit {
    Sink,
    Loop { arc: usize, head: usize },
}

impl<'a> Peeler<'a> {
    fn new(graph: &'a TimeExpandedGraph, flow: &FlowAssignment) -> Self {
        let mut out_edges = alloc::vec![Vec::new(); graph.vertex_count()];
        for (i, edge) in graph.edges().iter().enumerate() {
            if edge.tag != EdgeTag::Null {
                out_edges[edge.tail].push(i as u32);
            }
        }
        Peeler {
            graph,
            remaining: flow.flow.clone(),
            out_edges,
        }
    }

    fn next_edge(&self, vertex: usize, period: usize) -> Option<u32> {
        self.out_edges[vertex]
            .iter()
            .copied()
            .find(|e| {
                self.remaining[*e as usize] > PEEL_EPS
                    && self.graph.edges()[*e as usize].tag.period() == Some(period)
            })
    }

    /// Walks from `start` until the sink or a loop-arc exit, removing any
    /// cycles encountered. Returns the walked edges and the exit kind, or
    /// `None` on a dead end (conservation rules one out; defensive only).
    fn walk(&mut self, start: usize, period: usize) -> Option<(Vec<u32>, WalkExit)> {
        'restart: loop {
            let mut edges: Vec<u32> = Vec::new();
            let mut trail: Vec<usize> = alloc::vec![start];
            let mut vertex = start;
            loop {
                if matches!(self.graph.vertex_tag(vertex), VertexTag::Sink) {
                    return Some((edges, WalkExit::Sink));
                }
                let edge_id = self.next_edge(vertex, period)?;
                let edge = &self.graph.edges()[edge_id as usize];
                // A loop-closing arc lands in the next period: exit.
                if let EdgeTag::ArcTraverse { arc, .. } = edge.tag {
                    if let VertexTag::NodeIn { period: head_period, .. } =
                        self.graph.vertex_tag(edge.head)
                    {
                        if head_period > period {
                            edges.push(edge_id);
                            return Some((
                                edges,
                                WalkExit::Loop {
                                    arc,
                                    head: edge.head,
                                },
                            ));
                        }
                    }
                }
                edges.push(edge_id);
                vertex = edge.head;
                if let Some(pos) = trail.iter().position(|v| *v == vertex) {
                    // Cycle: drop it from the flow and start over.
                    let cycle = &edges[pos..];
                    let bottleneck = cycle
                        .iter()
                        .map(|e| self.remaining[*e as usize])
                        .fold(f64::INFINITY, f64::min);
                    for e in cycle {
                        self.remaining[*e as usize] -= bottleneck;
                    }
                    continue 'restart;
                }
                trail.push(vertex);
            }
        }
    }

    fn peel_entry(
        &mut self,
        period: usize,
        entry: PathEntry,
        start: usize,
        mut budget: f64,
        prefix: Option<u32>,
        paths: &mut Vec<FlowPath>,
        pending: &mut BTreeMap<usize, (usize, f64)>,
    ) {
        while budget > PEEL_EPS {
            let Some((edges, exit)) = self.walk(start, period) else {
                break;
            };
            let mut all_edges = Vec::with_capacity(edges.len() + 1);
            if let Some(p) = prefix {
                all_edges.push(p);
            }
            all_edges.extend(edges);
            let mut qty = budget;
            for e in &all_edges {
                qty = qty.min(self.remaining[*e as usize]);
            }
            if qty <= PEEL_EPS {
                break;
            }
            for e in &all_edges {
                self.remaining[*e as usize] -= qty;
            }
            budget -= qty;
            if let WalkExit::Loop { arc, head } = exit {
                let slot = pending.entry(arc).or_insert((head, 0.0));
                slot.1 += qty;
            }
            paths.push(FlowPath {
                period,
                entry,
                edges: all_edges,
                quantity: qty,
            });
        }
    }
}

/// Splits a flow into per-period paths (cycles dropped, slack ignored).
pub fn decompose_period_paths(
    graph: &TimeExpandedGraph,
    flow: &FlowAssignment,
) -> Vec<FlowPath> {
    let horizon = graph
        .edges()
        .iter()
        .filter_map(|e| e.tag.period())
        .max()
        .map_or(0, |p| p + 1);

    let mut peeler = Peeler::new(graph, flow);
    let mut paths: Vec<FlowPath> = Vec::new();
    // Loop-arc arrivals waiting for the next period: arc -> (head vertex, qty).
    let mut pending: BTreeMap<usize, (usize, f64)> = BTreeMap::new();

    for period in 0..horizon {
        let arrivals = core::mem::take(&mut pending);

        // Virgin entries: source-supply edges of this period, id order.
        for (i, edge) in graph.edges().iter().enumerate() {
            if let EdgeTag::SourceSupply { .. } = edge.tag {
                if edge.tag.period() == Some(period) {
                    let budget = peeler.remaining[i];
                    if budget > PEEL_EPS {
                        peeler.remaining[i] = budget; // consumed via prefix min
                        peeler.peel_entry(
                            period,
                            PathEntry::Source,
                            edge.head,
                            budget,
                            Some(i as u32),
                            &mut paths,
                            &mut pending,
                        );
                    }
                }
            }
        }

        // Recovered input arriving over loop arcs, arc-id order.
        for (arc, (head, qty)) in arrivals {
            peeler.peel_entry(
                period,
                PathEntry::LoopIn { arc },
                head,
                qty,
                None,
                &mut paths,
                &mut pending,
            );
        }

        // Injected carries live at NodeIn vertices of local period 0.
        if period == 0 {
            for v in 0..graph.vertex_count() {
                if let VertexTag::NodeIn { node, period: 0 } = graph.vertex_tag(v) {
                    let supply = graph.supplies()[v];
                    if supply > PEEL_EPS {
                        peeler.peel_entry(
                            0,
                            PathEntry::Carry { node },
                            v,
                            supply,
                            None,
                            &mut paths,
                            &mut pending,
                        );
                    }
                }
            }
        }
    }

    paths
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowcore::graph::EdgeTag;
    use crate::flowcore::{expand, min_cost_flow};
    use crate::netmodel::tests_support::one_route_problem;

    #[test]
    fn single_route_decomposes_into_one_path_per_period() {
        let problem = one_route_problem(2, 5.0, 2.0, 10.0, 100.0);
        let graph = expand(&problem).unwrap();
        let flow = min_cost_flow(&graph).unwrap();
        let paths = decompose_period_paths(&graph, &flow);
        assert_eq!(paths.len(), 2);
        for (t, path) in paths.iter().enumerate() {
            assert_eq!(path.period, t);
            assert_eq!(path.entry, PathEntry::Source);
            assert!((path.quantity - 10.0).abs() < 1e-9);
            // Path must cross exactly one delivery edge and end consuming.
            let tags: Vec<EdgeTag> = path
                .edges
                .iter()
                .map(|e| graph.edges()[*e as usize].tag)
                .collect();
            assert_eq!(
                tags.iter()
                    .filter(|t| matches!(t, EdgeTag::Delivery { .. }))
                    .count(),
                1
            );
            assert!(matches!(tags.last(), Some(EdgeTag::Consume { .. })));
        }
    }

    #[test]
    fn peeled_quantities_match_edge_flows() {
        let problem = one_route_problem(3, 5.0, 2.0, 7.0, 100.0);
        let graph = expand(&problem).unwrap();
        let flow = min_cost_flow(&graph).unwrap();
        let paths = decompose_period_paths(&graph, &flow);
        let mut reconstructed = alloc::vec![0.0f64; graph.edges().len()];
        for path in &paths {
            for e in &path.edges {
                reconstructed[*e as usize] += path.quantity;
            }
        }
        for (i, edge) in graph.edges().iter().enumerate() {
            if edge.tag == EdgeTag::Null {
                continue;
            }
            assert!(
                (reconstructed[i] - flow.flow[i]).abs() < 1e-6,
                "edge {i} ({:?}): peeled {} vs flow {}",
                edge.tag,
                reconstructed[i],
                flow.flow[i]
            );
        }
    }
}
