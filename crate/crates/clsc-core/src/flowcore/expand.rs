//! Expansion of a planning problem into its time-expanded flow graph.
//!
//! One conceptual vertex per (node, period), realised as an in/out pair
//! whose connecting edges carry the node capacity: a nominal edge at
//! processing cost and a parallel buffer edge priced with the expansion
//! cost. Demand becomes per-entry delivery edges carrying the negated
//! unit profit. Return streams hang off the delivery point, capped by the
//! return fraction per entry, and each end-of-life facility admits at
//! most the yield-weighted return stream of the period through a budget
//! edge at its entrance. Loop-closing arcs land one period later, which
//! is how recovered input re-enters the forward chain.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::netmodel::{validate_network, Direction, NodeKind, PlanningProblem, ValidationReport};

use super::graph::{EdgeTag, TimeExpandedGraph, VertexTag};
use super::FLOW_EPS;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ExpandError {
    #[error("problem fails validation with {} issue(s)", .0.issues.len())]
    InvalidProblem(ValidationReport),
}

/// Expands a validated problem; carries are quantities already travelling
/// on loop-closing arcs (keyed by arc index) that arrive at local period 0.
pub fn expand_with_carries(
    problem: &PlanningProblem,
    carries: &BTreeMap<usize, f64>,
) -> Result<TimeExpandedGraph, ExpandError> {
    let report = validate_network(problem);
    if !report.is_ok() {
        return Err(ExpandError::InvalidProblem(report));
    }

    let net = &problem.network;
    let horizon = problem.horizon;
    let n_nodes = net.nodes.len();

    // Demand entries within the horizon, in table order.
    struct Entry {
        customer: usize,
        product: usize,
        period: usize,
        quantity: f64,
    }
    let mut entries: Vec<Entry> = Vec::new();
    for (key, qty) in &problem.demand {
        if key.period >= horizon || *qty <= FLOW_EPS {
            continue;
        }
        entries.push(Entry {
            customer: net.node_index(&key.customer).expect("validated customer"),
            product: problem.product_index(&key.product).expect("validated product"),
            period: key.period,
            quantity: *qty,
        });
    }
    let total_demand: f64 = entries.iter().map(|e| e.quantity).sum();

    let mut graph = TimeExpandedGraph::new();
    let source = graph.add_vertex(VertexTag::Source);
    let sink = graph.add_vertex(VertexTag::Sink);

    let mut node_in = alloc::vec![alloc::vec![0usize; n_nodes]; horizon];
    let mut node_out = alloc::vec![alloc::vec![0usize; n_nodes]; horizon];
    for (t, (ins, outs)) in node_in.iter_mut().zip(node_out.iter_mut()).enumerate() {
        for n in 0..n_nodes {
            ins[n] = graph.add_vertex(VertexTag::NodeIn { node: n, period: t });
            outs[n] = graph.add_vertex(VertexTag::NodeOut { node: n, period: t });
        }
    }

    let customer_has_reverse: Vec<bool> = net
        .nodes
        .iter()
        .map(|n| {
            n.kind == NodeKind::Customer
                && net
                    .arcs
                    .iter()
                    .any(|a| a.direction == Direction::Reverse && a.from == n.id)
        })
        .collect();
    let any_reverse = net.arcs.iter().any(|a| a.direction == Direction::Reverse);

    // Return pools per (customer, period), created on demand.
    let mut pools: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    // Budgeted entry vertex per (facility, period).
    let mut eol_entries: BTreeMap<(usize, usize), usize> = BTreeMap::new();

    for t in 0..horizon {
        // Yield-weighted admission budgets of this period's return stream.
        let mut reman_budget = 0.0;
        let mut recycle_budget = 0.0;
        let mut disposal_budget = 0.0;
        for entry in entries.iter().filter(|e| e.period == t) {
            let product = &problem.products[entry.product];
            let returnable = product.return_fraction * entry.quantity;
            reman_budget += product.remanufacture_yield * returnable;
            recycle_budget += product.recycle_yield * returnable;
            disposal_budget += product.disposal_fraction * returnable;
        }
        // Node capacity lanes.
        for (n, node) in net.nodes.iter().enumerate() {
            let cap = &node.capacity;
            graph.add_edge(
                node_in[t][n],
                node_out[t][n],
                cap.nominal_upper_bound,
                node.unit_process_cost,
                node.unit_process_time,
                EdgeTag::NodeNominal { node: n, period: t },
            );
            if cap.buffer() > FLOW_EPS {
                graph.add_edge(
                    node_in[t][n],
                    node_out[t][n],
                    cap.buffer(),
                    node.unit_process_cost + cap.expansion_cost,
                    node.unit_process_time,
                    EdgeTag::NodeExpansion { node: n, period: t },
                );
            }
        }

        // Virgin input enters at suppliers.
        for (n, node) in net.nodes.iter().enumerate() {
            if node.kind == NodeKind::Supplier {
                graph.add_edge(
                    source,
                    node_in[t][n],
                    total_demand,
                    0.0,
                    0.0,
                    EdgeTag::SourceSupply { node: n, period: t },
                );
            }
        }

        // Demand plumbing for this period.
        for entry in entries.iter().filter(|e| e.period == t) {
            let product = &problem.products[entry.product];
            let delivery_point = graph.add_vertex(VertexTag::DeliveryPoint {
                customer: entry.customer,
                product: entry.product,
                period: t,
            });
            graph.add_edge(
                node_out[t][entry.customer],
                delivery_point,
                entry.quantity,
                -product.unit_profit,
                0.0,
                EdgeTag::Delivery {
                    customer: entry.customer,
                    product: entry.product,
                    period: t,
                },
            );
            graph.add_edge(
                delivery_point,
                sink,
                entry.quantity,
                0.0,
                0.0,
                EdgeTag::Consume {
                    customer: entry.customer,
                    product: entry.product,
                    period: t,
                },
            );

            let returnable = product.return_fraction * entry.quantity;
            if returnable > FLOW_EPS && customer_has_reverse[entry.customer] {
                let pool = *pools.entry((entry.customer, t)).or_insert_with(|| {
                    graph.add_vertex(VertexTag::ReturnPool {
                        customer: entry.customer,
                        period: t,
                    })
                });
                graph.add_edge(
                    delivery_point,
                    pool,
                    returnable,
                    0.0,
                    0.0,
                    EdgeTag::Gate {
                        customer: entry.customer,
                        product: entry.product,
                        period: t,
                    },
                );
            }
        }

        // Facility admission budgets: what the period's return stream can
        // yield per end-of-life route.
        for (n, node) in net.nodes.iter().enumerate() {
            let budget = match node.kind {
                NodeKind::Remanufacturer => reman_budget,
                NodeKind::Recycler => recycle_budget,
                NodeKind::DisposalSite => disposal_budget,
                _ => continue,
            };
            if budget <= FLOW_EPS {
                continue;
            }
            let entry_vertex = graph.add_vertex(VertexTag::EolEntry { node: n, period: t });
            eol_entries.insert((n, t), entry_vertex);
            graph.add_edge(
                entry_vertex,
                node_in[t][n],
                budget,
                0.0,
                0.0,
                EdgeTag::EolBudget { node: n, period: t },
            );
        }

        // Arc traversals. Loop-closing arcs bridge into the next period;
        // reverse arcs leaving a customer start at its return pool.
        for (a, arc) in net.arcs.iter().enumerate() {
            let from = net.node_index(&arc.from).expect("validated arc");
            let to = net.node_index(&arc.to).expect("validated arc");
            let loop_closing = net.is_loop_closing(arc);
            if loop_closing && t + 1 >= horizon {
                continue;
            }
            let tail = if arc.direction == Direction::Reverse
                && net.nodes[from].kind == NodeKind::Customer
            {
                match pools.get(&(from, t)) {
                    Some(pool) => *pool,
                    None => continue, // no returns at this customer and period
                }
            } else {
                node_out[t][from]
            };
            let head_period = if loop_closing { t + 1 } else { t };
            // Arcs into an end-of-life facility pass its admission budget.
            let head = match eol_entries.get(&(to, head_period)) {
                Some(entry_vertex) => *entry_vertex,
                None => {
                    if matches!(
                        net.nodes[to].kind,
                        NodeKind::Remanufacturer | NodeKind::Recycler | NodeKind::DisposalSite
                    ) {
                        continue; // zero budget: the facility admits nothing
                    }
                    node_in[head_period][to]
                }
            };
            graph.add_edge(
                tail,
                head,
                arc.capacity,
                arc.unit_transport_cost,
                arc.unit_transport_time,
                EdgeTag::ArcTraverse { arc: a, period: t },
            );
        }

        // Disposal sites drain to the sink.
        if any_reverse {
            for (n, node) in net.nodes.iter().enumerate() {
                if node.kind == NodeKind::DisposalSite {
                    graph.add_edge(
                        node_out[t][n],
                        sink,
                        total_demand,
                        0.0,
                        0.0,
                        EdgeTag::DisposalExit { node: n, period: t },
                    );
                }
            }
        }
    }

    // In-flight carries arrive at the head of their loop arc in period 0.
    let mut total_carry = 0.0;
    for (arc_idx, qty) in carries {
        if *qty <= FLOW_EPS {
            continue;
        }
        let arc = &net.arcs[*arc_idx];
        let to = net.node_index(&arc.to).expect("carry arc head");
        graph.add_supply(node_in[0][to], *qty);
        graph.add_edge(
            node_in[0][to],
            sink,
            *qty,
            0.0,
            0.0,
            EdgeTag::CarrySlack { node: to },
        );
        total_carry += qty;
    }

    // Slack for unserved demand, and the global balance.
    graph.add_edge(source, sink, total_demand, 0.0, 0.0, EdgeTag::Null);
    graph.add_supply(source, total_demand);
    graph.add_supply(sink, -total_demand - total_carry);

    Ok(graph)
}

/// Expansion without carried-over in-flight quantities.
pub fn expand(problem: &PlanningProblem) -> Result<TimeExpandedGraph, ExpandError> {
    expand_with_carries(problem, &BTreeMap::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flexctl::{BufferThresholds, TriggerPolicy};
    use crate::netmodel::{
        Arc, CapacitySpec, DemandKey, Network, Node, PlanningProblem, Product,
    };
    use alloc::vec;

    fn one_arc_problem(horizon: usize) -> PlanningProblem {
        let network = Network {
            nodes: vec![
                Node {
                    id: "s1".into(),
                    kind: NodeKind::Supplier,
                    capacity: CapacitySpec {
                        nominal_upper_bound: 100.0,
                        maximal: 120.0,
                        expansion_cost: 1.0,
                    },
                    unit_process_cost: 1.0,
                    unit_process_time: 1.0,
                },
                Node {
                    id: "c1".into(),
                    kind: NodeKind::Customer,
                    capacity: CapacitySpec {
                        nominal_upper_bound: 100.0,
                        maximal: 100.0,
                        expansion_cost: 0.0,
                    },
                    unit_process_cost: 0.0,
                    unit_process_time: 0.0,
                },
            ],
            arcs: vec![Arc {
                from: "s1".into(),
                to: "c1".into(),
                channel: "primary".into(),
                direction: Direction::Forward,
                unit_transport_cost: 1.0,
                unit_transport_time: 1.0,
                capacity: 100.0,
            }],
        };
        let mut demand = alloc::collections::BTreeMap::new();
        for t in 0..horizon {
            demand.insert(
                DemandKey {
                    customer: "c1".into(),
                    product: "p".into(),
                    period: t,
                },
                10.0,
            );
        }
        PlanningProblem {
            network,
            products: vec![Product {
                id: "p".into(),
                unit_profit: 5.0,
                return_fraction: 0.0,
                remanufacture_yield: 1.0,
                recycle_yield: 0.0,
                disposal_fraction: 0.0,
            }],
            demand,
            horizon,
            thresholds: BufferThresholds::permissive(TriggerPolicy::HorizonOnly),
            allow_shortfall: false,
        }
    }

    #[test]
    fn two_period_expansion_counts() {
        let graph = expand(&one_arc_problem(2)).unwrap();
        assert_eq!(graph.node_period_count(), 4);
        let deliveries = graph
            .edges()
            .iter()
            .filter(|e| matches!(e.tag, EdgeTag::Delivery { .. }))
            .count();
        assert_eq!(deliveries, 2);
        // Supplies balance once the slack edge is in place.
        let total: f64 = graph.supplies().iter().sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn buffer_yields_two_parallel_internal_edges() {
        let graph = expand(&one_arc_problem(1)).unwrap();
        let lanes: Vec<&super::super::graph::Edge> = graph
            .edges()
            .iter()
            .filter(|e| {
                matches!(
                    e.tag,
                    EdgeTag::NodeNominal { node: 0, .. } | EdgeTag::NodeExpansion { node: 0, .. }
                )
            })
            .collect();
        assert_eq!(lanes.len(), 2);
        assert_eq!(lanes[0].capacity, 100.0);
        assert_eq!(lanes[1].capacity, 20.0);
        assert_eq!(lanes[1].cost, lanes[0].cost + 1.0);
    }

    #[test]
    fn zero_return_fraction_emits_no_reverse_edges() {
        let graph = expand(&one_arc_problem(1)).unwrap();
        assert!(!graph.edges().iter().any(|e| matches!(
            e.tag,
            EdgeTag::Gate { .. } | EdgeTag::EolBudget { .. } | EdgeTag::DisposalExit { .. }
        )));
    }

    #[test]
    fn unvalidated_problem_is_rejected() {
        let mut problem = one_arc_problem(1);
        problem.products[0].recycle_yield = 0.4; // yield sum 1.4
        assert!(matches!(
            expand(&problem),
            Err(ExpandError::InvalidProblem(_))
        ));
    }
}
