//! Execution of one plan period against realised data.
//!
//! Plan paths are scaled, never rerouted: every capacity-bearing lane gets
//! a scale factor `min(1, realized / planned)`, a path executes at the
//! minimum scale over the lanes it touches, and return continuations are
//! additionally clamped so collection never exceeds the return fraction of
//! what was actually delivered. Scaling a whole path preserves flow
//! conservation by construction.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::flowcore::{EdgeTag, FlowPath, PathEntry, FLOW_EPS};
use crate::netmodel::{NodeId, NodeKind, PlanningProblem, ProductId, ResourceId, RouteKey};
use crate::tpm::TacticalPlan;

use super::sample::RealizedPeriod;

/// Capacity-bearing lane of the expanded graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Lane {
    NodeNominal(usize),
    NodeExpansion(usize),
    Arc(usize),
    Delivery(usize, usize),
    LoopIn(usize),
    CarryIn(usize),
}

/// Everything one executed period contributes to the trace.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeriodExecution {
    pub deliveries: BTreeMap<(NodeId, ProductId), f64>,
    pub collected: BTreeMap<(NodeId, ProductId), f64>,
    pub remanufactured: BTreeMap<ProductId, f64>,
    pub recycled: BTreeMap<ProductId, f64>,
    pub disposed: BTreeMap<ProductId, f64>,
    pub virgin_input: BTreeMap<ProductId, f64>,
    pub usage: BTreeMap<ResourceId, f64>,
    pub expansion_used: BTreeMap<NodeId, f64>,
    pub route_leadtime: BTreeMap<RouteKey, f64>,
    pub period_profit: f64,
    pub period_leadtime: f64,
    /// Quantities leaving over loop-closing arcs: arc index -> product -> qty.
    pub carries_out: BTreeMap<usize, BTreeMap<ProductId, f64>>,
}

struct PathView<'a> {
    path: &'a FlowPath,
    /// Lanes touched up to and including the delivery edge.
    forward_lanes: Vec<Lane>,
    /// Lanes touched by the return continuation (if any).
    tail_lanes: Vec<Lane>,
    /// Index into `path.edges` where the return continuation starts.
    tail_start: Option<usize>,
    delivery: Option<(usize, usize)>,
    gate: Option<(usize, usize)>,
}

fn lane_of(tag: &EdgeTag) -> Option<Lane> {
    match *tag {
        EdgeTag::NodeNominal { node, .. } => Some(Lane::NodeNominal(node)),
        EdgeTag::NodeExpansion { node, .. } => Some(Lane::NodeExpansion(node)),
        EdgeTag::ArcTraverse { arc, .. } => Some(Lane::Arc(arc)),
        EdgeTag::Delivery {
            customer, product, ..
        } => Some(Lane::Delivery(customer, product)),
        _ => None,
    }
}

pub fn execute_period(
    problem: &PlanningProblem,
    plan: &TacticalPlan,
    local_period: usize,
    realized: &RealizedPeriod,
    carries_in: &BTreeMap<usize, BTreeMap<ProductId, f64>>,
) -> PeriodExecution {
    let net = &problem.network;
    let node_id = |n: usize| net.nodes[n].id.clone();
    let product_id = |p: usize| problem.products[p].id.clone();

    // Path views for this local period; idle carry slack is bookkeeping only.
    let mut views: Vec<PathView> = Vec::new();
    for path in plan.paths.iter().filter(|p| p.period == local_period) {
        let only_slack = path
            .edges
            .iter()
            .all(|e| matches!(plan.graph.edges()[*e as usize].tag, EdgeTag::CarrySlack { .. }));
        if only_slack {
            continue;
        }
        let mut view = PathView {
            path,
            forward_lanes: Vec::new(),
            tail_lanes: Vec::new(),
            tail_start: None,
            delivery: None,
            gate: None,
        };
        match path.entry {
            PathEntry::LoopIn { arc } => view.forward_lanes.push(Lane::LoopIn(arc)),
            PathEntry::Carry { node } => view.forward_lanes.push(Lane::CarryIn(node)),
            PathEntry::Source => {}
        }
        for (i, edge_id) in path.edges.iter().enumerate() {
            let tag = plan.graph.edges()[*edge_id as usize].tag;
            if let EdgeTag::Gate {
                customer, product, ..
            } = tag
            {
                view.tail_start = Some(i);
                view.gate = Some((customer, product));
            }
            let lane = lane_of(&tag);
            if view.tail_start.is_some() {
                if let Some(lane) = lane {
                    view.tail_lanes.push(lane);
                }
            } else {
                if let EdgeTag::Delivery {
                    customer, product, ..
                } = tag
                {
                    view.delivery = Some((customer, product));
                }
                if let Some(lane) = lane {
                    view.forward_lanes.push(lane);
                }
            }
        }
        views.push(view);
    }

    // Planned usage per lane.
    let mut planned: BTreeMap<Lane, f64> = BTreeMap::new();
    for view in &views {
        for lane in view.forward_lanes.iter().chain(view.tail_lanes.iter()) {
            *planned.entry(*lane).or_insert(0.0) += view.path.quantity;
        }
    }

    // Realized capacity per lane and the resulting scale factors.
    let realized_cap = |lane: &Lane| -> f64 {
        match *lane {
            Lane::NodeNominal(n) => {
                let node = &net.nodes[n];
                realized.node_cap_mult[&node.id] * node.capacity.nominal_upper_bound
            }
            Lane::NodeExpansion(n) => {
                let node = &net.nodes[n];
                realized.node_cap_mult[&node.id] * node.capacity.buffer()
            }
            Lane::Arc(a) => {
                let arc = &net.arcs[a];
                realized.arc_cap_mult[&arc.key()] * arc.capacity
            }
            Lane::Delivery(c, p) => realized
                .demand
                .get(&(node_id(c), product_id(p)))
                .copied()
                .unwrap_or(0.0),
            Lane::LoopIn(a) => carries_in
                .get(&a)
                .map(|m| m.values().sum())
                .unwrap_or(0.0),
            Lane::CarryIn(n) => {
                let mut total = 0.0;
                for (arc_idx, per_product) in carries_in {
                    if net.node_index(&net.arcs[*arc_idx].to) == Some(n) {
                        total += per_product.values().sum::<f64>();
                    }
                }
                total
            }
        }
    };
    let mut scale: BTreeMap<Lane, f64> = BTreeMap::new();
    for (lane, plan_qty) in &planned {
        let s = if *plan_qty <= FLOW_EPS {
            1.0
        } else {
            (realized_cap(lane) / plan_qty).min(1.0).max(0.0)
        };
        scale.insert(*lane, s);
    }

    // Pass A: forward multipliers and executed deliveries.
    let mut fwd_mult: Vec<f64> = Vec::with_capacity(views.len());
    let mut deliveries: BTreeMap<(NodeId, ProductId), f64> = BTreeMap::new();
    for view in &views {
        let m = view
            .forward_lanes
            .iter()
            .map(|l| scale[l])
            .fold(1.0f64, f64::min);
        fwd_mult.push(m);
        if let Some((c, p)) = view.delivery {
            *deliveries.entry((node_id(c), product_id(p))).or_insert(0.0) +=
                view.path.quantity * m;
        }
    }

    // Pass B: tail multipliers, clamped so collection stays within the
    // return fraction of executed deliveries per (customer, product).
    let mut tail_pre: Vec<f64> = Vec::with_capacity(views.len());
    let mut collected_pre: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (view, m_fwd) in views.iter().zip(fwd_mult.iter()) {
        if view.tail_start.is_none() {
            tail_pre.push(0.0);
            continue;
        }
        let m = view
            .tail_lanes
            .iter()
            .map(|l| scale[l])
            .fold(*m_fwd, f64::min);
        tail_pre.push(m);
        let (c, p) = view.gate.expect("gate set with tail");
        *collected_pre.entry((c, p)).or_insert(0.0) += view.path.quantity * m;
    }
    let mut clamp: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for ((c, p), pre) in &collected_pre {
        let delivered = deliveries
            .get(&(node_id(*c), product_id(*p)))
            .copied()
            .unwrap_or(0.0);
        let allowed = problem.products[*p].return_fraction * delivered;
        let factor = if *pre <= FLOW_EPS {
            1.0
        } else {
            (allowed / pre).min(1.0)
        };
        clamp.insert((*c, *p), factor);
    }

    // Accumulate executed flows.
    let mut out = PeriodExecution {
        deliveries,
        ..Default::default()
    };
    // Usage entries exist for every resource so monitoring sees zeros.
    for node in &net.nodes {
        out.usage.insert(ResourceId::Node(node.id.clone()), 0.0);
    }
    for arc in &net.arcs {
        out.usage.insert(ResourceId::Arc(arc.key()), 0.0);
    }

    for (i, view) in views.iter().enumerate() {
        let q = view.path.quantity;
        let m_fwd = fwd_mult[i];
        let exec_tail = view
            .gate
            .map(|(c, p)| q * tail_pre[i] * clamp[&(c, p)])
            .unwrap_or(0.0);
        if q * m_fwd <= FLOW_EPS && exec_tail <= FLOW_EPS {
            continue;
        }

        let mut forward_time_per_unit = 0.0;
        let mut first_node: Option<usize> = None;
        for (j, edge_id) in view.path.edges.iter().enumerate() {
            let tag = plan.graph.edges()[*edge_id as usize].tag;
            let in_tail = view.tail_start.map_or(false, |s| j >= s);
            let exec = if in_tail { exec_tail } else { q * m_fwd };
            if exec <= FLOW_EPS {
                continue;
            }
            match tag {
                EdgeTag::NodeNominal { node, .. } | EdgeTag::NodeExpansion { node, .. } => {
                    let data = &net.nodes[node];
                    if first_node.is_none() {
                        first_node = Some(node);
                    }
                    let unit_time = realized.node_time_mult[&data.id] * data.unit_process_time;
                    let mut unit_cost = data.unit_process_cost;
                    if matches!(tag, EdgeTag::NodeExpansion { .. }) {
                        unit_cost += data.capacity.expansion_cost;
                        *out.expansion_used.entry(data.id.clone()).or_insert(0.0) += exec;
                    }
                    out.period_profit -= unit_cost * exec;
                    out.period_leadtime += unit_time * exec;
                    if !in_tail {
                        forward_time_per_unit += unit_time;
                    }
                    *out
                        .usage
                        .entry(ResourceId::Node(data.id.clone()))
                        .or_insert(0.0) += exec;
                }
                EdgeTag::ArcTraverse { arc, .. } => {
                    let data = &net.arcs[arc];
                    let unit_time = realized.arc_time_mult[&data.key()] * data.unit_transport_time;
                    out.period_profit -= data.unit_transport_cost * exec;
                    out.period_leadtime += unit_time * exec;
                    if !in_tail {
                        forward_time_per_unit += unit_time;
                    }
                    *out
                        .usage
                        .entry(ResourceId::Arc(data.key()))
                        .or_insert(0.0) += exec;
                }
                EdgeTag::Delivery { product, .. } => {
                    out.period_profit += problem.products[product].unit_profit * exec;
                }
                EdgeTag::Gate {
                    customer, product, ..
                } => {
                    *out
                        .collected
                        .entry((node_id(customer), product_id(product)))
                        .or_insert(0.0) += exec;
                }
                _ => {}
            }
        }

        // Virgin input and route lead-time observation for delivery paths.
        if let Some((c, p)) = view.delivery {
            let exec_fwd = q * m_fwd;
            if exec_fwd > FLOW_EPS {
                if view.path.entry == PathEntry::Source {
                    *out.virgin_input.entry(product_id(p)).or_insert(0.0) += exec_fwd;
                }
                let origin = match view.path.entry {
                    PathEntry::Source => first_node.map(node_id),
                    PathEntry::LoopIn { arc } => Some(net.arcs[arc].to.clone()),
                    PathEntry::Carry { node } => Some(node_id(node)),
                };
                if let Some(origin) = origin {
                    let route = RouteKey {
                        origin,
                        customer: node_id(c),
                    };
                    *out.route_leadtime.entry(route).or_insert(0.0) +=
                        forward_time_per_unit * exec_fwd;
                }
            }
        }

        // End-of-life classification of the return continuation.
        if exec_tail > FLOW_EPS {
            let (_, p) = view.gate.expect("tail implies gate");
            let pid = product_id(p);
            let last = view.path.edges.last().expect("nonempty path");
            match plan.graph.edges()[*last as usize].tag {
                EdgeTag::DisposalExit { .. } => {
                    *out.disposed.entry(pid).or_insert(0.0) += exec_tail;
                }
                EdgeTag::ArcTraverse { arc, .. } => {
                    let from_kind = net
                        .node(&net.arcs[arc].from)
                        .map(|n| n.kind)
                        .unwrap_or(NodeKind::DisposalSite);
                    match from_kind {
                        NodeKind::Remanufacturer => {
                            *out.remanufactured.entry(pid.clone()).or_insert(0.0) += exec_tail;
                        }
                        NodeKind::Recycler => {
                            *out.recycled.entry(pid.clone()).or_insert(0.0) += exec_tail;
                        }
                        _ => {}
                    }
                    let per_product = out.carries_out.entry(arc).or_default();
                    *per_product.entry(pid).or_insert(0.0) += exec_tail;
                }
                _ => {}
            }
        }
    }

    out
}

/// Execution of a period with no covering plan: nothing moves.
pub fn idle_period(problem: &PlanningProblem) -> PeriodExecution {
    let mut out = PeriodExecution::default();
    for node in &problem.network.nodes {
        out.usage.insert(ResourceId::Node(node.id.clone()), 0.0);
    }
    for arc in &problem.network.arcs {
        out.usage.insert(ResourceId::Arc(arc.key()), 0.0);
    }
    out
}
