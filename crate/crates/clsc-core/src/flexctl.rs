//! Buffer monitoring and flexibility control: the re-planning trigger
//! predicate, the four flexibility actions, and lead-time-interval
//! accounting.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::netmodel::{
    validate_network, DemandKey, Direction, NodeId, NodeKind, PlanningProblem, ProductId,
    ResourceId, RouteKey, ValidationReport,
};

/// How the usage, lead-time and horizon conditions combine into a
/// re-planning decision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum TriggerPolicy {
    /// Usage AND lead time exceeded AND planning horizon ended.
    Conjunctive,
    /// Any one condition suffices.
    Disjunctive,
    /// Only the end of the planning horizon triggers.
    HorizonOnly,
}

/// Upper bounds protecting the volume and lead-time buffers.
///
/// `usage_upper` maps a resource to the fraction of its maximal capacity
/// that may be used before the condition fires; `leadtime_upper` bounds
/// the observed lead time per delivery route.
#[derive(Clone, Debug, PartialEq)]
pub struct BufferThresholds {
    pub usage_upper: BTreeMap<ResourceId, f64>,
    pub leadtime_upper: BTreeMap<RouteKey, f64>,
    pub policy: TriggerPolicy,
}

impl BufferThresholds {
    /// No usage or lead-time bounds at all; only the policy applies.
    pub fn permissive(policy: TriggerPolicy) -> Self {
        BufferThresholds {
            usage_upper: BTreeMap::new(),
            leadtime_upper: BTreeMap::new(),
            policy,
        }
    }

    /// Same usage fraction for every given resource.
    pub fn uniform_usage(
        resources: impl IntoIterator<Item = ResourceId>,
        fraction: f64,
        policy: TriggerPolicy,
    ) -> Self {
        BufferThresholds {
            usage_upper: resources.into_iter().map(|r| (r, fraction)).collect(),
            leadtime_upper: BTreeMap::new(),
            policy,
        }
    }
}

/// Observed state of the monitored buffers for one period.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BufferState {
    /// Quantity consumed per resource this period.
    pub usage: BTreeMap<ResourceId, f64>,
    /// Realized maximal capacity per resource this period (the physical
    /// bound the usage fraction is measured against).
    pub maximal: BTreeMap<ResourceId, f64>,
    /// Realized lead time per delivery route this period.
    pub observed_leadtime: BTreeMap<RouteKey, f64>,
    pub periods_since_plan: usize,
    pub horizon_ended: bool,
}

/// Outcome of the trigger check.
#[derive(Clone, Debug, PartialEq)]
pub enum TriggerDecision {
    /// Re-plan now; reasons list every violated key.
    Replan(Vec<String>),
    Continue,
}

impl TriggerDecision {
    pub fn is_replan(&self) -> bool {
        matches!(self, TriggerDecision::Replan(_))
    }
}

/// Pure trigger predicate. A resource or route without a threshold never
/// fires. Usage fires on strict excess of `fraction * maximal`; lead time
/// fires on strict excess of its bound.
pub fn check_trigger(state: &BufferState, thresholds: &BufferThresholds) -> TriggerDecision {
    let mut usage_violations: Vec<String> = Vec::new();
    for (rid, used) in &state.usage {
        if let (Some(fraction), Some(maximal)) =
            (thresholds.usage_upper.get(rid), state.maximal.get(rid))
        {
            if *used > fraction * maximal {
                usage_violations.push(format!("usage:{rid}"));
            }
        }
    }
    let mut leadtime_violations: Vec<String> = Vec::new();
    for (route, observed) in &state.observed_leadtime {
        if let Some(bound) = thresholds.leadtime_upper.get(route) {
            if *observed > *bound {
                leadtime_violations.push(format!("leadtime:{route}"));
            }
        }
    }

    let usage_hit = !usage_violations.is_empty();
    let leadtime_hit = !leadtime_violations.is_empty();
    let fire = match thresholds.policy {
        TriggerPolicy::Conjunctive => usage_hit && leadtime_hit && state.horizon_ended,
        TriggerPolicy::Disjunctive => usage_hit || leadtime_hit || state.horizon_ended,
        TriggerPolicy::HorizonOnly => state.horizon_ended,
    };
    if !fire {
        return TriggerDecision::Continue;
    }
    let mut reasons = usage_violations;
    reasons.extend(leadtime_violations);
    if state.horizon_ended {
        reasons.push("horizon".to_string());
    }
    TriggerDecision::Replan(reasons)
}

/// The flexibility actions of the control loop, applied as pure problem
/// rewrites.
#[derive(Clone, Debug, PartialEq)]
pub enum FlexAction {
    /// Drop primary-channel arcs lying on the violated routes, forcing the
    /// plan onto alternate channels.
    RerouteAlternate { routes: Vec<RouteKey> },
    /// Raise the nominal upper bound by `amount`, drawing on the volume
    /// buffer. The buffer draw itself keeps being priced at the node's
    /// expansion cost inside the planning model.
    ExpandCapacity { node: NodeId, amount: f64 },
    /// Keep only inbound arcs of the customer carrying the chosen channel
    /// tag; reverse arcs are untouched.
    SwitchChannel { customer: NodeId, channel: String },
    /// Rewrite one demand entry: new quantity, possibly a new due period.
    AdjustDelivery {
        customer: NodeId,
        product: ProductId,
        period: usize,
        new_quantity: f64,
        new_period: usize,
    },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ActionError {
    #[error("action infeasible: {0}")]
    ActionInfeasible(String),
    #[error("action result fails validation: {0:?}")]
    InvalidResult(ValidationReport),
}

/// Applies a flexibility action, returning a modified copy of the problem.
/// The original is never touched; results always pass `validate_network`.
pub fn apply_action(
    problem: &PlanningProblem,
    action: &FlexAction,
) -> Result<PlanningProblem, ActionError> {
    let mut next = problem.clone();
    match action {
        FlexAction::RerouteAlternate { routes } => {
            let net = &problem.network;
            // An arc lies on route (l, r) when l reaches its tail and its
            // head reaches r over forward arcs.
            let reach_from = |start: &NodeId| -> alloc::collections::BTreeSet<NodeId> {
                let mut seen = alloc::collections::BTreeSet::new();
                seen.insert(start.clone());
                let mut frontier = alloc::vec![start.clone()];
                while let Some(u) = frontier.pop() {
                    for arc in &net.arcs {
                        if arc.direction == Direction::Forward
                            && arc.from == u
                            && !seen.contains(&arc.to)
                        {
                            seen.insert(arc.to.clone());
                            frontier.push(arc.to.clone());
                        }
                    }
                }
                seen
            };
            let mut drop = alloc::vec![false; net.arcs.len()];
            for route in routes {
                let from_origin = reach_from(&route.origin);
                for (i, arc) in net.arcs.iter().enumerate() {
                    if arc.direction == Direction::Forward
                        && arc.channel == "primary"
                        && from_origin.contains(&arc.from)
                        && reach_from(&arc.to).contains(&route.customer)
                    {
                        drop[i] = true;
                    }
                }
            }
            if !drop.iter().any(|d| *d) {
                return Err(ActionError::ActionInfeasible(
                    "no primary arcs found on the violated routes".to_string(),
                ));
            }
            let mut idx = 0;
            next.network.arcs.retain(|_| {
                let keep = !drop[idx];
                idx += 1;
                keep
            });
        }
        FlexAction::ExpandCapacity { node, amount } => {
            let idx = next
                .network
                .node_index(node)
                .ok_or_else(|| ActionError::ActionInfeasible(format!("unknown node {node}")))?;
            let cap = &mut next.network.nodes[idx].capacity;
            if !amount.is_finite() || *amount < 0.0 || *amount > cap.buffer() {
                return Err(ActionError::ActionInfeasible(format!(
                    "expansion amount {amount} outside [0, buffer {}]",
                    cap.buffer()
                )));
            }
            cap.nominal_upper_bound += amount;
        }
        FlexAction::SwitchChannel { customer, channel } => {
            let has_tag = problem.network.arcs.iter().any(|a| {
                a.direction == Direction::Forward && &a.to == customer && &a.channel == channel
            });
            if !has_tag {
                return Err(ActionError::ActionInfeasible(format!(
                    "customer {customer} has no inbound arc with channel {channel}"
                )));
            }
            next.network.arcs.retain(|a| {
                a.direction != Direction::Forward || &a.to != customer || &a.channel == channel
            });
        }
        FlexAction::AdjustDelivery {
            customer,
            product,
            period,
            new_quantity,
            new_period,
        } => {
            if !new_quantity.is_finite() || *new_quantity < 0.0 {
                return Err(ActionError::ActionInfeasible(format!(
                    "new quantity {new_quantity} must be >= 0"
                )));
            }
            let old_key = DemandKey {
                customer: customer.clone(),
                product: product.clone(),
                period: *period,
            };
            if next.demand.remove(&old_key).is_none() {
                return Err(ActionError::ActionInfeasible(format!(
                    "no demand entry for {customer}/{product}/{period}"
                )));
            }
            next.demand.insert(
                DemandKey {
                    customer: customer.clone(),
                    product: product.clone(),
                    period: *new_period,
                },
                *new_quantity,
            );
        }
    }
    let report = validate_network(&next);
    if !report.is_ok() {
        return Err(ActionError::InvalidResult(report));
    }
    Ok(next)
}

/// Lead-time intervals: consecutive differences of the decision epochs.
/// Fewer than two epochs yield an empty list.
pub fn lti(decision_epochs: &[f64]) -> Vec<f64> {
    decision_epochs
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect()
}

/// Convenience used by the simulator and reports: mean of the intervals,
/// `None` when fewer than two epochs exist.
pub fn mean_lti(decision_epochs: &[f64]) -> Option<f64> {
    let intervals = lti(decision_epochs);
    if intervals.is_empty() {
        None
    } else {
        Some(intervals.iter().sum::<f64>() / intervals.len() as f64)
    }
}

/// Resources of a problem that carry no usage threshold; callers may log
/// these once per run (missing keys never trigger).
pub fn unmonitored_resources(
    problem: &PlanningProblem,
    thresholds: &BufferThresholds,
) -> Vec<ResourceId> {
    let mut out = Vec::new();
    for node in &problem.network.nodes {
        let rid = ResourceId::Node(node.id.clone());
        if node.kind != NodeKind::Customer && !thresholds.usage_upper.contains_key(&rid) {
            out.push(rid);
        }
    }
    for arc in &problem.network.arcs {
        let rid = ResourceId::Arc(arc.key());
        if !thresholds.usage_upper.contains_key(&rid) {
            out.push(rid);
        }
    }
    out
}
