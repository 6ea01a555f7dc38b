//! The tactical planning model: profit maximisation, lead-time
//! minimisation under full demand satisfaction, profit-rate (SSCP)
//! maximisation via Dinkelbach iteration, and an epsilon-constraint
//! Pareto frontier. Every objective reduces to min-cost flow solves on
//! the same time-expanded graph with re-costed edges.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::flowcore::{
    decompose_period_paths, expand_with_carries, min_cost_flow, EdgeTag, ExpandError,
    FlowAssignment, FlowError, FlowPath, TimeExpandedGraph, FLOW_EPS,
};
use crate::netmodel::{ArcKey, NodeId, PlanningProblem, ProductId, ValidationReport};

/// Cap on Dinkelbach subproblem solves before declaring a hard error.
pub const DINKELBACH_ITERATION_CAP: usize = 100;
/// Default relative tolerance for SSCP convergence.
pub const DEFAULT_SSCP_TOLERANCE: f64 = 1e-9;
/// Relative tolerance of the Lagrangian bisection on the time budget.
pub const EPSILON_BISECTION_TOL: f64 = 1e-6;

/// Planning objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective {
    ProfitMax,
    LeadTimeMin,
    SscpMax { tolerance: f64 },
    EpsilonConstraint { lead_time_cap: f64 },
}

impl Objective {
    pub fn sscp_default() -> Objective {
        Objective::SscpMax {
            tolerance: DEFAULT_SSCP_TOLERANCE,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Objective::ProfitMax => "profit",
            Objective::LeadTimeMin => "leadtime",
            Objective::SscpMax { .. } => "sscp",
            Objective::EpsilonConstraint { .. } => "epsilon",
        }
    }

    /// Canonical ordering used by comparison tables.
    pub fn rank(&self) -> usize {
        match self {
            Objective::ProfitMax => 0,
            Objective::LeadTimeMin => 1,
            Objective::SscpMax { .. } => 2,
            Objective::EpsilonConstraint { .. } => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("problem fails validation with {} issue(s)", .0.issues.len())]
    InvalidProblem(ValidationReport),
    #[error("demand cannot be met: {0}")]
    Infeasible(String),
    #[error("no plan earns positive profit; SSCP maximisation degenerates")]
    NoPositiveRatio,
    #[error("positive profit at zero lead time; SSCP ratio undefined")]
    DegenerateZeroTime,
    #[error("iteration limit exceeded")]
    IterationLimit,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver fault: {0}")]
    Solver(FlowError),
}

impl From<ExpandError> for PlanError {
    fn from(e: ExpandError) -> Self {
        match e {
            ExpandError::InvalidProblem(r) => PlanError::InvalidProblem(r),
        }
    }
}

impl From<FlowError> for PlanError {
    fn from(e: FlowError) -> Self {
        PlanError::Solver(e)
    }
}

/// The three headline scalars of a plan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanScore {
    pub profit: f64,
    pub lead_time: f64,
    /// Profit per time unit; `None` when the lead time is zero.
    pub sscp: Option<f64>,
}

/// A tactical plan: flows projected back onto the network, headline
/// scalars, and the solve detail the simulator executes against.
#[derive(Clone, Debug, PartialEq)]
pub struct TacticalPlan {
    pub objective: Objective,
    /// Number of local periods the plan covers.
    pub horizon: usize,
    pub deliveries: BTreeMap<(NodeId, ProductId, usize), f64>,
    pub arc_flows: BTreeMap<(ArcKey, usize), f64>,
    pub node_flows: BTreeMap<(NodeId, usize), f64>,
    pub expansion_used: BTreeMap<(NodeId, usize), f64>,
    /// Planned collection per (customer, product, period).
    pub collected: BTreeMap<(NodeId, ProductId, usize), f64>,
    pub profit: f64,
    pub lead_time: f64,
    pub sscp: Option<f64>,
    /// Lambda sequence of the Dinkelbach iteration (empty otherwise).
    pub dinkelbach_lambdas: Vec<f64>,
    /// Number of subproblem solves the plan took.
    pub subproblem_solves: usize,
    pub(crate) graph: TimeExpandedGraph,
    pub(crate) paths: Vec<FlowPath>,
}

fn project_paths(
    problem: &PlanningProblem,
    graph: &TimeExpandedGraph,
    paths: &[FlowPath],
) -> (
    BTreeMap<(NodeId, ProductId, usize), f64>,
    BTreeMap<(ArcKey, usize), f64>,
    BTreeMap<(NodeId, usize), f64>,
    BTreeMap<(NodeId, usize), f64>,
    BTreeMap<(NodeId, ProductId, usize), f64>,
) {
    let mut deliveries = BTreeMap::new();
    let mut arc_flows = BTreeMap::new();
    let mut node_flows = BTreeMap::new();
    let mut expansion_used = BTreeMap::new();
    let mut collected = BTreeMap::new();
    let node_id = |n: usize| problem.network.nodes[n].id.clone();
    let product_id = |p: usize| problem.products[p].id.clone();
    for path in paths {
        for edge_id in &path.edges {
            let edge = &graph.edges()[*edge_id as usize];
            match edge.tag {
                EdgeTag::NodeNominal { node, period } => {
                    *node_flows.entry((node_id(node), period)).or_insert(0.0) += path.quantity;
                }
                EdgeTag::NodeExpansion { node, period } => {
                    *node_flows.entry((node_id(node), period)).or_insert(0.0) += path.quantity;
                    *expansion_used.entry((node_id(node), period)).or_insert(0.0) +=
                        path.quantity;
                }
                EdgeTag::ArcTraverse { arc, period } => {
                    let key = problem.network.arcs[arc].key();
                    *arc_flows.entry((key, period)).or_insert(0.0) += path.quantity;
                }
                EdgeTag::Delivery {
                    customer,
                    product,
                    period,
                } => {
                    *deliveries
                        .entry((node_id(customer), product_id(product), period))
                        .or_insert(0.0) += path.quantity;
                }
                EdgeTag::Gate {
                    customer,
                    product,
                    period,
                } => {
                    *collected
                        .entry((node_id(customer), product_id(product), period))
                        .or_insert(0.0) += path.quantity;
                }
                _ => {}
            }
        }
    }
    (deliveries, arc_flows, node_flows, expansion_used, collected)
}

fn score_from_projection(
    problem: &PlanningProblem,
    deliveries: &BTreeMap<(NodeId, ProductId, usize), f64>,
    arc_flows: &BTreeMap<(ArcKey, usize), f64>,
    node_flows: &BTreeMap<(NodeId, usize), f64>,
    expansion_used: &BTreeMap<(NodeId, usize), f64>,
) -> PlanScore {
    let mut profit = 0.0;
    for ((_, product, _), qty) in deliveries {
        let unit_profit = problem
            .product(product)
            .map(|p| p.unit_profit)
            .unwrap_or(0.0);
        profit += unit_profit * qty;
    }
    let mut lead_time = 0.0;
    for ((node, _), qty) in node_flows {
        if let Some(n) = problem.network.node(node) {
            profit -= n.unit_process_cost * qty;
            lead_time += n.unit_process_time * qty;
        }
    }
    for ((node, _), qty) in expansion_used {
        if let Some(n) = problem.network.node(node) {
            profit -= n.capacity.expansion_cost * qty;
        }
    }
    for ((key, _), qty) in arc_flows {
        if let Some(arc) = problem
            .network
            .arcs
            .iter()
            .find(|a| a.key() == *key)
        {
            profit -= arc.unit_transport_cost * qty;
            lead_time += arc.unit_transport_time * qty;
        }
    }
    let sscp = if lead_time > FLOW_EPS {
        Some(profit / lead_time)
    } else {
        None
    };
    PlanScore {
        profit,
        lead_time,
        sscp,
    }
}

/// Recomputes profit, lead time and SSCP from the plan's projected flows,
/// independent of the solver's accumulators.
pub fn evaluate(problem: &PlanningProblem, plan: &TacticalPlan) -> PlanScore {
    score_from_projection(
        problem,
        &plan.deliveries,
        &plan.arc_flows,
        &plan.node_flows,
        &plan.expansion_used,
    )
}

fn build_plan(
    problem: &PlanningProblem,
    objective: Objective,
    graph: TimeExpandedGraph,
    flow: &FlowAssignment,
) -> TacticalPlan {
    let paths = decompose_period_paths(&graph, flow);
    let (deliveries, arc_flows, node_flows, expansion_used, collected) =
        project_paths(problem, &graph, &paths);
    let score =
        score_from_projection(problem, &deliveries, &arc_flows, &node_flows, &expansion_used);
    TacticalPlan {
        objective,
        horizon: problem.horizon,
        deliveries,
        arc_flows,
        node_flows,
        expansion_used,
        collected,
        profit: score.profit,
        lead_time: score.lead_time,
        sscp: score.sscp,
        dinkelbach_lambdas: Vec::new(),
        subproblem_solves: 1,
        graph,
        paths,
    }
}

/// Solves the parametric subproblem max(profit - price * lead_time): every
/// edge is re-costed to `cost + price * time`, deliveries keep earning
/// their profit.
fn solve_parametric(
    problem: &PlanningProblem,
    base: &TimeExpandedGraph,
    price: f64,
) -> Result<TacticalPlan, PlanError> {
    let graph = base.with_costs(|e| e.cost + price * e.time);
    let flow = min_cost_flow(&graph)?;
    // Score against real costs: rebuild on the base graph.
    Ok(build_plan(
        problem,
        Objective::ProfitMax,
        base.clone(),
        &flow,
    ))
}

fn expand_checked(
    problem: &PlanningProblem,
    carries: &BTreeMap<usize, f64>,
) -> Result<TimeExpandedGraph, PlanError> {
    Ok(expand_with_carries(problem, carries)?)
}

/// Profit maximisation. Demand satisfaction is optional per unit; serving
/// a negative-margin unit is never forced, so a zero plan is always
/// feasible and `Infeasible` cannot occur.
pub fn plan_profit_max(problem: &PlanningProblem) -> Result<TacticalPlan, PlanError> {
    plan_profit_max_with_carries(problem, &BTreeMap::new())
}

pub(crate) fn plan_profit_max_with_carries(
    problem: &PlanningProblem,
    carries: &BTreeMap<usize, f64>,
) -> Result<TacticalPlan, PlanError> {
    let graph = expand_checked(problem, carries)?;
    let flow = min_cost_flow(&graph)?;
    Ok(build_plan(problem, Objective::ProfitMax, graph, &flow))
}

/// Lead-time minimisation subject to meeting all demand. Service is forced
/// by rewarding deliveries with a constant exceeding any unit path time,
/// then minimising the time-costed flow.
pub fn plan_leadtime_min(problem: &PlanningProblem) -> Result<TacticalPlan, PlanError> {
    plan_leadtime_min_with_carries(problem, &BTreeMap::new())
}

pub(crate) fn plan_leadtime_min_with_carries(
    problem: &PlanningProblem,
    carries: &BTreeMap<usize, f64>,
) -> Result<TacticalPlan, PlanError> {
    let graph = expand_checked(problem, carries)?;
    let per_period_time: f64 = problem
        .network
        .nodes
        .iter()
        .map(|n| n.unit_process_time)
        .chain(problem.network.arcs.iter().map(|a| a.unit_transport_time))
        .sum();
    let service_reward = 1.0 + per_period_time * problem.horizon.max(1) as f64;
    let lt_graph = graph.with_costs(|e| match e.tag {
        EdgeTag::Delivery { .. } => -service_reward,
        _ => e.time,
    });
    let flow = min_cost_flow(&lt_graph)?;
    let plan = build_plan(problem, Objective::LeadTimeMin, graph, &flow);

    if !problem.allow_shortfall {
        for (key, demand) in &problem.demand {
            if key.period >= problem.horizon {
                continue;
            }
            let delivered = plan
                .deliveries
                .get(&(key.customer.clone(), key.product.clone(), key.period))
                .copied()
                .unwrap_or(0.0);
            if delivered + 1e-6 * demand.max(1.0) < *demand {
                return Err(PlanError::Infeasible(alloc::format!(
                    "demand {}/{}/{} short by {}",
                    key.customer,
                    key.product,
                    key.period,
                    demand - delivered
                )));
            }
        }
    }
    Ok(plan)
}

/// SSCP (profit-rate) maximisation by Dinkelbach iteration. The lambda
/// sequence strictly increases; the plan achieving the final ratio is
/// returned with `sscp` set to it.
pub fn plan_sscp_max(problem: &PlanningProblem, tolerance: f64) -> Result<TacticalPlan, PlanError> {
    plan_sscp_max_with_carries(problem, tolerance, &BTreeMap::new())
}

pub(crate) fn plan_sscp_max_with_carries(
    problem: &PlanningProblem,
    tolerance: f64,
    carries: &BTreeMap<usize, f64>,
) -> Result<TacticalPlan, PlanError> {
    if !(tolerance > 0.0) {
        return Err(PlanError::InvalidArgument(alloc::format!(
            "sscp tolerance {tolerance} must be > 0"
        )));
    }
    let graph = expand_checked(problem, carries)?;
    let flow = min_cost_flow(&graph)?;
    let mut incumbent = build_plan(problem, Objective::ProfitMax, graph.clone(), &flow);
    let mut solves = 1usize;

    if incumbent.profit <= FLOW_EPS {
        return Err(PlanError::NoPositiveRatio);
    }
    if incumbent.lead_time <= FLOW_EPS {
        return Err(PlanError::DegenerateZeroTime);
    }

    let mut lambda = incumbent.profit / incumbent.lead_time;
    let mut lambdas = alloc::vec![lambda];

    loop {
        if solves > DINKELBACH_ITERATION_CAP {
            return Err(PlanError::IterationLimit);
        }
        let candidate = solve_parametric(problem, &graph, lambda)?;
        solves += 1;
        let gap = candidate.profit - lambda * candidate.lead_time;
        if gap <= tolerance * incumbent.profit.abs().max(1.0) {
            incumbent.objective = Objective::SscpMax { tolerance };
            incumbent.sscp = Some(lambda);
            incumbent.dinkelbach_lambdas = lambdas;
            incumbent.subproblem_solves = solves;
            return Ok(incumbent);
        }
        if candidate.lead_time <= FLOW_EPS {
            // Positive gap at zero time: the ratio is unbounded.
            return Err(PlanError::DegenerateZeroTime);
        }
        let next = candidate.profit / candidate.lead_time;
        if next <= lambda {
            // Numerical stall; lambda can no longer improve.
            incumbent.objective = Objective::SscpMax { tolerance };
            incumbent.sscp = Some(lambda);
            incumbent.dinkelbach_lambdas = lambdas;
            incumbent.subproblem_solves = solves;
            return Ok(incumbent);
        }
        incumbent = candidate;
        lambda = next;
        lambdas.push(lambda);
    }
}

/// Profit maximisation subject to `lead_time <= cap`, realised by
/// bisection on a Lagrangian time price over the parametric subproblem.
pub fn plan_epsilon_constraint(
    problem: &PlanningProblem,
    lead_time_cap: f64,
) -> Result<TacticalPlan, PlanError> {
    if !(lead_time_cap >= 0.0) {
        return Err(PlanError::InvalidArgument(alloc::format!(
            "lead time cap {lead_time_cap} must be >= 0"
        )));
    }
    let graph = expand_checked(problem, &BTreeMap::new())?;
    let flow = min_cost_flow(&graph)?;
    let profit_plan = build_plan(problem, Objective::ProfitMax, graph.clone(), &flow);
    epsilon_from_parts(problem, &graph, profit_plan, lead_time_cap)
}

fn within_cap(lead_time: f64, cap: f64) -> bool {
    lead_time <= cap + 1e-9 * cap.max(1.0)
}

fn epsilon_from_parts(
    problem: &PlanningProblem,
    graph: &TimeExpandedGraph,
    profit_plan: TacticalPlan,
    cap: f64,
) -> Result<TacticalPlan, PlanError> {
    let objective = Objective::EpsilonConstraint { lead_time_cap: cap };
    let mut solves = profit_plan.subproblem_solves;
    if within_cap(profit_plan.lead_time, cap) {
        let mut plan = profit_plan;
        plan.objective = objective;
        return Ok(plan);
    }

    // Find a price high enough to push lead time under the cap.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut hi_plan;
    loop {
        hi_plan = solve_parametric(problem, graph, hi)?;
        solves += 1;
        if within_cap(hi_plan.lead_time, cap) {
            break;
        }
        lo = hi;
        hi *= 2.0;
        if hi > 1e18 {
            return Err(PlanError::IterationLimit);
        }
    }
    while hi - lo > EPSILON_BISECTION_TOL * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let mid_plan = solve_parametric(problem, graph, mid)?;
        solves += 1;
        if within_cap(mid_plan.lead_time, cap) {
            hi = mid;
            hi_plan = mid_plan;
        } else {
            lo = mid;
        }
    }
    let mut plan = hi_plan;
    plan.objective = objective;
    plan.subproblem_solves = solves;
    Ok(plan)
}

/// Sweeps k evenly spaced lead-time caps between the lead-time-minimal
/// and profit-maximal plans; returns the non-dominated plans sorted by
/// lead time.
pub fn pareto_frontier(
    problem: &PlanningProblem,
    k: usize,
) -> Result<Vec<TacticalPlan>, PlanError> {
    if k < 2 {
        return Err(PlanError::InvalidArgument(alloc::format!(
            "frontier needs k >= 2 points, got {k}"
        )));
    }
    let lt_plan = plan_leadtime_min(problem)?;
    let graph = expand_checked(problem, &BTreeMap::new())?;
    let flow = min_cost_flow(&graph)?;
    let profit_plan = build_plan(problem, Objective::ProfitMax, graph.clone(), &flow);

    let l_min = lt_plan.lead_time;
    let l_max = profit_plan.lead_time.max(l_min);
    let mut plans: Vec<TacticalPlan> = Vec::new();
    for i in 0..k {
        let cap = if k == 1 {
            l_max
        } else {
            l_min + (l_max - l_min) * i as f64 / (k - 1) as f64
        };
        plans.push(epsilon_from_parts(
            problem,
            &graph,
            profit_plan.clone(),
            cap,
        )?);
    }

    // Dominance filter: sort by (lead_time, -profit), keep strict profit
    // improvements.
    plans.sort_by(|a, b| {
        a.lead_time
            .total_cmp(&b.lead_time)
            .then(b.profit.total_cmp(&a.profit))
    });
    let mut frontier: Vec<TacticalPlan> = Vec::new();
    for plan in plans {
        match frontier.last() {
            Some(last)
                if plan.profit <= last.profit + 1e-9 * last.profit.abs().max(1.0) =>
            {
                // Dominated or duplicate: no profit gained for more time.
            }
            _ => frontier.push(plan),
        }
    }
    Ok(frontier)
}

/// Dispatch on the objective enum.
pub fn plan_for_objective(
    problem: &PlanningProblem,
    objective: Objective,
) -> Result<TacticalPlan, PlanError> {
    plan_with_carries(problem, objective, &BTreeMap::new())
}

pub(crate) fn plan_with_carries(
    problem: &PlanningProblem,
    objective: Objective,
    carries: &BTreeMap<usize, f64>,
) -> Result<TacticalPlan, PlanError> {
    match objective {
        Objective::ProfitMax => plan_profit_max_with_carries(problem, carries),
        Objective::LeadTimeMin => plan_leadtime_min_with_carries(problem, carries),
        Objective::SscpMax { tolerance } => {
            plan_sscp_max_with_carries(problem, tolerance, carries)
        }
        Objective::EpsilonConstraint { lead_time_cap } => {
            // Carries are not threaded through the bisection; the frontier
            // is a static analysis tool.
            let _ = carries;
            plan_epsilon_constraint(problem, lead_time_cap)
        }
    }
}
