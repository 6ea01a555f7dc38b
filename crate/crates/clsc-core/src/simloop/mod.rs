//! Discrete-period rolling-horizon simulator.
//!
//! Each period realises uncertainty, executes the current plan's flows
//! (clipped to realised capacities), monitors the volume and lead-time
//! buffers, and re-plans when the trigger fires or the plan's horizon is
//! exhausted. Quantities already travelling on loop-closing arcs are
//! frozen: a new plan takes them as fixed arrivals it cannot cancel.

mod exec;
mod sample;

pub use exec::PeriodExecution;
pub use sample::{sample_period, Distribution, RealizedPeriod, UncertaintySpec};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::circmetrics::{ledger_from_rows, MaterialLedger};
use crate::flexctl::{check_trigger, mean_lti, BufferState, TriggerDecision};
use crate::flowcore::FLOW_EPS;
use crate::netmodel::{
    validate_network, NodeId, PlanningProblem, ProductId, ResourceId, RouteKey, ValidationReport,
};
use crate::tpm::{plan_with_carries, Objective, TacticalPlan};

use exec::{execute_period, idle_period};

/// A simulation scenario: the planning problem, its uncertainty model,
/// the simulated span and the re-planning discipline.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub problem: PlanningProblem,
    pub uncertainty: UncertaintySpec,
    /// Simulated periods; at least the planning horizon.
    pub sim_horizon: usize,
    /// Minimum periods between threshold-triggered re-plans.
    pub replan_floor: usize,
    /// Objective the tactical planning model is invoked with.
    pub objective: Objective,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("scenario problem fails validation with {} issue(s)", .0.issues.len())]
    InvalidProblem(ValidationReport),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let report = validate_network(&self.problem);
        if !report.is_ok() {
            return Err(SimError::InvalidProblem(report));
        }
        self.uncertainty
            .validate()
            .map_err(SimError::InvalidScenario)?;
        if self.sim_horizon < self.problem.horizon.max(1) {
            return Err(SimError::InvalidScenario(format!(
                "sim_horizon {} below planning horizon {}",
                self.sim_horizon, self.problem.horizon
            )));
        }
        if self.replan_floor == 0 {
            return Err(SimError::InvalidScenario(
                "replan_floor must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Why a new plan was adopted.
#[derive(Clone, Debug, PartialEq)]
pub enum ReplanReason {
    Threshold(Vec<String>),
    HorizonEnd,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplanEvent {
    pub reason: ReplanReason,
    pub objective: Objective,
}

/// One period of the trace. Quantities are executed flows, not plans.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodRow {
    pub period: usize,
    pub realized_demand: BTreeMap<(NodeId, ProductId), f64>,
    pub deliveries: BTreeMap<(NodeId, ProductId), f64>,
    pub shortfalls: BTreeMap<(NodeId, ProductId), f64>,
    pub usage: BTreeMap<ResourceId, f64>,
    pub realized_maximal: BTreeMap<ResourceId, f64>,
    pub expansion_used: BTreeMap<NodeId, f64>,
    pub collected: BTreeMap<(NodeId, ProductId), f64>,
    pub remanufactured: BTreeMap<ProductId, f64>,
    pub recycled: BTreeMap<ProductId, f64>,
    pub disposed: BTreeMap<ProductId, f64>,
    pub virgin_input: BTreeMap<ProductId, f64>,
    /// Recovered input arriving over loop-closing arcs this period.
    pub recovered_input: BTreeMap<ProductId, f64>,
    pub route_leadtime: BTreeMap<RouteKey, f64>,
    pub period_profit: f64,
    pub cumulative_profit: f64,
    pub period_leadtime: f64,
    pub cumulative_leadtime: f64,
    pub cumulative_sscp: Option<f64>,
    pub trigger: TriggerDecision,
    pub replan: Option<ReplanEvent>,
    pub warnings: Vec<String>,
}

/// Whole-run aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTotals {
    pub profit: f64,
    pub lead_time: f64,
    pub sscp: Option<f64>,
    /// Total deliveries over total realized demand, in [0, 1].
    pub service_level: f64,
    pub mean_lti: Option<f64>,
    pub trigger_count: usize,
    pub replan_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub rows: Vec<PeriodRow>,
    /// Periods at which a plan was adopted (including the initial one).
    pub epochs: Vec<usize>,
    pub ledger: MaterialLedger,
    pub totals: SimTotals,
}

/// Runs the control loop over the scenario. Planner failures mid-run
/// degrade to continuing under the stale plan (or idling when none
/// covers the period) with a warning in the trace.
pub fn run(scenario: &Scenario) -> Result<SimTrace, SimError> {
    scenario.validate()?;
    let problem = &scenario.problem;

    let mut rows: Vec<PeriodRow> = Vec::new();
    let mut epochs: Vec<usize> = Vec::new();
    let mut plan: Option<TacticalPlan> = None;
    let mut plan_start = 0usize;
    let mut carries: BTreeMap<usize, BTreeMap<ProductId, f64>> = BTreeMap::new();
    let mut pending_threshold: Option<Vec<String>> = None;

    let mut cumulative_profit = 0.0;
    let mut cumulative_leadtime = 0.0;
    let mut total_delivered = 0.0;
    let mut total_demand = 0.0;
    let mut trigger_count = 0usize;
    let mut replan_count = 0usize;

    for t in 0..scenario.sim_horizon {
        let mut warnings: Vec<String> = Vec::new();
        let mut replan_event: Option<ReplanEvent> = None;

        // Adopt a new plan when the previous one is exhausted or a
        // threshold breach was recorded last period.
        let exhausted = plan
            .as_ref()
            .map_or(true, |p| t >= plan_start + p.horizon);
        let threshold = pending_threshold.take();
        if exhausted || threshold.is_some() {
            let reason = match threshold {
                Some(reasons) => ReplanReason::Threshold(reasons),
                None => ReplanReason::HorizonEnd,
            };
            let window_len = problem.horizon.min(scenario.sim_horizon - t);
            let window = problem.window(t, window_len);
            let carry_totals: BTreeMap<usize, f64> = carries
                .iter()
                .map(|(arc, m)| (*arc, m.values().sum()))
                .collect();
            match plan_with_carries(&window, scenario.objective, &carry_totals) {
                Ok(new_plan) => {
                    plan = Some(new_plan);
                    plan_start = t;
                    epochs.push(t);
                    if t > 0 {
                        replan_count += 1;
                        replan_event = Some(ReplanEvent {
                            reason,
                            objective: scenario.objective,
                        });
                    }
                }
                Err(e) => {
                    warnings.push(format!(
                        "re-planning failed ({e}); continuing under the previous plan"
                    ));
                    if exhausted {
                        plan = None;
                    }
                }
            }
        }

        let realized = sample_period(problem, &scenario.uncertainty, t);
        let exec = match &plan {
            Some(p) if t < plan_start + p.horizon => {
                execute_period(problem, p, t - plan_start, &realized, &carries)
            }
            _ => idle_period(problem),
        };

        let mut realized_maximal: BTreeMap<ResourceId, f64> = BTreeMap::new();
        for node in &problem.network.nodes {
            realized_maximal.insert(
                ResourceId::Node(node.id.clone()),
                realized.node_cap_mult[&node.id] * node.capacity.maximal,
            );
        }
        for arc in &problem.network.arcs {
            realized_maximal.insert(
                ResourceId::Arc(arc.key()),
                realized.arc_cap_mult[&arc.key()] * arc.capacity,
            );
        }

        // The horizon-end condition prompts planning of the next window;
        // it is vacuous when no simulated period follows.
        let horizon_ended = plan
            .as_ref()
            .map_or(t + 1 < scenario.sim_horizon, |p| {
                t + 1 >= plan_start + p.horizon && t + 1 < scenario.sim_horizon
            });
        let state = BufferState {
            usage: exec.usage.clone(),
            maximal: realized_maximal.clone(),
            observed_leadtime: exec.route_leadtime.clone(),
            periods_since_plan: t + 1 - plan_start,
            horizon_ended,
        };
        let decision = check_trigger(&state, &problem.thresholds);
        if decision.is_replan() {
            trigger_count += 1;
        }
        if let TriggerDecision::Replan(reasons) = &decision {
            let threshold_reasons: Vec<String> = reasons
                .iter()
                .filter(|r| r.as_str() != "horizon")
                .cloned()
                .collect();
            let floor_ok = plan.is_none()
                || (t + 1).saturating_sub(plan_start) >= scenario.replan_floor;
            if !threshold_reasons.is_empty() && floor_ok && t + 1 < scenario.sim_horizon {
                pending_threshold = Some(threshold_reasons);
            }
        }

        let mut shortfalls: BTreeMap<(NodeId, ProductId), f64> = BTreeMap::new();
        for (key, demand) in &realized.demand {
            let delivered = exec.deliveries.get(key).copied().unwrap_or(0.0);
            shortfalls.insert(key.clone(), (demand - delivered).max(0.0));
            total_demand += demand;
            total_delivered += delivered;
        }

        let recovered_input: BTreeMap<ProductId, f64> = {
            let mut acc: BTreeMap<ProductId, f64> = BTreeMap::new();
            for per_product in carries.values() {
                for (pid, qty) in per_product {
                    *acc.entry(pid.clone()).or_insert(0.0) += qty;
                }
            }
            acc
        };

        cumulative_profit += exec.period_profit;
        cumulative_leadtime += exec.period_leadtime;

        rows.push(PeriodRow {
            period: t,
            realized_demand: realized.demand.clone(),
            deliveries: exec.deliveries.clone(),
            shortfalls,
            usage: exec.usage.clone(),
            realized_maximal,
            expansion_used: exec.expansion_used.clone(),
            collected: exec.collected.clone(),
            remanufactured: exec.remanufactured.clone(),
            recycled: exec.recycled.clone(),
            disposed: exec.disposed.clone(),
            virgin_input: exec.virgin_input.clone(),
            recovered_input,
            route_leadtime: exec.route_leadtime.clone(),
            period_profit: exec.period_profit,
            cumulative_profit,
            period_leadtime: exec.period_leadtime,
            cumulative_leadtime,
            cumulative_sscp: if cumulative_leadtime > FLOW_EPS {
                Some(cumulative_profit / cumulative_leadtime)
            } else {
                None
            },
            trigger: decision,
            replan: replan_event,
            warnings,
        });

        carries = exec.carries_out;
    }

    let epoch_times: Vec<f64> = epochs.iter().map(|e| *e as f64).collect();
    let totals = SimTotals {
        profit: cumulative_profit,
        lead_time: cumulative_leadtime,
        sscp: if cumulative_leadtime > FLOW_EPS {
            Some(cumulative_profit / cumulative_leadtime)
        } else {
            None
        },
        service_level: if total_demand > FLOW_EPS {
            (total_delivered / total_demand).clamp(0.0, 1.0)
        } else {
            1.0
        },
        mean_lti: mean_lti(&epoch_times),
        trigger_count,
        replan_count,
    };
    let ledger = ledger_from_rows(&rows);
    Ok(SimTrace {
        rows,
        epochs,
        ledger,
        totals,
    })
}

/// One row of a policy comparison: the objective and its full trace.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyComparison {
    pub objective: Objective,
    pub trace: SimTrace,
}

/// Runs the scenario once per objective with identical seeds; rows come
/// back in canonical objective order.
pub fn compare_policies(
    scenario: &Scenario,
    objectives: &[Objective],
) -> Result<Vec<PolicyComparison>, SimError> {
    let mut ordered: Vec<Objective> = objectives.to_vec();
    ordered.sort_by_key(|o| o.rank());
    let mut out = Vec::with_capacity(ordered.len());
    for objective in ordered {
        let mut variant = scenario.clone();
        variant.objective = objective;
        let trace = run(&variant)?;
        out.push(PolicyComparison { objective, trace });
    }
    Ok(out)
}
