//! Versioned JSON scenario files: strict parsing with field paths,
//! semantic validation, and round-trip-stable serialization.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use clsc_core::netmodel::{
    validate_network, Arc, ArcKey, CapacitySpec, DemandKey, Direction, Network, Node, NodeId,
    NodeKind, PlanningProblem, Product, ResourceId, RouteKey,
};
use clsc_core::flexctl::{BufferThresholds, TriggerPolicy};
use clsc_core::simloop::{Distribution, Scenario, UncertaintySpec};

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: String,
    pub network: NetworkSchema,
    pub products: Vec<ProductSchema>,
    pub demand: Vec<DemandSchema>,
    pub horizon: usize,
    #[serde(default)]
    pub allow_shortfall: bool,
    pub thresholds: ThresholdsSchema,
    pub uncertainty: UncertaintySchema,
    pub simulation: SimulationSchema,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NetworkSchema {
    pub nodes: Vec<NodeSchema>,
    pub arcs: Vec<ArcSchema>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeSchema {
    pub id: String,
    pub kind: KindSchema,
    pub capacity: CapacitySchema,
    pub unit_process_cost: f64,
    pub unit_process_time: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum KindSchema {
    Supplier,
    Factory,
    DistributionCenter,
    Customer,
    CollectionCenter,
    Remanufacturer,
    Recycler,
    DisposalSite,
}

impl From<KindSchema> for NodeKind {
    fn from(k: KindSchema) -> Self {
        match k {
            KindSchema::Supplier => NodeKind::Supplier,
            KindSchema::Factory => NodeKind::Factory,
            KindSchema::DistributionCenter => NodeKind::DistributionCenter,
            KindSchema::Customer => NodeKind::Customer,
            KindSchema::CollectionCenter => NodeKind::CollectionCenter,
            KindSchema::Remanufacturer => NodeKind::Remanufacturer,
            KindSchema::Recycler => NodeKind::Recycler,
            KindSchema::DisposalSite => NodeKind::DisposalSite,
        }
    }
}

impl From<NodeKind> for KindSchema {
    fn from(k: NodeKind) -> Self {
        match k {
            NodeKind::Supplier => KindSchema::Supplier,
            NodeKind::Factory => KindSchema::Factory,
            NodeKind::DistributionCenter => KindSchema::DistributionCenter,
            NodeKind::Customer => KindSchema::Customer,
            NodeKind::CollectionCenter => KindSchema::CollectionCenter,
            NodeKind::Remanufacturer => KindSchema::Remanufacturer,
            NodeKind::Recycler => KindSchema::Recycler,
            NodeKind::DisposalSite => KindSchema::DisposalSite,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CapacitySchema {
    pub nominal_upper_bound: f64,
    pub maximal: f64,
    #[serde(default)]
    pub expansion_cost: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ArcSchema {
    pub from: String,
    pub to: String,
    pub channel: String,
    pub direction: DirectionSchema,
    pub unit_transport_cost: f64,
    pub unit_transport_time: f64,
    pub capacity: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSchema {
    Forward,
    Reverse,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProductSchema {
    pub id: String,
    pub unit_profit: f64,
    #[serde(default)]
    pub return_fraction: f64,
    pub remanufacture_yield: f64,
    pub recycle_yield: f64,
    pub disposal_fraction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DemandSchema {
    pub customer: String,
    pub product: String,
    pub period: usize,
    pub quantity: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ThresholdsSchema {
    #[serde(default)]
    pub usage_upper: Vec<UsageBoundSchema>,
    #[serde(default)]
    pub leadtime_upper: Vec<LeadTimeBoundSchema>,
    pub policy: PolicySchema,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UsageBoundSchema {
    /// "node:<id>" or "arc:<from>-><to>#<channel>".
    pub resource: String,
    pub fraction: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LeadTimeBoundSchema {
    pub origin: String,
    pub customer: String,
    pub bound: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum PolicySchema {
    Conjunctive,
    Disjunctive,
    HorizonOnly,
}

impl From<PolicySchema> for TriggerPolicy {
    fn from(p: PolicySchema) -> Self {
        match p {
            PolicySchema::Conjunctive => TriggerPolicy::Conjunctive,
            PolicySchema::Disjunctive => TriggerPolicy::Disjunctive,
            PolicySchema::HorizonOnly => TriggerPolicy::HorizonOnly,
        }
    }
}

impl From<TriggerPolicy> for PolicySchema {
    fn from(p: TriggerPolicy) -> Self {
        match p {
            TriggerPolicy::Conjunctive => PolicySchema::Conjunctive,
            TriggerPolicy::Disjunctive => PolicySchema::Disjunctive,
            TriggerPolicy::HorizonOnly => PolicySchema::HorizonOnly,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UncertaintySchema {
    pub demand_range: (f64, f64),
    pub time_range: (f64, f64),
    pub capacity_range: (f64, f64),
    pub distribution: DistributionSchema,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSchema {
    Uniform,
    Triangular { mode: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimulationSchema {
    pub sim_horizon: usize,
    #[serde(default = "default_replan_floor")]
    pub replan_floor: usize,
}

fn default_replan_floor() -> usize {
    1
}

fn parse_resource(text: &str) -> Result<ResourceId, String> {
    if let Some(id) = text.strip_prefix("node:") {
        return Ok(ResourceId::Node(NodeId::from(id)));
    }
    if let Some(rest) = text.strip_prefix("arc:") {
        let (ends, channel) = rest
            .split_once('#')
            .ok_or_else(|| format!("arc resource '{text}' misses '#channel'"))?;
        let (from, to) = ends
            .split_once("->")
            .ok_or_else(|| format!("arc resource '{text}' misses '->'"))?;
        return Ok(ResourceId::Arc(ArcKey {
            from: from.into(),
            to: to.into(),
            channel: channel.to_string(),
        }));
    }
    Err(format!(
        "resource '{text}' must start with 'node:' or 'arc:'"
    ))
}

fn format_resource(resource: &ResourceId) -> String {
    resource.to_string()
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema {
                path: "schema_version".into(),
                message: format!(
                    "unsupported version {:?}, expected {SCHEMA_VERSION:?}",
                    self.schema_version
                ),
            });
        }
        let nodes: Vec<Node> = self
            .network
            .nodes
            .into_iter()
            .map(|n| Node {
                id: n.id.into(),
                kind: n.kind.into(),
                capacity: CapacitySpec {
                    nominal_upper_bound: n.capacity.nominal_upper_bound,
                    maximal: n.capacity.maximal,
                    expansion_cost: n.capacity.expansion_cost,
                },
                unit_process_cost: n.unit_process_cost,
                unit_process_time: n.unit_process_time,
            })
            .collect();
        let arcs: Vec<Arc> = self
            .network
            .arcs
            .into_iter()
            .map(|a| Arc {
                from: a.from.into(),
                to: a.to.into(),
                channel: a.channel,
                direction: match a.direction {
                    DirectionSchema::Forward => Direction::Forward,
                    DirectionSchema::Reverse => Direction::Reverse,
                },
                unit_transport_cost: a.unit_transport_cost,
                unit_transport_time: a.unit_transport_time,
                capacity: a.capacity,
            })
            .collect();
        let products: Vec<Product> = self
            .products
            .into_iter()
            .map(|p| Product {
                id: p.id.into(),
                unit_profit: p.unit_profit,
                return_fraction: p.return_fraction,
                remanufacture_yield: p.remanufacture_yield,
                recycle_yield: p.recycle_yield,
                disposal_fraction: p.disposal_fraction,
            })
            .collect();

        let mut demand: BTreeMap<DemandKey, f64> = BTreeMap::new();
        let mut validation_lines: Vec<String> = Vec::new();
        for d in &self.demand {
            let key = DemandKey {
                customer: d.customer.as_str().into(),
                product: d.product.as_str().into(),
                period: d.period,
            };
            if demand.insert(key, d.quantity).is_some() {
                validation_lines.push(format!(
                    "demand:{}/{}/{}: duplicate entry",
                    d.customer, d.product, d.period
                ));
            }
        }

        let mut usage_upper = BTreeMap::new();
        for bound in &self.thresholds.usage_upper {
            match parse_resource(&bound.resource) {
                Ok(rid) => {
                    usage_upper.insert(rid, bound.fraction);
                }
                Err(message) => {
                    return Err(CliError::Schema {
                        path: "thresholds.usage_upper.resource".into(),
                        message,
                    })
                }
            }
        }
        let mut leadtime_upper = BTreeMap::new();
        for bound in &self.thresholds.leadtime_upper {
            leadtime_upper.insert(
                RouteKey {
                    origin: bound.origin.as_str().into(),
                    customer: bound.customer.as_str().into(),
                },
                bound.bound,
            );
        }

        let problem = PlanningProblem {
            network: Network { nodes, arcs },
            products,
            demand,
            horizon: self.horizon,
            thresholds: BufferThresholds {
                usage_upper,
                leadtime_upper,
                policy: self.thresholds.policy.into(),
            },
            allow_shortfall: self.allow_shortfall,
        };

        let report = validate_network(&problem);
        if !report.is_ok() {
            return Err(CliError::from_validation(&report));
        }
        if !validation_lines.is_empty() {
            return Err(CliError::Validation(validation_lines.join("\n")));
        }

        let scenario = Scenario {
            problem,
            uncertainty: UncertaintySpec {
                demand_range: self.uncertainty.demand_range,
                time_range: self.uncertainty.time_range,
                capacity_range: self.uncertainty.capacity_range,
                distribution: match self.uncertainty.distribution {
                    DistributionSchema::Uniform => Distribution::Uniform,
                    DistributionSchema::Triangular { mode } => Distribution::Triangular { mode },
                },
                seed: self.uncertainty.seed,
            },
            sim_horizon: self.simulation.sim_horizon,
            replan_floor: self.simulation.replan_floor,
            objective: clsc_core::tpm::Objective::ProfitMax,
        };
        scenario.validate().map_err(CliError::from)?;
        Ok(scenario)
    }

    pub fn from_scenario(scenario: &Scenario) -> ScenarioFile {
        let problem = &scenario.problem;
        ScenarioFile {
            schema_version: SCHEMA_VERSION.to_string(),
            network: NetworkSchema {
                nodes: problem
                    .network
                    .nodes
                    .iter()
                    .map(|n| NodeSchema {
                        id: n.id.0.clone(),
                        kind: n.kind.into(),
                        capacity: CapacitySchema {
                            nominal_upper_bound: n.capacity.nominal_upper_bound,
                            maximal: n.capacity.maximal,
                            expansion_cost: n.capacity.expansion_cost,
                        },
                        unit_process_cost: n.unit_process_cost,
                        unit_process_time: n.unit_process_time,
                    })
                    .collect(),
                arcs: problem
                    .network
                    .arcs
                    .iter()
                    .map(|a| ArcSchema {
                        from: a.from.0.clone(),
                        to: a.to.0.clone(),
                        channel: a.channel.clone(),
                        direction: match a.direction {
                            Direction::Forward => DirectionSchema::Forward,
                            Direction::Reverse => DirectionSchema::Reverse,
                        },
                        unit_transport_cost: a.unit_transport_cost,
                        unit_transport_time: a.unit_transport_time,
                        capacity: a.capacity,
                    })
                    .collect(),
            },
            products: problem
                .products
                .iter()
                .map(|p| ProductSchema {
                    id: p.id.0.clone(),
                    unit_profit: p.unit_profit,
                    return_fraction: p.return_fraction,
                    remanufacture_yield: p.remanufacture_yield,
                    recycle_yield: p.recycle_yield,
                    disposal_fraction: p.disposal_fraction,
                })
                .collect(),
            demand: problem
                .demand
                .iter()
                .map(|(k, q)| DemandSchema {
                    customer: k.customer.0.clone(),
                    product: k.product.0.clone(),
                    period: k.period,
                    quantity: *q,
                })
                .collect(),
            horizon: problem.horizon,
            allow_shortfall: problem.allow_shortfall,
            thresholds: ThresholdsSchema {
                usage_upper: problem
                    .thresholds
                    .usage_upper
                    .iter()
                    .map(|(rid, fraction)| UsageBoundSchema {
                        resource: format_resource(rid),
                        fraction: *fraction,
                    })
                    .collect(),
                leadtime_upper: problem
                    .thresholds
                    .leadtime_upper
                    .iter()
                    .map(|(route, bound)| LeadTimeBoundSchema {
                        origin: route.origin.0.clone(),
                        customer: route.customer.0.clone(),
                        bound: *bound,
                    })
                    .collect(),
                policy: problem.thresholds.policy.into(),
            },
            uncertainty: UncertaintySchema {
                demand_range: scenario.uncertainty.demand_range,
                time_range: scenario.uncertainty.time_range,
                capacity_range: scenario.uncertainty.capacity_range,
                distribution: match scenario.uncertainty.distribution {
                    Distribution::Uniform => DistributionSchema::Uniform,
                    Distribution::Triangular { mode } => DistributionSchema::Triangular { mode },
                },
                seed: scenario.uncertainty.seed,
            },
            simulation: SimulationSchema {
                sim_horizon: scenario.sim_horizon,
                replan_floor: scenario.replan_floor,
            },
        }
    }
}

/// Strict parse of a scenario document: malformed JSON reports line and
/// column, schema violations report the offending field path, and
/// semantic problems come back as validation issues.
pub fn parse_scenario_str(text: &str) -> Result<Scenario, CliError> {
    let deserializer = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = match serde_path_to_error::deserialize(deserializer) {
        Ok(file) => file,
        Err(err) => {
            let inner = err.inner();
            if inner.is_syntax() || inner.is_eof() {
                return Err(CliError::Parse(format!(
                    "line {}, column {}: {}",
                    inner.line(),
                    inner.column(),
                    inner
                )));
            }
            return Err(CliError::Schema {
                path: err.path().to_string(),
                message: inner.to_string(),
            });
        }
    };
    file.into_scenario()
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario_str(&text)
}

/// Canonical serialization; `parse(serialize(parse(x))) == parse(x)`.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let file = ScenarioFile::from_scenario(scenario);
    let mut text = serde_json::to_string_pretty(&file).expect("schema types serialize");
    text.push('\n');
    text
}
