//! Network data model for the closed-loop supply chain: echelon nodes,
//! transport arcs, products with end-of-life yields, per-period demand,
//! and structural validation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::flexctl::BufferThresholds;

/// Identifier of a network node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub String);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

/// Identifier of a product.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductId(pub String);

impl fmt::Display for ProductId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ProductId {
    fn from(s: &str) -> Self {
        ProductId(s.to_string())
    }
}

impl From<String> for ProductId {
    fn from(s: String) -> Self {
        ProductId(s)
    }
}

/// Echelon kind of a node. Customers are demand sinks of the forward
/// chain and the sources of the reverse chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Supplier,
    Factory,
    DistributionCenter,
    Customer,
    CollectionCenter,
    Remanufacturer,
    Recycler,
    DisposalSite,
}

impl NodeKind {
    /// Forward-chain echelons, in supplier-to-customer order.
    pub fn is_forward(self) -> bool {
        matches!(
            self,
            NodeKind::Supplier
                | NodeKind::Factory
                | NodeKind::DistributionCenter
                | NodeKind::Customer
        )
    }

    pub fn is_reverse(self) -> bool {
        !self.is_forward()
    }

    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Supplier => "supplier",
            NodeKind::Factory => "factory",
            NodeKind::DistributionCenter => "distribution_center",
            NodeKind::Customer => "customer",
            NodeKind::CollectionCenter => "collection_center",
            NodeKind::Remanufacturer => "remanufacturer",
            NodeKind::Recycler => "recycler",
            NodeKind::DisposalSite => "disposal_site",
        }
    }
}

/// Per-period throughput capacity of a node. The volume buffer is the
/// difference between the maximal and the nominal upper bound; flow drawn
/// from the buffer pays `expansion_cost` per unit on top of processing.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacitySpec {
    pub nominal_upper_bound: f64,
    pub maximal: f64,
    pub expansion_cost: f64,
}

impl CapacitySpec {
    /// Volume buffer: `maximal - nominal_upper_bound`.
    pub fn buffer(&self) -> f64 {
        self.maximal - self.nominal_upper_bound
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub capacity: CapacitySpec,
    pub unit_process_cost: f64,
    pub unit_process_time: f64,
}

/// Flow direction of an arc relative to the forward chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Forward,
    Reverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    pub from: NodeId,
    pub to: NodeId,
    /// Channel tag, e.g. "primary", "alternate", "online", "offline".
    pub channel: String,
    pub direction: Direction,
    pub unit_transport_cost: f64,
    pub unit_transport_time: f64,
    pub capacity: f64,
}

impl Arc {
    pub fn key(&self) -> ArcKey {
        ArcKey {
            from: self.from.clone(),
            to: self.to.clone(),
            channel: self.channel.clone(),
        }
    }
}

/// Stable identity of an arc: endpoints plus channel tag.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcKey {
    pub from: NodeId,
    pub to: NodeId,
    pub channel: String,
}

impl fmt::Display for ArcKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}#{}", self.from, self.to, self.channel)
    }
}

/// A capacity-bearing resource: a node or an arc.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ResourceId {
    Node(NodeId),
    Arc(ArcKey),
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceId::Node(n) => write!(f, "node:{n}"),
            ResourceId::Arc(a) => write!(f, "arc:{a}"),
        }
    }
}

/// A delivery route identity: the first echelon serving the flow and the
/// customer receiving it.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RouteKey {
    pub origin: NodeId,
    pub customer: NodeId,
}

impl fmt::Display for RouteKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}=>{}", self.origin, self.customer)
    }
}

/// Product economics: profit per delivered unit (net of selling price and
/// procurement) and the end-of-life split of the return stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Product {
    pub id: ProductId,
    pub unit_profit: f64,
    /// Share of delivered units re-entering the reverse chain, in [0, 1].
    pub return_fraction: f64,
    pub remanufacture_yield: f64,
    pub recycle_yield: f64,
    pub disposal_fraction: f64,
}

pub const YIELD_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub arcs: Vec<Arc>,
}

impl Network {
    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| &n.id == id)
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    /// Loop-closing arcs are forward arcs leaving the reverse chain:
    /// Remanufacturer -> DistributionCenter and Recycler -> Factory.
    pub fn is_loop_closing(&self, arc: &Arc) -> bool {
        if arc.direction != Direction::Forward {
            return false;
        }
        match (self.node(&arc.from), self.node(&arc.to)) {
            (Some(f), Some(t)) => matches!(
                (f.kind, t.kind),
                (NodeKind::Remanufacturer, NodeKind::DistributionCenter)
                    | (NodeKind::Recycler, NodeKind::Factory)
            ),
            _ => false,
        }
    }

    /// Set of node ids reachable from any supplier over forward arcs.
    pub fn forward_reachable(&self) -> BTreeSet<NodeId> {
        let mut seen: BTreeSet<NodeId> = self
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Supplier)
            .map(|n| n.id.clone())
            .collect();
        let mut frontier: Vec<NodeId> = seen.iter().cloned().collect();
        while let Some(u) = frontier.pop() {
            for arc in &self.arcs {
                if arc.direction == Direction::Forward && arc.from == u && !seen.contains(&arc.to)
                {
                    seen.insert(arc.to.clone());
                    frontier.push(arc.to.clone());
                }
            }
        }
        seen
    }
}

/// Demand table key: one quantity per (customer, product, period).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DemandKey {
    pub customer: NodeId,
    pub product: ProductId,
    pub period: usize,
}

/// The tactical planning model input: network, products, demand over a
/// horizon, buffer thresholds and the shortfall policy.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanningProblem {
    pub network: Network,
    pub products: Vec<Product>,
    pub demand: BTreeMap<DemandKey, f64>,
    /// Number of planning periods, T >= 1.
    pub horizon: usize,
    pub thresholds: BufferThresholds,
    pub allow_shortfall: bool,
}

impl PlanningProblem {
    pub fn product(&self, id: &ProductId) -> Option<&Product> {
        self.products.iter().find(|p| &p.id == id)
    }

    pub fn product_index(&self, id: &ProductId) -> Option<usize> {
        self.products.iter().position(|p| &p.id == id)
    }

    /// Demand for (customer, product) at a period; absent entries are zero.
    pub fn demand_at(&self, customer: &NodeId, product: &ProductId, period: usize) -> f64 {
        self.demand
            .get(&DemandKey {
                customer: customer.clone(),
                product: product.clone(),
                period,
            })
            .copied()
            .unwrap_or(0.0)
    }

    /// Copy of the problem restricted to periods `[start, start + len)`,
    /// with demand re-indexed to local periods starting at zero.
    pub fn window(&self, start: usize, len: usize) -> PlanningProblem {
        let mut demand = BTreeMap::new();
        for (k, q) in &self.demand {
            if k.period >= start && k.period < start + len {
                demand.insert(
                    DemandKey {
                        customer: k.customer.clone(),
                        product: k.product.clone(),
                        period: k.period - start,
                    },
                    *q,
                );
            }
        }
        PlanningProblem {
            network: self.network.clone(),
            products: self.products.clone(),
            demand,
            horizon: len,
            thresholds: self.thresholds.clone(),
            allow_shortfall: self.allow_shortfall,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationIssue {
    /// Identifier of the offending entity, e.g. "node:factory1".
    pub entity: String,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    fn push(&mut self, entity: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            entity: entity.into(),
            message: message.into(),
        });
    }
}

fn nonneg_finite(report: &mut ValidationReport, entity: &str, what: &str, v: f64) {
    if !v.is_finite() {
        report.push(entity, format!("{what} is not finite"));
    } else if v < 0.0 {
        report.push(entity, format!("{what} {v} < 0"));
    }
}

/// Checks every structural invariant of the problem and forward-chain
/// connectivity. Issues are data, not faults: the report lists every
/// violation with the offending entity.
pub fn validate_network(problem: &PlanningProblem) -> ValidationReport {
    let mut report = ValidationReport::default();
    let net = &problem.network;

    if problem.horizon == 0 {
        report.push("problem", "horizon must be >= 1");
    }

    // Nodes.
    let mut seen_nodes: BTreeSet<&NodeId> = BTreeSet::new();
    for node in &net.nodes {
        let entity = format!("node:{}", node.id);
        if !seen_nodes.insert(&node.id) {
            report.push(&entity, "duplicate node id");
        }
        let cap = &node.capacity;
        nonneg_finite(&mut report, &entity, "nominal_upper_bound", cap.nominal_upper_bound);
        nonneg_finite(&mut report, &entity, "maximal capacity", cap.maximal);
        nonneg_finite(&mut report, &entity, "expansion_cost", cap.expansion_cost);
        if cap.nominal_upper_bound > cap.maximal {
            report.push(
                &entity,
                format!(
                    "nominal_upper_bound {} > maximal {}",
                    cap.nominal_upper_bound, cap.maximal
                ),
            );
        }
        nonneg_finite(&mut report, &entity, "unit_process_cost", node.unit_process_cost);
        nonneg_finite(&mut report, &entity, "unit_process_time", node.unit_process_time);
        if node.kind == NodeKind::Customer
            && (node.unit_process_cost != 0.0 || node.unit_process_time != 0.0)
        {
            report.push(&entity, "customer nodes must have zero process cost and time");
        }
    }

    // Arcs.
    for arc in &net.arcs {
        let entity = format!("arc:{}", arc.key());
        if arc.from == arc.to {
            report.push(&entity, "self-loop arc");
        }
        let from = net.node(&arc.from);
        let to = net.node(&arc.to);
        if from.is_none() {
            report.push(&entity, format!("unknown node {}", arc.from));
        }
        if to.is_none() {
            report.push(&entity, format!("unknown node {}", arc.to));
        }
        nonneg_finite(&mut report, &entity, "unit_transport_cost", arc.unit_transport_cost);
        nonneg_finite(&mut report, &entity, "unit_transport_time", arc.unit_transport_time);
        nonneg_finite(&mut report, &entity, "capacity", arc.capacity);
        if let (Some(from), Some(to)) = (from, to) {
            match arc.direction {
                Direction::Forward => {
                    if from.kind.is_reverse() && to.kind.is_forward() && !net.is_loop_closing(arc)
                    {
                        report.push(
                            &entity,
                            "forward arc from reverse chain into forward echelons; only \
                             remanufacturer->distribution_center and recycler->factory close \
                             the loop",
                        );
                    }
                }
                Direction::Reverse => {
                    if !matches!(from.kind, NodeKind::Customer | NodeKind::CollectionCenter) {
                        report.push(
                            &entity,
                            "reverse arcs must originate at a customer or collection center",
                        );
                    }
                }
            }
        }
    }

    // Products.
    let mut seen_products: BTreeSet<&ProductId> = BTreeSet::new();
    for product in &problem.products {
        let entity = format!("product:{}", product.id);
        if !seen_products.insert(&product.id) {
            report.push(&entity, "duplicate product id");
        }
        if !product.unit_profit.is_finite() {
            report.push(&entity, "unit_profit is not finite");
        }
        for (what, v) in [
            ("return_fraction", product.return_fraction),
            ("remanufacture_yield", product.remanufacture_yield),
            ("recycle_yield", product.recycle_yield),
            ("disposal_fraction", product.disposal_fraction),
        ] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                report.push(&entity, format!("{what} {v} outside [0, 1]"));
            }
        }
        let sum =
            product.remanufacture_yield + product.recycle_yield + product.disposal_fraction;
        if (sum - 1.0).abs() > YIELD_SUM_TOL {
            report.push(&entity, format!("yield sum {sum} != 1"));
        }
    }

    // Demand.
    for (key, q) in &problem.demand {
        let entity = format!("demand:{}/{}/{}", key.customer, key.product, key.period);
        if !q.is_finite() || *q < 0.0 {
            report.push(&entity, format!("demand quantity {q} must be >= 0"));
        }
        match net.node(&key.customer) {
            None => report.push(&entity, format!("unknown customer {}", key.customer)),
            Some(n) if n.kind != NodeKind::Customer => {
                report.push(&entity, format!("{} is not a customer node", key.customer));
            }
            _ => {}
        }
        if problem.product(&key.product).is_none() {
            report.push(&entity, format!("unknown product {}", key.product));
        }
    }

    // Threshold value ranges.
    for (rid, frac) in &problem.thresholds.usage_upper {
        if !frac.is_finite() || !(*frac > 0.0 && *frac <= 1.0) {
            report.push(
                format!("thresholds:{rid}"),
                format!("usage upper bound {frac} outside (0, 1]"),
            );
        }
    }
    for (route, bound) in &problem.thresholds.leadtime_upper {
        if !bound.is_finite() || *bound <= 0.0 {
            report.push(
                format!("thresholds:{route}"),
                format!("lead-time upper bound {bound} must be > 0"),
            );
        }
    }

    // Forward connectivity: every customer with positive demand must be
    // reachable from some supplier over forward arcs.
    let reachable = net.forward_reachable();
    let mut positive_customers: BTreeSet<&NodeId> = BTreeSet::new();
    for (key, q) in &problem.demand {
        if *q > 0.0 {
            positive_customers.insert(&key.customer);
        }
    }
    for customer in positive_customers {
        if net.node(customer).map(|n| n.kind) == Some(NodeKind::Customer)
            && !reachable.contains(customer)
        {
            report.push(
                format!("node:{customer}"),
                "unreachable customer: no forward supplier path serves its demand",
            );
        }
    }

    report
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::flexctl::{BufferThresholds, TriggerPolicy};
    use alloc::vec;

    pub(crate) fn cap(nominal: f64, maximal: f64) -> CapacitySpec {
        CapacitySpec {
            nominal_upper_bound: nominal,
            maximal,
            expansion_cost: 0.0,
        }
    }

    pub(crate) fn node(id: &str, kind: NodeKind, nominal: f64, maximal: f64) -> Node {
        Node {
            id: id.into(),
            kind,
            capacity: cap(nominal, maximal),
            unit_process_cost: if kind == NodeKind::Customer { 0.0 } else { 1.0 },
            unit_process_time: if kind == NodeKind::Customer { 0.0 } else { 0.5 },
        }
    }

    pub(crate) fn forward_arc(from: &str, to: &str, capacity: f64) -> Arc {
        Arc {
            from: from.into(),
            to: to.into(),
            channel: "primary".to_string(),
            direction: Direction::Forward,
            unit_transport_cost: 1.0,
            unit_transport_time: 1.0,
            capacity,
        }
    }

    pub(crate) fn product(id: &str, unit_profit: f64) -> Product {
        Product {
            id: id.into(),
            unit_profit,
            return_fraction: 0.0,
            remanufacture_yield: 1.0,
            recycle_yield: 0.0,
            disposal_fraction: 0.0,
        }
    }

    fn linear_chain() -> PlanningProblem {
        let network = Network {
            nodes: vec![
                node("s1", NodeKind::Supplier, 100.0, 120.0),
                node("f1", NodeKind::Factory, 100.0, 120.0),
                node("c1", NodeKind::Customer, 100.0, 100.0),
            ],
            arcs: vec![forward_arc("s1", "f1", 100.0), forward_arc("f1", "c1", 100.0)],
        };
        let mut demand = BTreeMap::new();
        demand.insert(
            DemandKey {
                customer: "c1".into(),
                product: "p".into(),
                period: 0,
            },
            10.0,
        );
        PlanningProblem {
            network,
            products: vec![product("p", 5.0)],
            demand,
            horizon: 1,
            thresholds: BufferThresholds::permissive(TriggerPolicy::HorizonOnly),
            allow_shortfall: false,
        }
    }

    #[test]
    fn well_formed_chain_has_no_issues() {
        let problem = linear_chain();
        let report = validate_network(&problem);
        assert!(report.is_ok(), "{:?}", report.issues);
    }

    #[test]
    fn yield_sum_violation_is_reported() {
        let mut problem = linear_chain();
        problem.products[0].remanufacture_yield = 0.5;
        problem.products[0].recycle_yield = 0.4;
        problem.products[0].disposal_fraction = 0.2;
        let report = validate_network(&problem);
        assert!(report
            .issues
            .iter()
            .any(|i| i.entity == "product:p" && i.message.contains("yield sum")));
    }

    #[test]
    fn unreachable_customer_is_reported() {
        let mut problem = linear_chain();
        problem.network.arcs.remove(1); // cut f1 -> c1
        let report = validate_network(&problem);
        assert!(report
            .issues
            .iter()
            .any(|i| i.entity == "node:c1" && i.message.contains("unreachable")));
    }

    #[test]
    fn validation_is_pure_and_idempotent() {
        let mut problem = linear_chain();
        problem.products[0].recycle_yield = 0.4; // make it invalid
        let first = validate_network(&problem);
        let second = validate_network(&problem);
        assert_eq!(first, second);
    }

    #[test]
    fn buffer_examples() {
        assert_eq!(cap(100.0, 120.0).buffer(), 20.0);
        assert_eq!(cap(50.0, 50.0).buffer(), 0.0);
        assert_eq!(cap(2.5, 7.5).buffer(), 5.0);
    }

    #[test]
    fn reverse_arc_origin_is_checked() {
        let mut problem = linear_chain();
        problem.network.arcs.push(Arc {
            from: "f1".into(),
            to: "s1".into(),
            channel: "return".to_string(),
            direction: Direction::Reverse,
            unit_transport_cost: 0.0,
            unit_transport_time: 0.0,
            capacity: 1.0,
        });
        let report = validate_network(&problem);
        assert!(report
            .issues
            .iter()
            .any(|i| i.message.contains("reverse arcs must originate")));
    }

    proptest::proptest! {
        // Dyadic grid keeps the subtraction exact, so the identity holds
        // without tolerance.
        #[test]
        fn buffer_is_nonnegative_and_exact(n in 0u32..=40_000, extra in 0u32..=40_000) {
            let nominal = n as f64 * 0.25;
            let maximal = nominal + extra as f64 * 0.25;
            let spec = cap(nominal, maximal);
            proptest::prop_assert!(spec.buffer() >= 0.0);
            proptest::prop_assert_eq!(spec.buffer() + nominal, maximal);
        }
    }
}
