//! Deterministic synthetic scenario generation: layered forward networks
//! with a reverse tail, density-sampled arcs, and connectivity repair so
//! every instance is feasible for full-service planning.

use std::collections::BTreeMap;

use clsc_core::flexctl::{BufferThresholds, TriggerPolicy};
use clsc_core::netmodel::{
    Arc, CapacitySpec, DemandKey, Direction, Network, Node, NodeKind, PlanningProblem, Product,
    ResourceId,
};
use clsc_core::rng::CounterRng;
use clsc_core::simloop::{Distribution, Scenario, UncertaintySpec};
use clsc_core::tpm::Objective;

use crate::error::CliError;

#[derive(Clone, Copy, Debug)]
pub struct GenerateSpec {
    /// Suppliers, factories, distribution centers, customers.
    pub echelon_sizes: (usize, usize, usize, usize),
    pub periods: usize,
    /// Probability of each inter-layer arc, in (0, 1].
    pub density: f64,
    pub seed: u64,
}

/// Parameter ranges used by the generator (documented for reproducibility):
/// processing costs 1..=3, unit times 0.5..=2.0 in half steps, transport
/// costs 1..=3, demand 5..=20 per customer and period. Capacities are
/// sized to the total per-period demand with a 25% volume buffer, which
/// guarantees feasibility once connectivity is repaired.
pub fn generate_instance(spec: &GenerateSpec) -> Result<Scenario, CliError> {
    let (n_sup, n_fac, n_dc, n_cus) = spec.echelon_sizes;
    if n_sup == 0 || n_fac == 0 || n_dc == 0 || n_cus == 0 {
        return Err(CliError::Usage("echelon sizes must be >= 1".into()));
    }
    if spec.periods == 0 {
        return Err(CliError::Usage("periods must be >= 1".into()));
    }
    if !(spec.density > 0.0 && spec.density <= 1.0) {
        return Err(CliError::Usage(format!(
            "density {} outside (0, 1]",
            spec.density
        )));
    }

    let rng = CounterRng::new(spec.seed);
    let mut counter = 0u64;
    let mut next = |stream: u64| {
        counter += 1;
        (stream, counter)
    };

    // Demand first; capacities are sized from it.
    let mut demand: BTreeMap<DemandKey, f64> = BTreeMap::new();
    let mut peak_period_demand = 0.0f64;
    for t in 0..spec.periods {
        let mut period_total = 0.0;
        for c in 0..n_cus {
            let (s, k) = next(1);
            let qty = rng.uniform_usize(s, k, 5, 20) as f64;
            period_total += qty;
            demand.insert(
                DemandKey {
                    customer: format!("c{c}").into(),
                    product: "p0".into(),
                    period: t,
                },
                qty,
            );
        }
        peak_period_demand = peak_period_demand.max(period_total);
    }

    let half_steps = |rng: &CounterRng, s: u64, k: u64| rng.uniform_usize(s, k, 1, 4) as f64 * 0.5;
    let mut nodes: Vec<Node> = Vec::new();
    let mut make_layer = |prefix: &str, kind: NodeKind, count: usize, nodes: &mut Vec<Node>| {
        for i in 0..count {
            let (s, k) = next(2);
            let cost = if kind == NodeKind::Customer {
                0.0
            } else {
                rng.uniform_usize(s, k, 1, 3) as f64
            };
            let (s, k) = next(3);
            let time = if kind == NodeKind::Customer {
                0.0
            } else {
                half_steps(&rng, s, k)
            };
            let nominal = (peak_period_demand * 1.2).ceil();
            nodes.push(Node {
                id: format!("{prefix}{i}").into(),
                kind,
                capacity: CapacitySpec {
                    nominal_upper_bound: nominal,
                    maximal: (nominal * 1.25).ceil(),
                    expansion_cost: 1.0,
                },
                unit_process_cost: cost,
                unit_process_time: time,
            });
        }
    };
    make_layer("s", NodeKind::Supplier, n_sup, &mut nodes);
    make_layer("f", NodeKind::Factory, n_fac, &mut nodes);
    make_layer("d", NodeKind::DistributionCenter, n_dc, &mut nodes);
    make_layer("c", NodeKind::Customer, n_cus, &mut nodes);
    make_layer("cc", NodeKind::CollectionCenter, 1, &mut nodes);
    make_layer("rm", NodeKind::Remanufacturer, 1, &mut nodes);
    make_layer("rc", NodeKind::Recycler, 1, &mut nodes);
    make_layer("dp", NodeKind::DisposalSite, 1, &mut nodes);

    // Density-sampled forward arcs between consecutive layers, repaired so
    // every node keeps at least one inbound and one outbound arc.
    let mut arcs: Vec<Arc> = Vec::new();
    let layers: [(&str, usize, &str, usize); 3] = [
        ("s", n_sup, "f", n_fac),
        ("f", n_fac, "d", n_dc),
        ("d", n_dc, "c", n_cus),
    ];
    let arc_cap = (peak_period_demand * 1.5).ceil();
    for (from_prefix, from_count, to_prefix, to_count) in layers {
        let mut chosen = vec![vec![false; to_count]; from_count];
        for row in chosen.iter_mut() {
            for cell in row.iter_mut() {
                let (s, k) = next(4);
                *cell = rng.unit(s, k) < spec.density;
            }
        }
        for (i, row) in chosen.iter_mut().enumerate() {
            if !row.iter().any(|c| *c) {
                row[i % to_count] = true;
            }
        }
        for j in 0..to_count {
            if !chosen.iter().any(|row| row[j]) {
                chosen[j % from_count][j] = true;
            }
        }
        for (i, row) in chosen.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if !cell {
                    continue;
                }
                let (s, k) = next(5);
                let cost = rng.uniform_usize(s, k, 1, 3) as f64;
                let (s, k) = next(6);
                let time = half_steps(&rng, s, k);
                arcs.push(Arc {
                    from: format!("{from_prefix}{i}").into(),
                    to: format!("{to_prefix}{j}").into(),
                    channel: "primary".into(),
                    direction: Direction::Forward,
                    unit_transport_cost: cost,
                    unit_transport_time: time,
                    capacity: arc_cap,
                });
            }
        }
    }

    // Reverse tail: every customer feeds the collection center, which
    // routes to the remanufacturer, recycler and disposal site; loops
    // close back into the first distribution center and factory.
    let reverse_arc = |from: String, to: String, direction: Direction| Arc {
        from: from.into(),
        to: to.into(),
        channel: "return".into(),
        direction,
        unit_transport_cost: 1.0,
        unit_transport_time: 0.5,
        capacity: arc_cap,
    };
    for c in 0..n_cus {
        arcs.push(reverse_arc(format!("c{c}"), "cc0".into(), Direction::Reverse));
    }
    arcs.push(reverse_arc("cc0".into(), "rm0".into(), Direction::Reverse));
    arcs.push(reverse_arc("cc0".into(), "rc0".into(), Direction::Reverse));
    arcs.push(reverse_arc("cc0".into(), "dp0".into(), Direction::Reverse));
    arcs.push(reverse_arc("rm0".into(), "d0".into(), Direction::Forward));
    arcs.push(reverse_arc("rc0".into(), "f0".into(), Direction::Forward));

    let usage_upper = nodes
        .iter()
        .filter(|n| n.kind != NodeKind::Customer)
        .map(|n| ResourceId::Node(n.id.clone()))
        .collect::<Vec<_>>();

    let problem = PlanningProblem {
        network: Network { nodes, arcs },
        products: vec![Product {
            id: "p0".into(),
            unit_profit: 25.0,
            return_fraction: 0.3,
            remanufacture_yield: 0.5,
            recycle_yield: 0.3,
            disposal_fraction: 0.2,
        }],
        demand,
        horizon: spec.periods,
        thresholds: BufferThresholds::uniform_usage(
            usage_upper,
            0.9,
            TriggerPolicy::Disjunctive,
        ),
        allow_shortfall: false,
    };

    Ok(Scenario {
        problem,
        uncertainty: UncertaintySpec {
            demand_range: (0.9, 1.1),
            time_range: (1.0, 1.0),
            capacity_range: (1.0, 1.0),
            distribution: Distribution::Uniform,
            seed: spec.seed,
        },
        sim_horizon: spec.periods,
        replan_floor: 1,
        objective: Objective::ProfitMax,
    })
}
