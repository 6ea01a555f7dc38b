//! Uncertainty realisation: bounded multiplicative perturbation of
//! demand, times and capacities, drawn from a counter-based stream so a
//! period's realisation is independent of how many draws preceded it.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;

use crate::netmodel::{ArcKey, NodeId, PlanningProblem, ProductId};
use crate::rng::{stream_id, CounterRng};

/// Multiplier distribution over a relative interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distribution {
    Uniform,
    /// Triangular with the given mode (a multiplier inside the interval).
    Triangular { mode: f64 },
}

/// Bounded multiplicative uncertainty around the base data.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintySpec {
    pub demand_range: (f64, f64),
    pub time_range: (f64, f64),
    pub capacity_range: (f64, f64),
    pub distribution: Distribution,
    pub seed: u64,
}

impl UncertaintySpec {
    /// Degenerate spec: every multiplier is exactly 1.
    pub fn none(seed: u64) -> Self {
        UncertaintySpec {
            demand_range: (1.0, 1.0),
            time_range: (1.0, 1.0),
            capacity_range: (1.0, 1.0),
            distribution: Distribution::Uniform,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, (lo, hi)) in [
            ("demand_range", self.demand_range),
            ("time_range", self.time_range),
            ("capacity_range", self.capacity_range),
        ] {
            if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo {
                return Err(format!("{name} [{lo}, {hi}] must satisfy 0 <= lo <= hi"));
            }
            if let Distribution::Triangular { mode } = self.distribution {
                if hi > lo && !(mode >= lo && mode <= hi) {
                    return Err(format!("triangular mode {mode} outside {name} [{lo}, {hi}]"));
                }
            }
        }
        Ok(())
    }
}

/// Multipliers and realized demand for one period.
#[derive(Clone, Debug, PartialEq)]
pub struct RealizedPeriod {
    pub period: usize,
    /// Realized demand quantity per (customer, product) for this period.
    pub demand: BTreeMap<(NodeId, ProductId), f64>,
    pub node_time_mult: BTreeMap<NodeId, f64>,
    pub arc_time_mult: BTreeMap<ArcKey, f64>,
    pub node_cap_mult: BTreeMap<NodeId, f64>,
    pub arc_cap_mult: BTreeMap<ArcKey, f64>,
}

fn draw_multiplier(
    rng: &CounterRng,
    class: &str,
    entity: &str,
    period: usize,
    range: (f64, f64),
    distribution: Distribution,
) -> f64 {
    let (lo, hi) = range;
    if hi <= lo {
        return lo;
    }
    let stream = stream_id(class) ^ stream_id(entity);
    let u = rng.unit(stream, period as u64);
    match distribution {
        Distribution::Uniform => lo + (hi - lo) * u,
        Distribution::Triangular { mode } => {
            let span = hi - lo;
            let cut = (mode - lo) / span;
            if u < cut {
                lo + libm::sqrt(u * span * (mode - lo))
            } else {
                hi - libm::sqrt((1.0 - u) * span * (hi - mode))
            }
        }
    }
}

/// Realises one period. Pure in `(spec.seed, period, entity)`: calling it
/// twice gives identical results, and other periods' draws do not shift it.
pub fn sample_period(
    problem: &PlanningProblem,
    spec: &UncertaintySpec,
    period: usize,
) -> RealizedPeriod {
    let rng = CounterRng::new(spec.seed);
    let mut demand = BTreeMap::new();
    for (key, base) in &problem.demand {
        if key.period != period {
            continue;
        }
        let entity = format!("{}|{}", key.customer, key.product);
        let mult = draw_multiplier(
            &rng,
            "demand",
            &entity,
            period,
            spec.demand_range,
            spec.distribution,
        );
        demand.insert((key.customer.clone(), key.product.clone()), base * mult);
    }

    let mut node_time_mult = BTreeMap::new();
    let mut node_cap_mult = BTreeMap::new();
    for node in &problem.network.nodes {
        let entity = format!("{}", node.id);
        node_time_mult.insert(
            node.id.clone(),
            draw_multiplier(&rng, "time", &entity, period, spec.time_range, spec.distribution),
        );
        node_cap_mult.insert(
            node.id.clone(),
            draw_multiplier(
                &rng,
                "capacity",
                &entity,
                period,
                spec.capacity_range,
                spec.distribution,
            ),
        );
    }
    let mut arc_time_mult = BTreeMap::new();
    let mut arc_cap_mult = BTreeMap::new();
    for arc in &problem.network.arcs {
        let key = arc.key();
        let entity = format!("{key}");
        arc_time_mult.insert(
            key.clone(),
            draw_multiplier(&rng, "time", &entity, period, spec.time_range, spec.distribution),
        );
        arc_cap_mult.insert(
            key,
            draw_multiplier(
                &rng,
                "capacity",
                &entity,
                period,
                spec.capacity_range,
                spec.distribution,
            ),
        );
    }

    RealizedPeriod {
        period,
        demand,
        node_time_mult,
        arc_time_mult,
        node_cap_mult,
        arc_cap_mult,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::tests_support::one_route_problem;

    #[test]
    fn degenerate_interval_reproduces_base() {
        let problem = one_route_problem(2, 5.0, 2.0, 10.0, 100.0);
        let realized = sample_period(&problem, &UncertaintySpec::none(7), 1);
        assert_eq!(realized.demand[&("c1".into(), "p".into())], 10.0);
        assert!(realized.node_time_mult.values().all(|m| *m == 1.0));
        assert!(realized.arc_cap_mult.values().all(|m| *m == 1.0));
    }

    #[test]
    fn same_seed_same_period_is_identical() {
        let problem = one_route_problem(3, 5.0, 2.0, 10.0, 100.0);
        let spec = UncertaintySpec {
            demand_range: (0.8, 1.2),
            time_range: (0.9, 1.1),
            capacity_range: (0.95, 1.0),
            distribution: Distribution::Uniform,
            seed: 42,
        };
        assert_eq!(
            sample_period(&problem, &spec, 2),
            sample_period(&problem, &spec, 2)
        );
    }

    #[test]
    fn uniform_multiplier_mean_is_centred() {
        let problem = one_route_problem(1, 5.0, 2.0, 10.0, 100.0);
        let spec = UncertaintySpec {
            demand_range: (0.8, 1.2),
            time_range: (1.0, 1.0),
            capacity_range: (1.0, 1.0),
            distribution: Distribution::Uniform,
            seed: 99,
        };
        // 1e5 periods sample the demand multiplier stream.
        let n = 100_000usize;
        let mut sum = 0.0;
        for t in 0..n {
            let mut p = problem.clone();
            // Move the single demand entry to period t so each draw is fresh.
            let (key, qty) = p.demand.iter().next().map(|(k, q)| (k.clone(), *q)).unwrap();
            p.demand.clear();
            let mut moved = key.clone();
            moved.period = t;
            p.demand.insert(moved, qty);
            let realized = sample_period(&p, &spec, t);
            sum += realized.demand[&("c1".into(), "p".into())] / qty;
        }
        let mean = sum / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn triangular_mode_is_respected() {
        let spec = UncertaintySpec {
            demand_range: (0.5, 1.5),
            time_range: (1.0, 1.0),
            capacity_range: (1.0, 1.0),
            distribution: Distribution::Triangular { mode: 0.75 },
            seed: 1,
        };
        assert!(spec.validate().is_ok());
        let bad = UncertaintySpec {
            distribution: Distribution::Triangular { mode: 2.0 },
            ..spec
        };
        assert!(bad.validate().is_err());
    }
}
