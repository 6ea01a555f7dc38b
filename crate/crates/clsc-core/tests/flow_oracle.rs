//! Brute-force oracle for the min-cost flow solver: exhaustive enumeration
//! of all feasible integral flows on small random DAG instances. The
//! oracle is independent of the solver and was written first; on integral
//! data the solver must match it exactly.

use clsc_core::flowcore::{
    min_cost_flow, residual_optimality_check, EdgeTag, TimeExpandedGraph, VertexTag,
};
use clsc_core::rng::CounterRng;

/// Exhaustive min-cost search over integral flows of a DAG with integer
/// capacities. Vertices are processed in index (topological) order; each
/// vertex distributes its balance over its out-edges.
struct Oracle {
    n: usize,
    edges: Vec<(usize, usize, i64, i64)>, // tail, head, cap, cost
    out: Vec<Vec<usize>>,
    best: Option<i64>,
}

impl Oracle {
    fn new(n: usize, edges: Vec<(usize, usize, i64, i64)>) -> Self {
        let mut out = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            assert!(e.0 < e.1, "oracle needs topologically indexed edges");
            out[e.0].push(i);
        }
        Oracle {
            n,
            edges,
            out,
            best: None,
        }
    }

    fn solve(&mut self, supply: &[i64]) -> Option<i64> {
        self.best = None;
        let mut balance = supply.to_vec();
        self.vertex(0, &mut balance, 0);
        self.best
    }

    fn vertex(&mut self, v: usize, balance: &mut Vec<i64>, cost: i64) {
        if v == self.n {
            self.best = Some(self.best.map_or(cost, |b| b.min(cost)));
            return;
        }
        if balance[v] < 0 && !self.out[v].is_empty() {
            return; // cannot emit negative flow
        }
        if self.out[v].is_empty() {
            if balance[v] != 0 {
                return; // stranded balance at a dead end
            }
            self.vertex(v + 1, balance, cost);
            return;
        }
        self.distribute(v, 0, balance[v], balance, cost);
    }

    fn distribute(
        &mut self,
        v: usize,
        slot: usize,
        remaining: i64,
        balance: &mut Vec<i64>,
        cost: i64,
    ) {
        if slot == self.out[v].len() {
            if remaining == 0 {
                self.vertex(v + 1, balance, cost);
            }
            return;
        }
        // Prune: the rest of the out-edges must be able to absorb the rest.
        let later_cap: i64 = self.out[v][slot..].iter().map(|e| self.edges[*e].2).sum();
        if remaining > later_cap {
            return;
        }
        let edge_idx = self.out[v][slot];
        let (_, head, cap, ecost) = self.edges[edge_idx];
        let max_f = cap.min(remaining);
        for f in 0..=max_f {
            balance[head] += f;
            self.distribute(v, slot + 1, remaining - f, balance, cost + f * ecost);
            balance[head] -= f;
        }
    }
}

/// Random DAG instance: `n` vertices, edges point forward in index order,
/// vertex 0 supplies, vertex n-1 absorbs, plus a zero-cost slack edge so
/// every instance is feasible. Costs may be negative.
fn random_instance(
    seed: u64,
    n: usize,
    extra_edges: usize,
    max_cap: i64,
    supply: i64,
) -> (TimeExpandedGraph, Vec<(usize, usize, i64, i64)>, Vec<i64>) {
    let rng = CounterRng::new(seed);
    let mut raw: Vec<(usize, usize, i64, i64)> = Vec::new();
    // A spine so the sink is reachable, then random forward chords.
    for v in 0..n - 1 {
        let cap = rng.uniform_usize(1, v as u64, 1, max_cap as usize) as i64;
        let cost = rng.uniform_usize(2, v as u64, 0, 8) as i64 - 3;
        raw.push((v, v + 1, cap, cost));
    }
    for k in 0..extra_edges {
        let a = rng.uniform_usize(3, k as u64, 0, n - 2);
        let b = rng.uniform_usize(4, k as u64, a + 1, n - 1);
        let cap = rng.uniform_usize(5, k as u64, 0, max_cap as usize) as i64;
        let cost = rng.uniform_usize(6, k as u64, 0, 8) as i64 - 3;
        raw.push((a, b, cap, cost));
    }
    // Slack: source -> sink at zero cost keeps the instance feasible.
    raw.push((0, n - 1, supply, 0));
    raw.sort();

    let mut graph = TimeExpandedGraph::new();
    for v in 0..n {
        graph.add_vertex(if v == 0 {
            VertexTag::Source
        } else if v == n - 1 {
            VertexTag::Sink
        } else {
            VertexTag::NodeIn { node: v, period: 0 }
        });
    }
    for (tail, head, cap, cost) in &raw {
        graph.add_edge(*tail, *head, *cap as f64, *cost as f64, 0.0, EdgeTag::Null);
    }
    let mut supplies = vec![0i64; n];
    supplies[0] = supply;
    supplies[n - 1] = -supply;
    graph.add_supply(0, supply as f64);
    graph.add_supply(n - 1, -supply as f64);
    (graph, raw, supplies)
}

#[test]
fn solver_matches_exhaustive_enumeration() {
    for seed in 0..40u64 {
        let rng = CounterRng::new(seed ^ 0xabcd);
        let supply = rng.uniform_usize(0, 0, 1, 4) as i64;
        let (graph, raw, supplies) = random_instance(seed, 6, 4, 5, supply);
        let mut oracle = Oracle::new(6, raw);
        let expected = oracle
            .solve(&supplies)
            .expect("slack edge keeps instances feasible");

        let flow = min_cost_flow(&graph).expect("solver feasible");
        assert_eq!(
            flow.total_cost, expected as f64,
            "seed {seed}: solver {} vs oracle {expected}",
            flow.total_cost
        );
        assert!(residual_optimality_check(&graph, &flow), "seed {seed}");
        assert!(flow.conservation_gap(&graph) < 1e-9, "seed {seed}");
        assert!(flow.within_capacity(&graph), "seed {seed}");
    }
}

#[test]
fn scaling_costs_preserves_optimality_of_the_support() {
    for seed in 0..10u64 {
        let (graph, _, _) = random_instance(seed, 6, 4, 5, 3);
        let flow = min_cost_flow(&graph).unwrap();
        for k in [0.5, 3.0, 11.0] {
            let scaled = graph.with_costs(|e| e.cost * k);
            let carried = clsc_core::flowcore::FlowAssignment::recompute(&scaled, flow.flow.clone());
            assert!(
                residual_optimality_check(&scaled, &carried),
                "seed {seed} scale {k}"
            );
            let rescaled = min_cost_flow(&scaled).unwrap();
            assert!(
                (rescaled.total_cost - k * flow.total_cost).abs() < 1e-6 * (1.0 + k),
                "seed {seed} scale {k}"
            );
        }
    }
}
