//! Circular-economy accounting over a simulation trace: the per-product
//! material ledger, mass balance, and loop-mechanism indicators.

use alloc::collections::BTreeMap;

use crate::netmodel::ProductId;
use crate::simloop::{PeriodRow, SimTrace};

/// Material quantities of one (product, period) cell.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LedgerRow {
    /// Quantity entering the forward chain from suppliers.
    pub virgin_input: f64,
    /// Quantity reaching customers.
    pub delivered: f64,
    /// Quantity entering the reverse chain.
    pub collected: f64,
    pub remanufactured: f64,
    pub recycled: f64,
    pub disposed: f64,
    /// Quantity re-entering forward echelons over loop-closing arcs.
    pub recovered_input: f64,
}

impl LedgerRow {
    fn add(&mut self, other: &LedgerRow) {
        self.virgin_input += other.virgin_input;
        self.delivered += other.delivered;
        self.collected += other.collected;
        self.remanufactured += other.remanufactured;
        self.recycled += other.recycled;
        self.disposed += other.disposed;
        self.recovered_input += other.recovered_input;
    }

    pub fn scaled(&self, k: f64) -> LedgerRow {
        LedgerRow {
            virgin_input: self.virgin_input * k,
            delivered: self.delivered * k,
            collected: self.collected * k,
            remanufactured: self.remanufactured * k,
            recycled: self.recycled * k,
            disposed: self.disposed * k,
            recovered_input: self.recovered_input * k,
        }
    }
}

/// Mass accounting per (product, period).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaterialLedger {
    pub rows: BTreeMap<(ProductId, usize), LedgerRow>,
}

impl MaterialLedger {
    pub fn totals(&self) -> LedgerRow {
        let mut total = LedgerRow::default();
        for row in self.rows.values() {
            total.add(row);
        }
        total
    }

    pub fn get(&self, product: &ProductId, period: usize) -> LedgerRow {
        self.rows
            .get(&(product.clone(), period))
            .copied()
            .unwrap_or_default()
    }
}

/// Pure aggregation of executed trace flows into the ledger.
pub fn ledger_from_rows(rows: &[PeriodRow]) -> MaterialLedger {
    let mut ledger = MaterialLedger::default();
    for row in rows {
        let mut bump = |product: &ProductId, f: &dyn Fn(&mut LedgerRow)| {
            f(ledger
                .rows
                .entry((product.clone(), row.period))
                .or_default())
        };
        for ((_, product), qty) in &row.deliveries {
            bump(product, &|r| r.delivered += qty);
        }
        for ((_, product), qty) in &row.collected {
            bump(product, &|r| r.collected += qty);
        }
        for (product, qty) in &row.remanufactured {
            bump(product, &|r| r.remanufactured += qty);
        }
        for (product, qty) in &row.recycled {
            bump(product, &|r| r.recycled += qty);
        }
        for (product, qty) in &row.disposed {
            bump(product, &|r| r.disposed += qty);
        }
        for (product, qty) in &row.virgin_input {
            bump(product, &|r| r.virgin_input += qty);
        }
        for (product, qty) in &row.recovered_input {
            bump(product, &|r| r.recovered_input += qty);
        }
    }
    ledger
}

pub fn ledger_from_trace(trace: &SimTrace) -> MaterialLedger {
    ledger_from_rows(&trace.rows)
}

/// Share of the collected stream kept in the loop, split by mechanism:
/// slowing (remanufacture) and closing (recycling).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopShares {
    pub slowing: f64,
    pub closing: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CircularityIndicators {
    /// (remanufactured + recycled) / collected.
    pub recovery_rate: Option<f64>,
    /// recovered_input / (recovered_input + virgin_input).
    pub circular_input_fraction: Option<f64>,
    /// disposed / collected.
    pub waste_fraction: Option<f64>,
    pub loop_shares: Option<LoopShares>,
}

const EPS: f64 = 1e-12;

/// Indicators over the ledger totals; undefined ratios come back as `None`
/// rather than faults.
pub fn circularity_indicators(ledger: &MaterialLedger) -> CircularityIndicators {
    let t = ledger.totals();
    let mut out = CircularityIndicators::default();
    if t.collected > EPS {
        out.recovery_rate = Some((t.remanufactured + t.recycled) / t.collected);
        out.waste_fraction = Some(t.disposed / t.collected);
        out.loop_shares = Some(LoopShares {
            slowing: t.remanufactured / t.collected,
            closing: t.recycled / t.collected,
        });
    }
    if t.recovered_input + t.virgin_input > EPS {
        out.circular_input_fraction = Some(t.recovered_input / (t.recovered_input + t.virgin_input));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flexctl::TriggerDecision;
    use crate::netmodel::tests_support::one_route_problem;
    use crate::simloop::{run, Scenario, UncertaintySpec};
    use crate::tpm::Objective;
    use alloc::collections::BTreeMap;
    use alloc::vec;
    use alloc::vec::Vec;

    fn hand_row() -> PeriodRow {
        // Delivered 100, return fraction 0.3, yields (0.5, 0.3, 0.2):
        // collected 30, remanufactured 15, recycled 9, disposed 6.
        PeriodRow {
            period: 0,
            realized_demand: BTreeMap::from([(("c1".into(), "p".into()), 100.0)]),
            deliveries: BTreeMap::from([(("c1".into(), "p".into()), 100.0)]),
            shortfalls: BTreeMap::new(),
            usage: BTreeMap::new(),
            realized_maximal: BTreeMap::new(),
            expansion_used: BTreeMap::new(),
            collected: BTreeMap::from([(("c1".into(), "p".into()), 30.0)]),
            remanufactured: BTreeMap::from([("p".into(), 15.0)]),
            recycled: BTreeMap::from([("p".into(), 9.0)]),
            disposed: BTreeMap::from([("p".into(), 6.0)]),
            virgin_input: BTreeMap::from([("p".into(), 100.0)]),
            recovered_input: BTreeMap::new(),
            route_leadtime: BTreeMap::new(),
            period_profit: 0.0,
            cumulative_profit: 0.0,
            period_leadtime: 0.0,
            cumulative_leadtime: 0.0,
            cumulative_sscp: None,
            trigger: TriggerDecision::Continue,
            replan: None,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn hand_built_trace_aggregates_exactly() {
        let ledger = ledger_from_rows(&[hand_row()]);
        let row = ledger.get(&"p".into(), 0);
        assert_eq!(row.collected, 30.0);
        assert_eq!(row.remanufactured, 15.0);
        assert_eq!(row.recycled, 9.0);
        assert_eq!(row.disposed, 6.0);
        // Mass balance.
        assert!((row.collected - (row.remanufactured + row.recycled + row.disposed)).abs() < 1e-9);
    }

    #[test]
    fn indicators_on_hand_built_ledger() {
        let ledger = ledger_from_rows(&[hand_row()]);
        let ind = circularity_indicators(&ledger);
        assert!((ind.recovery_rate.unwrap() - 0.8).abs() < 1e-12);
        assert!((ind.waste_fraction.unwrap() - 0.2).abs() < 1e-12);
        let shares = ind.loop_shares.unwrap();
        assert!((shares.slowing - 0.5).abs() < 1e-12);
        assert!((shares.closing - 0.3).abs() < 1e-12);
        assert!((shares.slowing + shares.closing + ind.waste_fraction.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn all_disposal_boundary() {
        let mut ledger = MaterialLedger::default();
        ledger.rows.insert(
            ("p".into(), 0),
            LedgerRow {
                virgin_input: 50.0,
                delivered: 50.0,
                collected: 10.0,
                remanufactured: 0.0,
                recycled: 0.0,
                disposed: 10.0,
                recovered_input: 0.0,
            },
        );
        let ind = circularity_indicators(&ledger);
        assert_eq!(ind.recovery_rate, Some(0.0));
        assert_eq!(ind.waste_fraction, Some(1.0));
    }

    #[test]
    fn zero_return_trace_has_zero_reverse_fields() {
        let problem = one_route_problem(2, 5.0, 1.0, 10.0, 100.0);
        let sim_horizon = problem.horizon;
        let trace = run(&Scenario {
            problem,
            uncertainty: UncertaintySpec::none(3),
            sim_horizon,
            replan_floor: 1,
            objective: Objective::ProfitMax,
        })
        .unwrap();
        let totals = trace.ledger.totals();
        assert_eq!(totals.collected, 0.0);
        assert_eq!(totals.remanufactured, 0.0);
        assert_eq!(totals.recycled, 0.0);
        assert_eq!(totals.disposed, 0.0);
        assert_eq!(totals.recovered_input, 0.0);
        assert!(totals.delivered > 0.0);
    }

    #[test]
    fn indicators_are_scale_invariant() {
        let ledger = ledger_from_rows(&[hand_row()]);
        let mut scaled = MaterialLedger::default();
        for (key, row) in &ledger.rows {
            scaled.rows.insert(key.clone(), row.scaled(3.5));
        }
        let a = circularity_indicators(&ledger);
        let b = circularity_indicators(&scaled);
        assert!((a.recovery_rate.unwrap() - b.recovery_rate.unwrap()).abs() < 1e-12);
        assert!((a.waste_fraction.unwrap() - b.waste_fraction.unwrap()).abs() < 1e-12);
    }

    proptest::proptest! {
        #[test]
        fn indicator_ranges_hold(
            reman in 0.0f64..100.0,
            recycled in 0.0f64..100.0,
            disposed in 0.0f64..100.0,
            virgin in 0.0f64..100.0,
            recovered in 0.0f64..100.0,
        ) {
            let collected = reman + recycled + disposed;
            let mut ledger = MaterialLedger::default();
            ledger.rows.insert(("p".into(), 0), LedgerRow {
                virgin_input: virgin,
                delivered: collected * 2.0,
                collected,
                remanufactured: reman,
                recycled,
                disposed,
                recovered_input: recovered,
            });
            let ind = circularity_indicators(&ledger);
            for value in [ind.recovery_rate, ind.circular_input_fraction, ind.waste_fraction] {
                if let Some(v) = value {
                    proptest::prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
                }
            }
            if collected > 1e-9 {
                let recovery = ind.recovery_rate.unwrap();
                let waste = ind.waste_fraction.unwrap();
                proptest::prop_assert!((recovery + waste - 1.0).abs() < 1e-9);
                let shares = ind.loop_shares.unwrap();
                proptest::prop_assert!((shares.slowing + shares.closing + waste - 1.0).abs() < 1e-9);
            }
        }
    }
}
