//! Output rendering: digest-named output directories, plan/trace/frontier
//! /comparison files, and circularity indicators. Every file embeds the
//! scenario content digest so reports stay traceable to their inputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use clsc_core::circmetrics::{circularity_indicators, CircularityIndicators, MaterialLedger};
use clsc_core::simloop::{PolicyComparison, SimTrace};
use clsc_core::tpm::TacticalPlan;

use crate::error::CliError;

/// First 12 hex chars of SHA-256 over the scenario bytes and the
/// invocation arguments that influence the result.
pub fn content_digest(scenario_bytes: &[u8], args: &[String]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(scenario_bytes);
    for arg in args {
        hasher.update([0u8]);
        hasher.update(arg.as_bytes());
    }
    hex::encode(hasher.finalize())[..12].to_string()
}

/// Creates `<base>/<command>-<digest>/`; refuses to reuse an existing
/// directory unless `force` is set.
pub fn prepare_out_dir(
    base: &Path,
    command: &str,
    digest: &str,
    force: bool,
) -> Result<PathBuf, CliError> {
    let dir = base.join(format!("{command}-{digest}"));
    if dir.exists() {
        if !force {
            return Err(CliError::Usage(format!(
                "output directory {} exists; pass --force to overwrite",
                dir.display()
            )));
        }
        fs::remove_dir_all(&dir)?;
    }
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[derive(Serialize)]
struct MetaFile<'a> {
    schema_version: &'a str,
    command: &'a str,
    scenario_digest: &'a str,
    args: &'a [String],
}

pub fn write_meta(
    dir: &Path,
    command: &str,
    digest: &str,
    args: &[String],
) -> Result<(), CliError> {
    let meta = MetaFile {
        schema_version: crate::scenario::SCHEMA_VERSION,
        command,
        scenario_digest: digest,
        args,
    };
    write_json(&dir.join("meta.json"), &meta)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Internal(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Serialize)]
struct QuantityRow {
    customer: String,
    product: String,
    period: usize,
    quantity: f64,
}

#[derive(Serialize)]
struct ArcFlowRow {
    from: String,
    to: String,
    channel: String,
    period: usize,
    quantity: f64,
}

#[derive(Serialize)]
struct NodeFlowRow {
    node: String,
    period: usize,
    quantity: f64,
}

#[derive(Serialize)]
struct PlanFile {
    schema_version: String,
    scenario_digest: String,
    objective: String,
    horizon: usize,
    profit: f64,
    lead_time: f64,
    sscp: Option<f64>,
    dinkelbach_lambdas: Vec<f64>,
    deliveries: Vec<QuantityRow>,
    collected: Vec<QuantityRow>,
    arc_flows: Vec<ArcFlowRow>,
    node_flows: Vec<NodeFlowRow>,
    expansion_used: Vec<NodeFlowRow>,
}

pub fn write_plan(dir: &Path, digest: &str, plan: &TacticalPlan) -> Result<PathBuf, CliError> {
    let quantity_rows = |map: &std::collections::BTreeMap<
        (clsc_core::NodeId, clsc_core::ProductId, usize),
        f64,
    >| {
        map.iter()
            .map(|((c, p, t), q)| QuantityRow {
                customer: c.0.clone(),
                product: p.0.clone(),
                period: *t,
                quantity: *q,
            })
            .collect::<Vec<_>>()
    };
    let node_rows = |map: &std::collections::BTreeMap<(clsc_core::NodeId, usize), f64>| {
        map.iter()
            .map(|((n, t), q)| NodeFlowRow {
                node: n.0.clone(),
                period: *t,
                quantity: *q,
            })
            .collect::<Vec<_>>()
    };
    let file = PlanFile {
        schema_version: crate::scenario::SCHEMA_VERSION.to_string(),
        scenario_digest: digest.to_string(),
        objective: plan.objective.label().to_string(),
        horizon: plan.horizon,
        profit: plan.profit,
        lead_time: plan.lead_time,
        sscp: plan.sscp,
        dinkelbach_lambdas: plan.dinkelbach_lambdas.clone(),
        deliveries: quantity_rows(&plan.deliveries),
        collected: quantity_rows(&plan.collected),
        arc_flows: plan
            .arc_flows
            .iter()
            .map(|((key, t), q)| ArcFlowRow {
                from: key.from.0.clone(),
                to: key.to.0.clone(),
                channel: key.channel.clone(),
                period: *t,
                quantity: *q,
            })
            .collect(),
        node_flows: node_rows(&plan.node_flows),
        expansion_used: node_rows(&plan.expansion_used),
    };
    let path = dir.join("plan.json");
    write_json(&path, &file)?;
    Ok(path)
}

fn fmt(value: f64) -> String {
    format!("{value}")
}

fn opt(value: Option<f64>) -> String {
    value.map(fmt).unwrap_or_default()
}

/// Columns are documented in docs/columns.md.
pub const TRACE_COLUMNS: &[&str] = &[
    "period",
    "realized_demand",
    "delivered",
    "shortfall",
    "service_level",
    "profit",
    "cum_profit",
    "lead_time",
    "cum_lead_time",
    "sscp_cum",
    "collected",
    "remanufactured",
    "recycled",
    "disposed",
    "virgin_input",
    "recovered_input",
    "expansion_used",
    "max_usage_fraction",
    "trigger",
    "replan",
    "reasons",
];

pub fn render_trace_csv(digest: &str, trace: &SimTrace) -> String {
    let mut out = String::new();
    out.push_str(&format!("# scenario_digest={digest}\n"));
    out.push_str(&TRACE_COLUMNS.join(","));
    out.push('\n');
    for row in &trace.rows {
        let demand: f64 = row.realized_demand.values().sum();
        let delivered: f64 = row.deliveries.values().sum();
        let shortfall: f64 = row.shortfalls.values().sum();
        let service = if demand > 0.0 { delivered / demand } else { 1.0 };
        let max_usage = row
            .usage
            .iter()
            .map(|(rid, used)| {
                let max = row.realized_maximal.get(rid).copied().unwrap_or(0.0);
                if max > 0.0 {
                    used / max
                } else {
                    0.0
                }
            })
            .fold(0.0f64, f64::max);
        let (trigger, reasons) = match &row.trigger {
            clsc_core::flexctl::TriggerDecision::Replan(reasons) => (1, reasons.join("|")),
            clsc_core::flexctl::TriggerDecision::Continue => (0, String::new()),
        };
        let replan = row.replan.is_some() as u8;
        let cells = [
            row.period.to_string(),
            fmt(demand),
            fmt(delivered),
            fmt(shortfall),
            fmt(service),
            fmt(row.period_profit),
            fmt(row.cumulative_profit),
            fmt(row.period_leadtime),
            fmt(row.cumulative_leadtime),
            opt(row.cumulative_sscp),
            fmt(row.collected.values().sum()),
            fmt(row.remanufactured.values().sum()),
            fmt(row.recycled.values().sum()),
            fmt(row.disposed.values().sum()),
            fmt(row.virgin_input.values().sum()),
            fmt(row.recovered_input.values().sum()),
            fmt(row.expansion_used.values().sum()),
            fmt(max_usage),
            trigger.to_string(),
            replan.to_string(),
            reasons,
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_trace(dir: &Path, digest: &str, trace: &SimTrace) -> Result<PathBuf, CliError> {
    let path = dir.join("trace.csv");
    fs::write(&path, render_trace_csv(digest, trace))?;
    Ok(path)
}

#[derive(Serialize)]
struct LedgerCell {
    product: String,
    period: usize,
    virgin_input: f64,
    delivered: f64,
    collected: f64,
    remanufactured: f64,
    recycled: f64,
    disposed: f64,
    recovered_input: f64,
}

#[derive(Serialize)]
struct IndicatorsFile {
    schema_version: String,
    scenario_digest: String,
    profit: f64,
    lead_time: f64,
    sscp: Option<f64>,
    service_level: f64,
    mean_lti: Option<f64>,
    trigger_count: usize,
    replan_count: usize,
    recovery_rate: Option<f64>,
    circular_input_fraction: Option<f64>,
    waste_fraction: Option<f64>,
    loop_share_slowing: Option<f64>,
    loop_share_closing: Option<f64>,
    ledger: Vec<LedgerCell>,
}

pub fn write_indicators(
    dir: &Path,
    digest: &str,
    trace: &SimTrace,
    ledger: &MaterialLedger,
    indicators: &CircularityIndicators,
) -> Result<PathBuf, CliError> {
    let file = IndicatorsFile {
        schema_version: crate::scenario::SCHEMA_VERSION.to_string(),
        scenario_digest: digest.to_string(),
        profit: trace.totals.profit,
        lead_time: trace.totals.lead_time,
        sscp: trace.totals.sscp,
        service_level: trace.totals.service_level,
        mean_lti: trace.totals.mean_lti,
        trigger_count: trace.totals.trigger_count,
        replan_count: trace.totals.replan_count,
        recovery_rate: indicators.recovery_rate,
        circular_input_fraction: indicators.circular_input_fraction,
        waste_fraction: indicators.waste_fraction,
        loop_share_slowing: indicators.loop_shares.map(|s| s.slowing),
        loop_share_closing: indicators.loop_shares.map(|s| s.closing),
        ledger: ledger
            .rows
            .iter()
            .map(|((product, period), row)| LedgerCell {
                product: product.0.clone(),
                period: *period,
                virgin_input: row.virgin_input,
                delivered: row.delivered,
                collected: row.collected,
                remanufactured: row.remanufactured,
                recycled: row.recycled,
                disposed: row.disposed,
                recovered_input: row.recovered_input,
            })
            .collect(),
    };
    let path = dir.join("indicators.json");
    write_json(&path, &file)?;
    Ok(path)
}

pub fn write_simulation_outputs(
    dir: &Path,
    digest: &str,
    trace: &SimTrace,
) -> Result<(), CliError> {
    write_trace(dir, digest, trace)?;
    let indicators = circularity_indicators(&trace.ledger);
    write_indicators(dir, digest, trace, &trace.ledger, &indicators)?;
    Ok(())
}

pub const FRONTIER_COLUMNS: &[&str] = &["index", "lead_time", "profit", "sscp"];

pub fn write_frontier(
    dir: &Path,
    digest: &str,
    frontier: &[TacticalPlan],
) -> Result<PathBuf, CliError> {
    let mut out = String::new();
    out.push_str(&format!("# scenario_digest={digest}\n"));
    out.push_str(&FRONTIER_COLUMNS.join(","));
    out.push('\n');
    for (i, plan) in frontier.iter().enumerate() {
        let cells = [
            i.to_string(),
            fmt(plan.lead_time),
            fmt(plan.profit),
            opt(plan.sscp),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let path = dir.join("frontier.csv");
    fs::write(&path, out)?;
    Ok(path)
}

pub const COMPARE_COLUMNS: &[&str] = &[
    "objective",
    "profit",
    "lead_time",
    "sscp",
    "mean_lti",
    "service_level",
    "trigger_count",
    "replan_count",
];

pub fn write_compare(
    dir: &Path,
    digest: &str,
    rows: &[PolicyComparison],
) -> Result<PathBuf, CliError> {
    let mut out = String::new();
    out.push_str(&format!("# scenario_digest={digest}\n"));
    out.push_str(&COMPARE_COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        let totals = &row.trace.totals;
        let cells = [
            row.objective.label().to_string(),
            fmt(totals.profit),
            fmt(totals.lead_time),
            opt(totals.sscp),
            opt(totals.mean_lti),
            fmt(totals.service_level),
            totals.trigger_count.to_string(),
            totals.replan_count.to_string(),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    let path = dir.join("compare.csv");
    fs::write(&path, out)?;
    Ok(path)
}

/// Plot column selections per source file; `report` re-emits these as
/// `<name>_plot.csv` next to a column legend.
const PLOT_SELECTIONS: &[(&str, &[&str])] = &[
    (
        "trace.csv",
        &[
            "period",
            "cum_profit",
            "cum_lead_time",
            "sscp_cum",
            "service_level",
            "recovered_input",
            "trigger",
        ],
    ),
    ("frontier.csv", &["lead_time", "profit"]),
    ("compare.csv", &["objective", "profit", "lead_time", "sscp"]),
];

/// Renders any known outputs under `from` into plot-ready columnar CSVs
/// in `dir`. Returns the produced file names.
pub fn write_report(dir: &Path, from: &Path, digest: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut produced = Vec::new();
    let mut legend = String::new();
    for (name, columns) in PLOT_SELECTIONS {
        let source = from.join(name);
        if !source.exists() {
            continue;
        }
        let text = fs::read_to_string(&source)?;
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let header: Vec<&str> = match lines.next() {
            Some(h) => h.split(',').collect(),
            None => continue,
        };
        let picks: Vec<usize> = columns
            .iter()
            .filter_map(|c| header.iter().position(|h| h == c))
            .collect();
        if picks.len() != columns.len() {
            return Err(CliError::Internal(format!(
                "{} lacks expected columns {columns:?}",
                source.display()
            )));
        }
        let mut out = String::new();
        out.push_str(&format!("# scenario_digest={digest}\n"));
        out.push_str(&columns.join(","));
        out.push('\n');
        for line in lines {
            let cells: Vec<&str> = line.split(',').collect();
            let row: Vec<&str> = picks.iter().map(|i| cells.get(*i).copied().unwrap_or("")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let target = dir.join(name.replace(".csv", "_plot.csv"));
        fs::write(&target, out)?;
        legend.push_str(&format!(
            "{}: columns {}\n",
            target.file_name().unwrap().to_string_lossy(),
            columns.join(", ")
        ));
        produced.push(target);
    }
    if produced.is_empty() {
        return Err(CliError::Usage(format!(
            "no known outputs (trace.csv, frontier.csv, compare.csv) under {}",
            from.display()
        )));
    }
    legend.push_str("see docs/columns.md for column semantics\n");
    fs::write(dir.join("legend.txt"), legend)?;
    Ok(produced)
}
