//! `clsc` — closed-loop supply chain planning and simulation commands.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clsc_cli::error::CliError;
use clsc_cli::output;
use clsc_cli::scenario::parse_scenario;
use clsc_core::simloop::{compare_policies, run, Scenario};
use clsc_core::tpm::{pareto_frontier, plan_for_objective, Objective, DEFAULT_SSCP_TOLERANCE};
use clsc_core::flexctl::TriggerPolicy;

#[derive(Parser)]
#[command(
    name = "clsc",
    version,
    about = "Tactical planning and rolling-horizon simulation for closed-loop supply chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ObjectiveArg {
    Profit,
    Leadtime,
    Sscp,
}

impl ObjectiveArg {
    fn to_objective(self) -> Objective {
        match self {
            ObjectiveArg::Profit => Objective::ProfitMax,
            ObjectiveArg::Leadtime => Objective::LeadTimeMin,
            ObjectiveArg::Sscp => Objective::SscpMax {
                tolerance: DEFAULT_SSCP_TOLERANCE,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Conjunctive,
    Disjunctive,
    Horizon,
}

impl PolicyArg {
    fn to_policy(self) -> TriggerPolicy {
        match self {
            PolicyArg::Conjunctive => TriggerPolicy::Conjunctive,
            PolicyArg::Disjunctive => TriggerPolicy::Disjunctive,
            PolicyArg::Horizon => TriggerPolicy::HorizonOnly,
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario file (JSON, schema version 1).
    #[arg(long)]
    scenario: PathBuf,
    /// Base directory for the digest-named output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overwrite an existing output directory.
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the tactical planning model once and write plan.json.
    Plan {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Profit)]
        objective: ObjectiveArg,
    },
    /// Run the rolling-horizon simulation and write trace.csv plus
    /// indicators.json.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Profit)]
        objective: ObjectiveArg,
        /// Override the scenario's uncertainty seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario's trigger policy.
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
    },
    /// Sweep the profit / lead-time Pareto frontier and write frontier.csv.
    Frontier {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of lead-time caps to sweep (>= 2).
        #[arg(long, default_value_t = 5)]
        points: usize,
    },
    /// Simulate once per objective with identical seeds; write compare.csv.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
    },
    /// Render a prior output directory into plot-ready columnar files.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Output directory of a previous plan/simulate/frontier/compare run.
        #[arg(long)]
        from: PathBuf,
    },
}

fn load(common: &CommonArgs) -> Result<(Vec<u8>, Scenario), CliError> {
    let bytes = std::fs::read(&common.scenario)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", common.scenario.display())))?;
    let scenario = parse_scenario(&common.scenario)?;
    Ok((bytes, scenario))
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v}")).unwrap_or_else(|| "undefined".into())
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Plan { common, objective } => {
            let (bytes, scenario) = load(&common)?;
            let args = vec![
                "plan".to_string(),
                format!("objective={}", objective.to_objective().label()),
            ];
            let digest = output::content_digest(&bytes, &args);
            let plan = plan_for_objective(&scenario.problem, objective.to_objective())?;
            let dir = output::prepare_out_dir(&common.out, "plan", &digest, common.force)?;
            output::write_plan(&dir, &digest, &plan)?;
            output::write_meta(&dir, "plan", &digest, &args)?;
            println!(
                "plan objective={} profit {} lead_time {} sscp {}",
                plan.objective.label(),
                plan.profit,
                plan.lead_time,
                fmt_opt(plan.sscp)
            );
            println!("wrote {}", dir.join("plan.json").display());
            Ok(())
        }
        Command::Simulate {
            common,
            objective,
            seed,
            policy,
        } => {
            let (bytes, mut scenario) = load(&common)?;
            scenario.objective = objective.to_objective();
            if let Some(seed) = seed {
                scenario.uncertainty.seed = seed;
            }
            if let Some(policy) = policy {
                scenario.problem.thresholds.policy = policy.to_policy();
            }
            let args = vec![
                "simulate".to_string(),
                format!("objective={}", scenario.objective.label()),
                format!("seed={}", scenario.uncertainty.seed),
                format!("policy={:?}", scenario.problem.thresholds.policy),
            ];
            let digest = output::content_digest(&bytes, &args);
            let trace = run(&scenario)?;
            let dir = output::prepare_out_dir(&common.out, "simulate", &digest, common.force)?;
            output::write_simulation_outputs(&dir, &digest, &trace)?;
            output::write_meta(&dir, "simulate", &digest, &args)?;
            println!(
                "simulate objective={} periods {} profit {} lead_time {} sscp {} service {} mean_lti {} triggers {} replans {}",
                scenario.objective.label(),
                trace.rows.len(),
                trace.totals.profit,
                trace.totals.lead_time,
                fmt_opt(trace.totals.sscp),
                trace.totals.service_level,
                fmt_opt(trace.totals.mean_lti),
                trace.totals.trigger_count,
                trace.totals.replan_count,
            );
            println!("wrote {}", dir.join("trace.csv").display());
            Ok(())
        }
        Command::Frontier { common, points } => {
            if points < 2 {
                return Err(CliError::Usage(format!(
                    "--points must be >= 2, got {points}"
                )));
            }
            let (bytes, scenario) = load(&common)?;
            let args = vec!["frontier".to_string(), format!("points={points}")];
            let digest = output::content_digest(&bytes, &args);
            let frontier = pareto_frontier(&scenario.problem, points)?;
            let dir = output::prepare_out_dir(&common.out, "frontier", &digest, common.force)?;
            output::write_frontier(&dir, &digest, &frontier)?;
            output::write_meta(&dir, "frontier", &digest, &args)?;
            println!("frontier points {}", frontier.len());
            for plan in &frontier {
                println!(
                    "  lead_time {} profit {} sscp {}",
                    plan.lead_time,
                    plan.profit,
                    fmt_opt(plan.sscp)
                );
            }
            println!("wrote {}", dir.join("frontier.csv").display());
            Ok(())
        }
        Command::Compare {
            common,
            seed,
            policy,
        } => {
            let (bytes, mut scenario) = load(&common)?;
            if let Some(seed) = seed {
                scenario.uncertainty.seed = seed;
            }
            if let Some(policy) = policy {
                scenario.problem.thresholds.policy = policy.to_policy();
            }
            let args = vec![
                "compare".to_string(),
                format!("seed={}", scenario.uncertainty.seed),
                format!("policy={:?}", scenario.problem.thresholds.policy),
            ];
            let digest = output::content_digest(&bytes, &args);
            let objectives = [
                Objective::ProfitMax,
                Objective::LeadTimeMin,
                Objective::SscpMax {
                    tolerance: DEFAULT_SSCP_TOLERANCE,
                },
            ];
            let rows = compare_policies(&scenario, &objectives)?;
            let dir = output::prepare_out_dir(&common.out, "compare", &digest, common.force)?;
            output::write_compare(&dir, &digest, &rows)?;
            output::write_meta(&dir, "compare", &digest, &args)?;
            for row in &rows {
                println!(
                    "{}: profit {} lead_time {} sscp {} service {} triggers {}",
                    row.objective.label(),
                    row.trace.totals.profit,
                    row.trace.totals.lead_time,
                    fmt_opt(row.trace.totals.sscp),
                    row.trace.totals.service_level,
                    row.trace.totals.trigger_count,
                );
            }
            println!("wrote {}", dir.join("compare.csv").display());
            Ok(())
        }
        Command::Report { common, from } => {
            let (bytes, _scenario) = load(&common)?;
            let args = vec!["report".to_string(), format!("from={}", from.display())];
            let digest = output::content_digest(&bytes, &args);
            let dir = output::prepare_out_dir(&common.out, "report", &digest, common.force)?;
            let produced = output::write_report(&dir, &from, &digest)?;
            output::write_meta(&dir, "report", &digest, &args)?;
            for file in &produced {
                println!("wrote {}", file.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
