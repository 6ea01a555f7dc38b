//! CLI error taxonomy mapped onto process exit codes.

use clsc_core::netmodel::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("validation failed:\n{0}")]
    Validation(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Parse(_) | CliError::Schema { .. } => 3,
            CliError::Validation(_) => 4,
            CliError::Infeasible(_) => 5,
            CliError::Internal(_) => 6,
        }
    }

    pub fn from_validation(report: &ValidationReport) -> CliError {
        let mut lines = Vec::new();
        for issue in &report.issues {
            lines.push(format!("  {}: {}", issue.entity, issue.message));
        }
        CliError::Validation(lines.join("\n"))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

impl From<clsc_core::tpm::PlanError> for CliError {
    fn from(e: clsc_core::tpm::PlanError) -> Self {
        use clsc_core::tpm::PlanError;
        match e {
            PlanError::InvalidProblem(report) => CliError::from_validation(&report),
            PlanError::Infeasible(msg) => CliError::Infeasible(msg.to_string()),
            PlanError::NoPositiveRatio => {
                CliError::Infeasible("no plan earns positive profit; try --objective profit".into())
            }
            PlanError::DegenerateZeroTime => {
                CliError::Infeasible("positive profit at zero lead time; SSCP undefined".into())
            }
            PlanError::InvalidArgument(msg) => CliError::Usage(msg.to_string()),
            PlanError::IterationLimit | PlanError::Solver(_) => {
                CliError::Internal(e.to_string())
            }
        }
    }
}

impl From<clsc_core::simloop::SimError> for CliError {
    fn from(e: clsc_core::simloop::SimError) -> Self {
        use clsc_core::simloop::SimError;
        match e {
            SimError::InvalidProblem(report) => CliError::from_validation(&report),
            SimError::InvalidScenario(msg) => CliError::Validation(msg.to_string()),
        }
    }
}
