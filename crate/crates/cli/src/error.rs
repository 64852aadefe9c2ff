use teamdp::dp::DpError;
use teamdp::model::Violation;
use teamdp::oracle::OracleError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("scenario failed validation with {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error("{0}")]
    Budget(String),
    #[error("malformed scenario: {0}")]
    Malformed(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Budget(_) => 3,
            CliError::Malformed(_) => 4,
            CliError::Usage(_) | CliError::Io(_) | CliError::Solver(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Invalid(_) => "validation",
            CliError::Budget(_) => "budget_exceeded",
            CliError::Malformed(_) => "malformed_scenario",
            CliError::Io(_) => "io",
            CliError::Solver(_) => "solver",
        }
    }
}

impl From<DpError> for CliError {
    fn from(e: DpError) -> Self {
        match e {
            DpError::NodeBudgetExceeded { .. } | DpError::Oracle(OracleError::BudgetExceeded { .. }) => {
                CliError::Budget(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}
