use thiserror::Error;

/// A failed run, classified by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl From<tempest::Error> for CliError {
    fn from(e: tempest::Error) -> Self {
        use tempest::Error as E;
        let msg = e.to_string();
        match e {
            E::NumericalFailure(_)
            | E::ConvergenceFailure { .. }
            | E::UnsupportedMatrix { .. }
            | E::EmptyInterval { .. }
            | E::DivergenceDetected { .. }
            | E::BracketError { .. }
            | E::ToleranceFailure(_)
            | E::InsufficientData { .. } => CliError::Numerical(msg),
            E::TooManyEdges { .. } | E::TooManyConfigurations { .. } => CliError::Resource(msg),
            E::ReducibleChain { .. }
            | E::ReducibleEdge { .. }
            | E::PeriodicEdge { .. }
            | E::InvalidChain(_)
            | E::InvalidRates(_)
            | E::DomainError(_)
            | E::WrongKind { .. }
            | E::WrongTime { .. }
            | E::InvalidParams(_)
            | E::NonMarkovEdge { .. }
            | E::ParamRange(_)
            | E::InvalidGraph(_) => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("json: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("csv: {e}"))
    }
}
