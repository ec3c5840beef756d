//! Error type carrying the process exit code.

use std::fmt;
use std::process::ExitCode;

use bifractal::{AsymptoticsError, EstimationError, ExperimentError, ModelError, SimulationError};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed configuration, bad arguments, I/O failures.
    Config(String),
    InvalidModel(String),
    Numeric(String),
    Degenerate(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::InvalidModel(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Degenerate(_) => 4,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (label, msg) = match self {
            CliError::Config(m) => ("configuration error", m),
            CliError::InvalidModel(m) => ("invalid model", m),
            CliError::Numeric(m) => ("numerical failure", m),
            CliError::Degenerate(m) => ("degenerate data", m),
        };
        write!(f, "{label}: {msg}")
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::InvalidModel(e.to_string())
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::NotPositiveDefinite { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EstimationError> for CliError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::DegeneratePath { .. } => CliError::Degenerate(e.to_string()),
            EstimationError::SingularOmega { .. } | EstimationError::WeightConstraint { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<AsymptoticsError> for CliError {
    fn from(e: AsymptoticsError) -> Self {
        match e {
            AsymptoticsError::Estimation(inner) => inner.into(),
            AsymptoticsError::SingularLaw => CliError::Numeric(e.to_string()),
            AsymptoticsError::TooFewReplicates { .. } => CliError::Config(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::RateFit(_) => {
                CliError::Config(e.to_string())
            }
            ExperimentError::Simulation { n, source } => prefix(n, source.into()),
            ExperimentError::Estimation { n, source } => prefix(n, source.into()),
            ExperimentError::AllExcluded { .. } => CliError::Degenerate(e.to_string()),
            ExperimentError::Asymptotics(inner) => inner.into(),
            ExperimentError::Model(inner) => inner.into(),
        }
    }
}

fn prefix(n: usize, e: CliError) -> CliError {
    match e {
        CliError::Config(m) => CliError::Config(format!("n = {n}: {m}")),
        CliError::InvalidModel(m) => CliError::InvalidModel(format!("n = {n}: {m}")),
        CliError::Numeric(m) => CliError::Numeric(format!("n = {n}: {m}")),
        CliError::Degenerate(m) => CliError::Degenerate(format!("n = {n}: {m}")),
    }
}
