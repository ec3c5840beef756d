use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecialFnError {
    #[error("{function}: argument {arg} outside the domain")]
    Domain { function: &'static str, arg: f64 },
    #[error("gamma: argument {arg} overflows (limit 170)")]
    Overflow { arg: f64 },
    #[error("bessel_k: order {0} outside (0, 3]")]
    Order(f64),
    #[error("relative tolerance {0} must lie in (0, 1e-6)")]
    InvalidAccuracy(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("parameter {name} = {value}: {reason}")]
    Parameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid cross-covariance structure: {0}")]
    Invalid(String),
    #[error("declared local expansion does not match the evaluator: {0}")]
    ExpansionMismatch(String),
    #[error(transparent)]
    SpecialFn(#[from] SpecialFnError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("grid size n = {0} is below the minimum of 8")]
    GridTooSmall(usize),
    #[error(
        "joint covariance is not positive definite (n = {n}, largest jitter {max_jitter:e} tried)"
    )]
    NotPositiveDefinite { n: usize, max_jitter: f64 },
    #[error("sample path components have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("sample path contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("ensemble needs at least one replicate")]
    NoReplicates,
    #[error("malformed path CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// `std::io::Error` wrapper so error enums can stay `Clone + PartialEq`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct IoError(pub String);

impl From<std::io::Error> for IoError {
    fn from(e: std::io::Error) -> Self {
        IoError(e.to_string())
    }
}

impl From<std::io::Error> for SimulationError {
    fn from(e: std::io::Error) -> Self {
        SimulationError::Io(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimationError {
    #[error("dilation u = {u} needs 2u < n = {n}")]
    DilationTooLarge { u: usize, n: usize },
    #[error("need at least {min} dilations, got {m}")]
    TooFewDilations { m: usize, min: usize },
    #[error("component {component} is degenerate: Z-bar at dilation {u} is zero")]
    DegeneratePath { component: usize, u: usize },
    #[error("weight vector length {weights} does not match {expected} dilations")]
    WeightLength { weights: usize, expected: usize },
    #[error(
        "GLS weight matrix is singular for m = {m}, n = {n}; use fewer dilations or more data"
    )]
    SingularOmega { m: usize, n: usize },
    #[error("component must be 1 or 2, got {0}")]
    Component(usize),
    #[error(
        "weights violate the constraints (sum residual {sum:e}, log-slope residual {slope:e})"
    )]
    WeightConstraint { sum: f64, slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticsError {
    #[error("limit covariance of the estimators is singular")]
    SingularLaw,
    #[error("need at least {min} replicates, got {got}")]
    TooFewReplicates { min: usize, got: usize },
    #[error(transparent)]
    Estimation(#[from] EstimationError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("n = {n}: {source}")]
    Simulation {
        n: usize,
        #[source]
        source: SimulationError,
    },
    #[error("n = {n}: {source}")]
    Estimation {
        n: usize,
        #[source]
        source: EstimationError,
    },
    #[error("n = {n}: every replicate was degenerate")]
    AllExcluded { n: usize },
    #[error("rate fit: {0}")]
    RateFit(String),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}
