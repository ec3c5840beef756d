//! Simulation, joint fractal-index estimation and asymptotic theory for
//! bivariate stationary Gaussian processes observed on a regular grid of `[0, 1]`.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod covariance;
pub mod error;
pub mod estimator;
pub mod montecarlo;
pub mod simulate;
pub mod specialfn;

pub use asymptotics::{
    asymptotic_law, expected_zbar, finite_n_prediction, matern_rate_exponents, phi0_entry,
    phi0_matrix, rate_exponents, sigma0_cross, sigma0_marginal, tau, AsymptoticLaw,
    FiniteNPrediction, Phi0Matrix, RateExponents,
};
pub use covariance::{
    check_matern_validity, check_validity, component_graph_dimension, evaluate_cov,
    local_expansion, matern_correlation, trajectory_dimension, CovarianceModel, InvalidReason,
    LocalExpansion, MaternParams, Validity,
};
pub use error::*;
pub use estimator::{
    default_m, estimate_alpha, estimate_joint, estimate_path, filtered_increments, gls_omega,
    gls_weights, ols_weights, zbar, EstimateRecord, EstimatorKind, IncrementStats, JointEstimate,
    WeightVector,
};
pub use montecarlo::{
    fit_decay_rate, normality_diagnostics, run_experiment, run_replicates, ExperimentConfig,
    ExperimentSummary, RateFit,
};
pub use simulate::{
    simulate_ensemble, simulate_path, GaussianSampler, GridSpec, SamplePath, SeedSpec,
};
pub use specialfn::{bessel_k, gamma, Accuracy};
