#![allow(dead_code)]

use bifractal::{CovarianceModel, MaternParams};

pub fn load_fixture(name: &str) -> Vec<Vec<f64>> {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

/// nu = (0.2, 0.7), rho = 0.5, unit variances and scales.
pub fn matern_params(nu12: f64) -> MaternParams {
    MaternParams::unit(0.2, 0.7, nu12, 0.5)
}

pub fn matern_case(nu12: f64) -> CovarianceModel {
    CovarianceModel::matern(matern_params(nu12)).unwrap()
}

pub fn exponential() -> CovarianceModel {
    CovarianceModel::matern(MaternParams::unit(0.5, 0.5, 0.5, 0.5)).unwrap()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn cov(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (x.len() - 1) as f64
}
