//! wasm-bindgen exports for the static demo page in `www/`.
//!
//! Each export returns a JSON string (or a flat `Float64Array` for paths) and
//! throws a JS error with the library message on failure. The `*_json`
//! functions are the same operations as plain Rust, used by the native tests.

use bifractal::asymptotics::DEFAULT_TOL;
use bifractal::{
    asymptotic_law, check_matern_validity, estimate_path, local_expansion, ols_weights,
    simulate_path, trajectory_dimension, CovarianceModel, EstimatorKind, MaternParams, SamplePath,
    SeedSpec, Validity,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; the Cholesky factor is O(n^3).
pub const MAX_N: usize = 1500;
/// Dilations used for the limit law in the model report.
const REPORT_M: usize = 5;

fn params(nu11: f64, nu22: f64, nu12: f64, rho: f64) -> MaternParams {
    MaternParams::unit(nu11, nu22, nu12, rho)
}

fn verdict(v: Result<Validity, String>) -> serde_json::Value {
    match v {
        Ok(Validity::Valid) => json!({ "valid": true }),
        Ok(Validity::Invalid(reason)) => json!({ "valid": false, "reason": reason.to_string() }),
        Err(e) => json!({ "valid": false, "reason": e }),
    }
}

/// Validity verdicts, trajectory dimension and, for valid models, the limit
/// law of the OLS estimators with five dilations.
pub fn model_report_json(nu11: f64, nu22: f64, nu12: f64, rho: f64) -> Result<String, String> {
    let p = params(nu11, nu22, nu12, rho);
    let expansion = local_expansion(&p);
    let spectral = check_matern_validity(&p, 512).map_err(|e| e.to_string());
    let dimension = trajectory_dimension(2.0 * nu11, 2.0 * nu22).ok();
    let mut report = json!({
        "expansion": verdict(expansion.as_ref().map(|_| Validity::Valid).map_err(|e| e.to_string())),
        "spectral": verdict(spectral),
        "dimension": dimension,
    });
    if let (Ok(exp), true) = (&expansion, report["spectral"]["valid"] == true) {
        let w = ols_weights(REPORT_M).map_err(|e| e.to_string())?;
        let law = asymptotic_law(exp, &w, &w, DEFAULT_TOL).map_err(|e| e.to_string())?;
        report["case"] = json!(if exp.is_equality_case() {
            "equality"
        } else {
            "strict"
        });
        report["law_nu"] = json!(law.nu_scale());
    }
    Ok(report.to_string())
}

/// Path of length `n` as `[x1..., x2...]`.
pub fn simulate_flat(
    nu11: f64,
    nu22: f64,
    nu12: f64,
    rho: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if n > MAX_N {
        return Err(format!("n = {n} exceeds the demo limit of {MAX_N}"));
    }
    let model =
        CovarianceModel::matern(params(nu11, nu22, nu12, rho)).map_err(|e| e.to_string())?;
    let path = simulate_path(&model, n, SeedSpec::new(seed, 0)).map_err(|e| e.to_string())?;
    Ok(path.x1.into_iter().chain(path.x2).collect())
}

/// Estimate record for a flat `[x1..., x2...]` path.
pub fn estimate_json(flat: &[f64], m: usize, gls: bool) -> Result<String, String> {
    if !flat.len().is_multiple_of(2) {
        return Err("path must hold two components of equal length".into());
    }
    let n = flat.len() / 2;
    let path =
        SamplePath::new(flat[..n].to_vec(), flat[n..].to_vec()).map_err(|e| e.to_string())?;
    let kind = if gls {
        EstimatorKind::Gls
    } else {
        EstimatorKind::Ols
    };
    let record = estimate_path(&path, m, kind).map_err(|e| e.to_string())?;
    serde_json::to_string(&record).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn model_report(nu11: f64, nu22: f64, nu12: f64, rho: f64) -> Result<String, JsError> {
    model_report_json(nu11, nu22, nu12, rho).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(
    nu11: f64,
    nu22: f64,
    nu12: f64,
    rho: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    simulate_flat(nu11, nu22, nu12, rho, n, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn estimate(flat: &[f64], m: usize, gls: bool) -> Result<String, JsError> {
    estimate_json(flat, m, gls).map_err(|e| JsError::new(&e))
}
