use bifractal_web::{estimate_json, model_report_json, simulate_flat, MAX_N};
use serde_json::Value;

#[test]
fn report_for_equality_and_invalid_models() {
    let r: Value = serde_json::from_str(&model_report_json(0.2, 0.7, 0.45, 0.5).unwrap()).unwrap();
    assert_eq!(r["spectral"]["valid"], true);
    assert_eq!(r["case"], "equality");
    assert!((r["dimension"].as_f64().unwrap() - 2.1).abs() < 1e-12);
    assert!(r["law_nu"]["correlation"].as_f64().unwrap() > 0.0);

    let r: Value = serde_json::from_str(&model_report_json(0.2, 0.7, 0.4, 0.5).unwrap()).unwrap();
    assert_eq!(r["expansion"]["valid"], false);
    assert_eq!(r["spectral"]["valid"], false);
    assert!(r.get("law_nu").is_none());
}

#[test]
fn simulate_then_estimate() {
    let flat = simulate_flat(0.2, 0.7, 0.6, 0.5, 400, 3).unwrap();
    assert_eq!(flat.len(), 800);
    assert_eq!(flat, simulate_flat(0.2, 0.7, 0.6, 0.5, 400, 3).unwrap());
    let r: Value = serde_json::from_str(&estimate_json(&flat, 20, true).unwrap()).unwrap();
    assert!((r["nu11_hat"].as_f64().unwrap() - 0.2).abs() < 0.2);
    assert!((r["nu22_hat"].as_f64().unwrap() - 0.7).abs() < 0.2);
}

#[test]
fn errors_are_messages() {
    assert!(simulate_flat(0.2, 0.7, 0.45, 0.5, MAX_N + 1, 0).is_err());
    assert!(simulate_flat(0.2, 0.7, 0.4, 0.5, 100, 0)
        .unwrap_err()
        .contains("invalid"));
    assert!(estimate_json(&[1.0; 7], 2, false).is_err());
    assert!(estimate_json(&[1.0; 200], 5, false)
        .unwrap_err()
        .contains("degenerate"));
}
