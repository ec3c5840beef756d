//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Statistical criteria use a single base seed fixed before any run. When a
//! statistical criterion fails, the noise-free finite-n prediction of the same
//! series is printed next to its Monte Carlo standard error. A failure counts
//! against the exit status unless every failing series is unresolvable at the
//! configured replication count (predicted signal below two standard errors at
//! some n) while its predicted slope lies inside the band.

use std::process::ExitCode;
use std::time::Instant;

use bifractal::asymptotics::{
    asymptotic_law, finite_n_prediction, phi0_entry, phi0_entry_with_cutoff, phi0_matrix,
    sigma0_marginal, tau, FiniteNPrediction, DEFAULT_TOL,
};
use bifractal::covariance::{
    check_matern_validity, check_validity, increment_covariance_det, local_expansion,
    matern_correlation, matern_leading_coefficient, MaternParams,
};
use bifractal::estimator::{estimate_alpha, filtered_increments, gls_weights, ols_weights};
use bifractal::montecarlo::{
    fit_decay_rate, run_experiment, run_replicates, zbar_normality, ExperimentConfig,
    ExperimentSummary, DESK_N_LIST, DESK_REPS,
};
use bifractal::simulate::{simulate_path, SamplePath, SeedSpec};
use bifractal::specialfn::{bessel_k, gamma};
use bifractal::{CovarianceModel, EstimatorKind};

mod common;
use common::{cov, exponential, load_fixture, matern_case, matern_params};

const BASE_SEED: u64 = 2023;
const M_DESK: usize = 50;

struct Outcome {
    id: u32,
    title: &'static str,
    pass: bool,
    /// Failure attributable to Monte Carlo noise at the configured scale.
    noise_limited: bool,
    detail: String,
}

impl Outcome {
    fn new(id: u32, title: &'static str, pass: bool, detail: String) -> Self {
        Self {
            id,
            title,
            pass,
            noise_limited: false,
            detail,
        }
    }

    fn print(&self) {
        let status = if self.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {} {status} {}: {}",
            self.id, self.title, self.detail
        );
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion1() -> Outcome {
    let mut worst_gamma = 0.0f64;
    for r in load_fixture("gamma_oracle.csv") {
        worst_gamma = worst_gamma.max(rel(gamma(r[0]).unwrap(), r[1]));
    }
    let mut worst_k = 0.0f64;
    let mut rows = load_fixture("bessel_k_oracle.csv");
    rows.extend(load_fixture("bessel_k_grid.csv"));
    for r in &rows {
        worst_k = worst_k.max(rel(bessel_k(r[0], r[1]).unwrap(), r[2]));
    }
    let mut worst_half = 0.0f64;
    for k in 0..200 {
        let x = 0.01 * 1.05f64.powi(k);
        let exact = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp();
        worst_half = worst_half.max(rel(bessel_k(0.5, x).unwrap(), exact));
    }
    let (nu, z, h) = (0.7, 0.9, 1e-5);
    let fd = (bessel_k(nu, z + h).unwrap() - bessel_k(nu, z - h).unwrap()) / (2.0 * h);
    let identity = -bessel_k(nu + 1.0, z).unwrap() + nu / z * bessel_k(nu, z).unwrap();
    let deriv = (fd - identity).abs();
    let pass = worst_gamma <= 1e-10 && worst_k <= 1e-10 && worst_half <= 1e-12 && deriv <= 1e-6;
    Outcome::new(
        1,
        "special functions",
        pass,
        format!(
            "gamma max rel {worst_gamma:.1e}; K_nu max rel {worst_k:.1e} over {} triples; \
             K_1/2 max rel {worst_half:.1e}; derivative identity error {deriv:.1e}",
            rows.len()
        ),
    )
}

fn criterion2() -> Outcome {
    let mut worst = 0.0f64;
    for m in 2..=50 {
        let (s, l) = ols_weights(m).unwrap().constraint_residuals();
        worst = worst.max(s.abs()).max(l.abs());
        for nu in [0.1, 0.35, 0.7, 0.95] {
            let (s, l) = gls_weights(m, 1000, nu).unwrap().constraint_residuals();
            worst = worst.max(s.abs()).max(l.abs());
        }
    }
    // Dyadic affine path: every operation is exact in binary floating point.
    let n = 1024;
    let affine = SamplePath::new(
        (1..=n).map(|j| 3.0 - 2.5 * j as f64 / n as f64).collect(),
        (1..=n).map(|j| 1.0 + 0.75 * j as f64 / n as f64).collect(),
    )
    .unwrap();
    let mut affine_max = 0.0f64;
    for u in 1..=50 {
        for c in 1..=2 {
            for d in filtered_increments(&affine, u, c).unwrap() {
                affine_max = affine_max.max(d.abs());
            }
        }
    }
    let path = simulate_path(&matern_case(0.45), 512, SeedSpec::new(BASE_SEED, 0)).unwrap();
    let w = ols_weights(20).unwrap();
    let mut invariance = 0.0f64;
    for c in 1..=2 {
        let base = estimate_alpha(&path, c, &w).unwrap();
        for lambda in [0.25, 8.0, 0.1, 37.0] {
            let a = estimate_alpha(&path.scaled(lambda), c, &w).unwrap();
            invariance = invariance.max((a - base).abs());
        }
        let shifted = SamplePath::new(
            path.x1
                .iter()
                .enumerate()
                .map(|(j, x)| x + 2.0 - 0.5 * j as f64 / 512.0)
                .collect(),
            path.x2
                .iter()
                .enumerate()
                .map(|(j, x)| x - 1.0 + 3.0 * j as f64 / 512.0)
                .collect(),
        )
        .unwrap();
        invariance = invariance.max((estimate_alpha(&shifted, c, &w).unwrap() - base).abs());
    }
    let pass = worst <= 1e-10 && affine_max == 0.0 && invariance <= 1e-10;
    Outcome::new(
        2,
        "filter and weight identities",
        pass,
        format!(
            "max constraint residual {worst:.1e} (OLS and GLS, m = 2..50); \
             max affine increment {affine_max:e}; max alpha-hat change under scaling/affine shift {invariance:.1e}"
        ),
    )
}

fn criterion3() -> Outcome {
    let mut ok = sigma0_marginal(0, 1, 1, 1.0, 1.0) == 4.0
        && sigma0_marginal(1, 1, 1, 1.0, 1.0) == -2.0
        && sigma0_marginal(-1, 1, 1, 1.0, 1.0) == -2.0
        && (2..20).all(|h| sigma0_marginal(h, 1, 1, 1.0, 1.0) == 0.0)
        && tau(1, 1.0, 1.0) == 4.0;
    let unit = local_expansion(&MaternParams::unit(0.5, 0.5, 0.5, 0.5)).unwrap();
    let unit = bifractal::LocalExpansion { c11: 1.0, ..unit };
    let phi = phi0_entry(1, 1, 1, 1, &unit, DEFAULT_TOL).value;
    ok &= phi == 48.0;
    let strict = phi0_matrix(matern_case(0.6).expansion(), 10, DEFAULT_TOL);
    let cross_max = strict.block(1, 2).amax().max(strict.block(2, 1).amax());
    ok &= cross_max == 0.0;
    let eq = matern_case(0.45);
    let mut doubling = 0.0f64;
    for (u, v, i, j) in [
        (1, 1, 1, 1),
        (5, 3, 2, 2),
        (4, 7, 1, 2),
        (10, 10, 2, 2),
        (2, 9, 1, 1),
    ] {
        let e = phi0_entry(u, v, i, j, eq.expansion(), DEFAULT_TOL);
        let twice = phi0_entry_with_cutoff(u, v, i, j, eq.expansion(), 2 * e.cutoff);
        doubling = doubling.max((twice - e.value).abs());
    }
    ok &= doubling <= DEFAULT_TOL;
    Outcome::new(
        3,
        "sigma_0, tau and Phi_0 oracles",
        ok,
        format!(
            "sigma_0(0|1,1,1,1) = {}, sigma_0(1|...) = {}, phi_0 = {phi}; strict cross block max {cross_max}; \
             change when doubling H {doubling:.1e} (tol {DEFAULT_TOL:e})",
            sigma0_marginal(0, 1, 1, 1.0, 1.0),
            sigma0_marginal(1, 1, 1, 1.0, 1.0)
        ),
    )
}

fn criterion4() -> Outcome {
    let h = 1e-4;
    let mut worst_ratio = 0.0f64;
    for nu in [0.2, 0.45, 0.6, 0.7] {
        for a in [1.0, 2.5] {
            let ratio = (1.0 - matern_correlation(h, nu, a)) / h.powf(2.0 * nu);
            worst_ratio = worst_ratio.max(rel(ratio, matern_leading_coefficient(nu, a).unwrap()));
        }
    }
    let mut min_det = f64::INFINITY;
    for nu12 in [0.45, 0.6] {
        let model = matern_case(nu12);
        let e = model.expansion();
        for lag in [1e-2, 1e-3, 1e-4] {
            let scaled = increment_covariance_det(&model, lag) / lag.powf(e.alpha11 + e.alpha22);
            min_det = min_det.min(scaled);
        }
    }
    let eq_valid = check_matern_validity(&matern_params(0.45), 1024)
        .unwrap()
        .is_valid();
    let strict_valid = check_matern_validity(&matern_params(0.6), 1024)
        .unwrap()
        .is_valid();
    let rough = matern_params(0.4);
    let rough_expansion = match local_expansion(&rough) {
        Ok(e) => check_validity(&e).is_valid(),
        Err(_) => false,
    };
    let rough_spectral = check_matern_validity(&rough, 1024).unwrap();
    let rough_rejected =
        !rough_expansion && !rough_spectral.is_valid() && CovarianceModel::matern(rough).is_err();
    let pass = worst_ratio <= 5e-3 && min_det > 0.0 && eq_valid && strict_valid && rough_rejected;
    let verdict = |v: bool| if v { "valid" } else { "invalid" };
    Outcome::new(
        4,
        "covariance model",
        pass,
        format!(
            "small-lag ratio max rel error {worst_ratio:.1e} at h = 1e-4; min det/|h|^(a11+a22) {min_det:.3}; \
             nu12 = 0.45 {}, nu12 = 0.6 {}, nu12 = 0.4 {} ({rough_spectral:?})",
            verdict(eq_valid),
            verdict(strict_valid),
            verdict(rough_expansion),
        ),
    )
}

fn matern_case_config(nu12: f64) -> ExperimentConfig {
    ExperimentConfig {
        model: matern_case(nu12),
        n_list: DESK_N_LIST.to_vec(),
        reps: DESK_REPS,
        m: M_DESK,
        kind: EstimatorKind::Gls,
        base_seed: BASE_SEED,
        tol: DEFAULT_TOL,
    }
}

/// One series of a summary: its observed values, Monte Carlo standard errors
/// and noise-free predictions, on the nu scale.
struct Series {
    name: &'static str,
    observed_slope: f64,
    predicted: Vec<f64>,
    se: Vec<f64>,
}

impl Series {
    fn predicted_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = DESK_N_LIST
            .iter()
            .zip(&self.predicted)
            .map(|(&n, p)| (n as f64, p.abs()))
            .collect();
        fit_decay_rate(&pts).unwrap().slope
    }

    fn min_signal_to_noise(&self) -> f64 {
        self.predicted
            .iter()
            .zip(&self.se)
            .map(|(p, s)| p.abs() / s)
            .fold(f64::INFINITY, f64::min)
    }

    fn describe(&self) -> String {
        format!(
            "{} observed slope {:.3}, predicted {:.3}, min signal/SE {:.2}",
            self.name,
            self.observed_slope,
            self.predicted_slope(),
            self.min_signal_to_noise()
        )
    }
}

fn predictions(model: &CovarianceModel) -> Vec<FiniteNPrediction> {
    let e = model.expansion();
    DESK_N_LIST
        .iter()
        .map(|&n| {
            let w1 = gls_weights(M_DESK, n, e.alpha11 / 2.0).unwrap();
            let w2 = gls_weights(M_DESK, n, e.alpha22 / 2.0).unwrap();
            finite_n_prediction(model, n, &w1, &w2).unwrap()
        })
        .collect()
}

fn series(summary: &ExperimentSummary, pred: &[FiniteNPrediction]) -> Vec<Series> {
    let slope = |f: &Option<bifractal::RateFit>| f.as_ref().map_or(f64::NAN, |f| f.slope);
    let rows = &summary.per_n;
    let k = |i: usize| rows[i].included as f64;
    let var = |i: usize, c: usize| rows[i].components[c].variance;
    let mut out = Vec::new();
    for c in 0..2 {
        out.push(Series {
            name: if c == 0 { "|bias| nu11" } else { "|bias| nu22" },
            observed_slope: slope(&summary.slopes.bias[c]),
            predicted: pred.iter().map(|p| p.bias[c] / 2.0).collect(),
            se: (0..rows.len()).map(|i| (var(i, c) / k(i)).sqrt()).collect(),
        });
        out.push(Series {
            name: if c == 0 {
                "variance nu11"
            } else {
                "variance nu22"
            },
            observed_slope: slope(&summary.slopes.variance[c]),
            predicted: pred.iter().map(|p| p.covariance[c][c] / 4.0).collect(),
            se: (0..rows.len())
                .map(|i| var(i, c) * (2.0 / (k(i) - 1.0)).sqrt())
                .collect(),
        });
    }
    out.push(Series {
        name: "|cross-cov|",
        observed_slope: slope(&summary.slopes.cross_cov),
        predicted: pred.iter().map(|p| p.covariance[0][1] / 4.0).collect(),
        se: (0..rows.len())
            .map(|i| ((var(i, 0) * var(i, 1) + rows[i].cross_cov.powi(2)) / (k(i) - 1.0)).sqrt())
            .collect(),
    });
    out
}

fn in_band(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

/// Failing series are noise-limited when each is unresolvable at the
/// configured R but its noise-free slope satisfies the band.
fn noise_limited(failing: &[&Series], lo: f64, hi: f64) -> bool {
    !failing.is_empty()
        && failing
            .iter()
            .all(|s| s.min_signal_to_noise() < 2.0 && in_band(s.predicted_slope(), lo, hi))
}

fn criterion5(eq: &ExperimentSummary) -> Outcome {
    let slope = |f: &Option<bifractal::RateFit>| f.as_ref().map_or(f64::NAN, |f| f.slope);
    let slopes = [
        ("|bias| nu11", slope(&eq.slopes.bias[0])),
        ("|bias| nu22", slope(&eq.slopes.bias[1])),
        ("variance nu11", slope(&eq.slopes.variance[0])),
        ("variance nu22", slope(&eq.slopes.variance[1])),
        ("|cross-cov|", slope(&eq.slopes.cross_cov)),
    ];
    let pass = slopes.iter().all(|(_, s)| in_band(*s, -1.35, -0.65));
    let mut detail = slopes
        .iter()
        .map(|(name, s)| format!("{name} {s:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    detail.push_str(" (band [-1.35, -0.65])");
    let mut out = Outcome::new(5, "equality-case decay slopes", pass, detail);
    if !pass {
        let all = series(eq, &predictions(&matern_case(0.45)));
        let failing: Vec<&Series> = all
            .iter()
            .filter(|s| !in_band(s.observed_slope, -1.35, -0.65))
            .collect();
        for s in &failing {
            out.detail.push_str(&format!("; {}", s.describe()));
        }
        out.noise_limited = noise_limited(&failing, -1.35, -0.65);
    }
    out
}

fn criterion6(eq: &ExperimentSummary, strict: &ExperimentSummary) -> Outcome {
    let slope = |s: &ExperimentSummary| s.slopes.cross_cov.as_ref().map_or(f64::NAN, |f| f.slope);
    let (se, ss) = (slope(eq), slope(strict));
    let band = in_band(ss, -1.85, -1.15);
    let contrast = ss <= se - 0.25;
    let mut out = Outcome::new(
        6,
        "strict-case cross-covariance slope",
        band && contrast,
        format!(
            "strict |cross-cov| slope {ss:.3} (band [-1.85, -1.15]); equality slope {se:.3}; \
             difference {:.3} (need <= -0.25)",
            ss - se
        ),
    );
    let values: Vec<String> = strict
        .per_n
        .iter()
        .map(|r| format!("{}:{:.2e}", r.n, r.cross_cov))
        .collect();
    out.detail
        .push_str(&format!("; strict cross-cov by n [{}]", values.join(" ")));
    if !out.pass {
        let all = series(strict, &predictions(&matern_case(0.6)));
        let cross = all.iter().find(|s| s.name == "|cross-cov|").unwrap();
        out.detail.push_str(&format!("; {}", cross.describe()));
        let eq_pred = predictions(&matern_case(0.45));
        let eq_slope = fit_decay_rate(
            &DESK_N_LIST
                .iter()
                .zip(&eq_pred)
                .map(|(&n, p)| (n as f64, p.covariance[0][1].abs()))
                .collect::<Vec<_>>(),
        )
        .unwrap()
        .slope;
        out.detail.push_str(&format!(
            "; predicted contrast {:.3}",
            cross.predicted_slope() - eq_slope
        ));
        out.noise_limited =
            noise_limited(&[cross], -1.85, -1.15) && cross.predicted_slope() <= eq_slope - 0.25;
    }
    out
}

fn criterion7() -> Outcome {
    let (n, reps, m) = (1000, 1000, 5);
    let w = ols_weights(m).unwrap();
    let model = exponential();
    let law = asymptotic_law(model.expansion(), &w, &w, DEFAULT_TOL).unwrap();
    let set = run_replicates(&model, n, reps, m, EstimatorKind::Ols, BASE_SEED).unwrap();
    let a1: Vec<f64> = set.included().iter().map(|e| e.alpha11_hat).collect();
    let a2: Vec<f64> = set.included().iter().map(|e| e.alpha22_hat).collect();
    let v1 = n as f64 * cov(&a1, &a1);
    let v2 = n as f64 * cov(&a2, &a2);
    let theory = law.covariance[0][0];
    let r1 = v1 / theory - 1.0;

    let strict = run_replicates(&matern_case(0.6), n, reps, m, EstimatorKind::Ols, BASE_SEED).unwrap();
    let s1: Vec<f64> = strict.included().iter().map(|e| e.alpha11_hat).collect();
    let s2: Vec<f64> = strict.included().iter().map(|e| e.alpha22_hat).collect();
    let corr = cov(&s1, &s2) / (cov(&s1, &s1) * cov(&s2, &s2)).sqrt();
    let pass = r1.abs() <= 0.15 && corr.abs() <= 0.15;
    Outcome::new(
        7,
        "asymptotic covariance",
        pass,
        format!(
            "exponential model n = {n}, R = {reps}, m = {m}: var sqrt(n) alpha11-hat {v1:.4} vs law {theory:.4} \
             (rel {r1:+.3}; alpha22-hat {v2:.4}); strict-case corr(alpha11-hat, alpha22-hat) {corr:+.4}"
        ),
    )
}

fn criterion8() -> Outcome {
    let marginals = zbar_normality(&matern_case(0.45), 1000, 2000, 3, BASE_SEED, DEFAULT_TOL).unwrap();
    let pass = marginals.iter().all(|z| z.ks.p_value >= 0.01);
    let detail = marginals
        .iter()
        .map(|z| {
            format!(
                "(i={}, u={}) D={:.4} p={:.3}",
                z.component, z.u, z.ks.statistic, z.ks.p_value
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(
        8,
        "increment statistic normality",
        pass,
        format!("n = 1000, R = 2000, m = 3: {detail}"),
    )
}

fn criterion9(eq: &ExperimentSummary) -> Outcome {
    let (c1, c2) = (eq.coverage(1), eq.coverage(2));
    let total = eq.per_n.len();
    Outcome::new(
        9,
        "interval coverage",
        c1 >= 4 && c2 >= 4,
        format!(
            "truth ({}, {}) covered at {c1}/{total} and {c2}/{total} grid sizes",
            eq.truth[0], eq.truth[1]
        ),
    )
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    eprintln!("  [{label}: {:.1}s]", start.elapsed().as_secs_f64());
    out
}

fn main() -> ExitCode {
    println!("acceptance suite (base seed {BASE_SEED})");
    let mut outcomes = Vec::new();
    for f in [criterion1, criterion2, criterion3, criterion4] {
        let o = f();
        o.print();
        outcomes.push(o);
    }
    let eq = timed("equality experiment", || {
        run_experiment(&matern_case_config(0.45), |_| {}).unwrap()
    });
    let strict = timed("strict experiment", || {
        run_experiment(&matern_case_config(0.6), |_| {}).unwrap()
    });
    for o in [
        timed("criterion 5", || criterion5(&eq)),
        timed("criterion 6", || criterion6(&eq, &strict)),
        timed("criterion 7", criterion7),
        timed("criterion 8", criterion8),
        criterion9(&eq),
    ] {
        o.print();
        outcomes.push(o);
    }

    let passed = outcomes.iter().filter(|o| o.pass).count();
    let noisy: Vec<u32> = outcomes
        .iter()
        .filter(|o| !o.pass && o.noise_limited)
        .map(|o| o.id)
        .collect();
    let hard: Vec<u32> = outcomes
        .iter()
        .filter(|o| !o.pass && !o.noise_limited)
        .map(|o| o.id)
        .collect();
    println!(
        "summary: {passed}/{} criteria pass; failing but noise-limited at this scale: {noisy:?}; other failures: {hard:?}",
        outcomes.len()
    );
    for o in &outcomes {
        if !o.pass {
            let title = o.title;
            let reason = if o.noise_limited {
                "noise-limited"
            } else {
                "unexplained"
            };
            println!("  criterion {} ({title}) failed: {reason}", o.id);
        }
    }
    if hard.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
