//! Monte Carlo checks of the finite-sample and limit theory. Seeds are fixed.

use bifractal::asymptotics::{
    asymptotic_law, expected_zbar, phi0_matrix, zbar_covariance, DEFAULT_TOL,
};
use bifractal::covariance::{matern_correlation, matern_leading_coefficient};
use bifractal::estimator::{default_m, ols_weights, IncrementStats};
use bifractal::montecarlo::{
    normality_diagnostics, run_replicates, summarize, ExperimentConfig, Scale,
};
use bifractal::simulate::{simulate_path, GaussianSampler, SeedSpec};
use bifractal::{CovarianceModel, EstimatorKind, LocalExpansion};

mod common;
use common::{cov, exponential, mean, matern_case};

const SEED: u64 = 77;

#[test]
fn zbar_covariance_matches_exact_finite_n_values() {
    let model = matern_case(0.45);
    let (n, reps, m) = (256, 2000, 2);
    let sampler = GaussianSampler::new(&model, n).unwrap();
    let stats: Vec<IncrementStats> = (0..reps as u64)
        .map(|r| IncrementStats::compute(&sampler.draw(SeedSpec::new(SEED, r)), m).unwrap())
        .collect();
    let column =
        |c: usize, u: usize| -> Vec<f64> { stats.iter().map(|s| s.component(c)[u - 1]).collect() };
    let keys: Vec<(usize, usize)> = (1..=2).flat_map(|c| (1..=m).map(move |u| (c, u))).collect();
    for &(ci, u) in &keys {
        let xu = column(ci, u);
        let expected_mean = expected_zbar(&model, n, u, ci);
        let sd = zbar_covariance(&model, n, u, u, ci, ci).sqrt();
        assert!(
            (mean(&xu) - expected_mean).abs() < 4.0 * sd / (reps as f64).sqrt(),
            "mean of Z-bar_{ci}({u})"
        );
        for &(cj, v) in &keys {
            let xv = column(cj, v);
            let exact = zbar_covariance(&model, n, u, v, ci, cj);
            let vu = zbar_covariance(&model, n, u, u, ci, ci);
            let vv = zbar_covariance(&model, n, v, v, cj, cj);
            let se = ((vu * vv + exact * exact) / reps as f64).sqrt();
            let got = cov(&xu, &xv);
            assert!(
                (got - exact).abs() < 4.0 * se,
                "Cov(Z_{ci}({u}), Z_{cj}({v})): {got:e} vs {exact:e} (se {se:e})"
            );
        }
    }
}

#[test]
fn normalised_zbar_covariance_approaches_phi0() {
    let model = matern_case(0.45);
    let exp = model.expansion();
    let m = 3;
    let phi = phi0_matrix(exp, m, DEFAULT_TOL);
    let deviation = |n: usize| {
        let mut worst = 0.0f64;
        for (i, j) in [(1, 1), (1, 2), (2, 2)] {
            let scale = n as f64 * (n as f64).powf(exp.alpha(i) + exp.alpha(j));
            for u in 1..=m {
                for v in 1..=m {
                    let target = phi.matrix[((i - 1) * m + u - 1, (j - 1) * m + v - 1)];
                    let got = zbar_covariance(&model, n, u, v, i, j) * scale;
                    worst = worst.max((got - target).abs() / target.abs());
                }
            }
        }
        worst
    };
    let devs: Vec<f64> = [128, 256, 512].iter().map(|&n| deviation(n)).collect();
    assert!(devs[0] > devs[1] && devs[1] > devs[2], "{devs:?}");
}

fn independent_model() -> CovarianceModel {
    let (nu1, nu2) = (0.3, 0.6);
    let expansion = LocalExpansion {
        sigma1_sq: 1.0,
        sigma2_sq: 1.0,
        rho: 0.0,
        c11: matern_leading_coefficient(nu1, 1.0).unwrap(),
        c22: matern_leading_coefficient(nu2, 1.0).unwrap(),
        c12: 1.0,
        alpha11: 2.0 * nu1,
        alpha22: 2.0 * nu2,
        alpha12: 1.5,
        beta11: 2.0 - 2.0 * nu1,
        beta22: 2.0 - 2.0 * nu2,
        beta12: 0.5,
    };
    CovarianceModel::generic("independent matern", expansion, move |t| {
        [
            [matern_correlation(t, nu1, 1.0), 0.0],
            [0.0, matern_correlation(t, nu2, 1.0)],
        ]
    })
    .unwrap()
}

#[test]
fn independent_components_give_uncorrelated_estimates() {
    let model = independent_model();
    let (n, reps) = (400, 300);
    let set = run_replicates(&model, n, reps, 5, EstimatorKind::Ols, SEED).unwrap();
    let s = summarize(&set, [0.6, 1.2], Scale::Alpha).unwrap();
    let (v1, v2) = (s.components[0].variance, s.components[1].variance);
    let se = (v1 * v2 / (reps - 1) as f64).sqrt();
    assert!(s.cross_cov.abs() <= 3.0 * se, "{} vs se {se}", s.cross_cov);
    assert_eq!(s.excluded, 0);
}

#[test]
fn exponential_bias_shrinks_with_n() {
    let model = exponential();
    let bias = |n: usize| {
        let set = run_replicates(&model, n, 500, default_m(n), EstimatorKind::Gls, SEED).unwrap();
        let s = summarize(&set, [1.0, 1.0], Scale::Nu).unwrap();
        s.components[0].bias
    };
    let (b250, b1000) = (bias(250), bias(1000));
    assert!(b1000.abs() < b250.abs(), "{b250} -> {b1000}");
}

#[test]
fn equality_case_covariance_matches_limit_law() {
    let model = matern_case(0.45);
    let exp = model.expansion();
    let (n, reps, m) = (1000, 1000, 5);
    let w = ols_weights(m).unwrap();
    let law = asymptotic_law(exp, &w, &w, DEFAULT_TOL).unwrap();
    let set = run_replicates(&model, n, reps, m, EstimatorKind::Ols, SEED).unwrap();
    let est: Vec<[f64; 2]> = set
        .included()
        .iter()
        .map(|e| [e.alpha11_hat, e.alpha22_hat])
        .collect();
    let a1: Vec<f64> = est.iter().map(|e| e[0]).collect();
    let a2: Vec<f64> = est.iter().map(|e| e[1]).collect();
    let scale = n as f64;
    let empirical = [
        [scale * cov(&a1, &a1), scale * cov(&a1, &a2)],
        [scale * cov(&a2, &a1), scale * cov(&a2, &a2)],
    ];
    for (i, row) in empirical.iter().enumerate() {
        for (j, got) in row.iter().enumerate() {
            let target = law.covariance[i][j];
            assert!(
                (got / target - 1.0).abs() <= 0.25,
                "entry ({i},{j}): {got} vs {target}"
            );
        }
    }
    let report = normality_diagnostics(&est, n, &law, [exp.alpha11, exp.alpha22]).unwrap();
    assert!(report.ks.iter().all(|k| k.p_value > 0.001), "{report:?}");
}

#[test]
fn strict_case_estimates_are_nearly_uncorrelated() {
    let model = matern_case(0.6);
    let set = run_replicates(&model, 1000, 500, 5, EstimatorKind::Ols, SEED).unwrap();
    let a1: Vec<f64> = set.included().iter().map(|e| e.alpha11_hat).collect();
    let a2: Vec<f64> = set.included().iter().map(|e| e.alpha22_hat).collect();
    let corr = cov(&a1, &a2) / (cov(&a1, &a1) * cov(&a2, &a2)).sqrt();
    assert!(corr.abs() <= 0.15, "{corr}");
}

#[test]
fn single_path_sample_variance_is_sane() {
    let path = simulate_path(&matern_case(0.45), 1000, SeedSpec::new(SEED, 0)).unwrap();
    let var = cov(&path.x1, &path.x1);
    // Strong dependence on [0, 1] leaves one path's variance loosely tied to 1.
    assert!(var > 0.05 && var < 5.0, "{var}");
}

#[test]
fn experiment_config_echo_lists_design() {
    let config = ExperimentConfig {
        model: matern_case(0.45),
        n_list: vec![100, 200],
        reps: 10,
        m: 5,
        kind: EstimatorKind::Gls,
        base_seed: SEED,
        tol: DEFAULT_TOL,
    };
    let echo = config.echo();
    assert_eq!(echo["reps"], 10);
    assert_eq!(echo["estimator_kind"], "gls");
    assert_eq!(echo["matern"]["nu12"], 0.45);
    assert_eq!(config.seeds(100).len(), 10);
    assert_ne!(config.seeds(100)[0], config.seeds(200)[0]);
}
