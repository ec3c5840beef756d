//! Replicated simulation and estimation over a grid of sample sizes, with
//! summary statistics, log-log decay fits and normality diagnostics.

use std::io::Write;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::asymptotics::{expected_zbar, phi0_matrix, AsymptoticLaw};
use crate::covariance::CovarianceModel;
use crate::error::{AsymptoticsError, EstimationError, ExperimentError};
use crate::estimator::{estimate_path, EstimatorKind, IncrementStats, JointEstimate};
use crate::simulate::{GaussianSampler, SeedSpec};

/// Desk-scale grid of sample sizes.
pub const DESK_N_LIST: [usize; 5] = [200, 400, 600, 800, 1000];
pub const DESK_REPS: usize = 300;
/// Replications of the full-scale design.
pub const FULL_REPS: usize = 1000;
/// Values below this are dropped before taking logs in slope fits.
pub const SLOPE_FLOOR: f64 = 1e-15;
const Z_975: f64 = 1.959_963_984_540_054;

/// The 81-point grid `200, 210, ..., 1000`.
pub fn full_n_list() -> Vec<usize> {
    (200..=1000).step_by(10).collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: CovarianceModel,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub m: usize,
    pub kind: EstimatorKind,
    pub base_seed: u64,
    /// Truncation tolerance passed to the asymptotics engine.
    pub tol: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!(
                "n_list must be strictly increasing: {:?}",
                self.n_list
            ));
        }
        if self.reps < 2 {
            return bad(format!("need at least 2 replications, got {}", self.reps));
        }
        if self.m < 2 || 2 * self.m >= self.n_list[0] {
            return bad(format!(
                "m = {} must satisfy 2 <= m and 2m < min n = {}",
                self.m, self.n_list[0]
            ));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        Ok(())
    }

    /// Seeds used at grid size `n`, in replicate order.
    pub fn seeds(&self, n: usize) -> Vec<SeedSpec> {
        replicate_seeds(self.base_seed, n, self.reps)
    }

    /// Reported scale: `nu = alpha / 2` for Matern models, `alpha` otherwise.
    pub fn scale(&self) -> Scale {
        if self.model.matern_params().is_some() {
            Scale::Nu
        } else {
            Scale::Alpha
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model.name(),
            "matern": self.model.matern_params(),
            "expansion": self.model.expansion(),
            "n_list": self.n_list,
            "reps": self.reps,
            "m": self.m,
            "estimator_kind": self.kind,
            "base_seed": self.base_seed,
            "tol": self.tol,
            "seed_scheme": "chacha8(key = splitmix64(base_seed ^ splitmix64(n)), stream = replicate)",
        })
    }
}

pub fn replicate_seeds(base_seed: u64, n: usize, reps: usize) -> Vec<SeedSpec> {
    (0..reps as u64)
        .map(|r| SeedSpec::for_grid(base_seed, n, r))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Nu,
    Alpha,
}

impl Scale {
    pub fn factor(self) -> f64 {
        match self {
            Scale::Nu => 0.5,
            Scale::Alpha => 1.0,
        }
    }
}

/// Per-replicate estimates at one grid size; `None` marks a degenerate
/// replicate that was excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateSet {
    pub n: usize,
    pub estimates: Vec<Option<JointEstimate>>,
}

impl ReplicateSet {
    pub fn included(&self) -> Vec<JointEstimate> {
        self.estimates.iter().flatten().copied().collect()
    }

    pub fn excluded(&self) -> usize {
        self.estimates.iter().filter(|e| e.is_none()).count()
    }
}

fn map_replicates<T: Send>(seeds: &[SeedSpec], f: impl Fn(SeedSpec) -> T + Sync) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        seeds.par_iter().map(|s| f(*s)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        seeds.iter().map(|s| f(*s)).collect()
    }
}

/// Simulates `reps` paths at grid size `n` and estimates both indices on each.
pub fn run_replicates(
    model: &CovarianceModel,
    n: usize,
    reps: usize,
    m: usize,
    kind: EstimatorKind,
    base_seed: u64,
) -> Result<ReplicateSet, ExperimentError> {
    let sampler = GaussianSampler::new(model, n)
        .map_err(|source| ExperimentError::Simulation { n, source })?;
    let seeds = replicate_seeds(base_seed, n, reps);
    let results = map_replicates(&seeds, |seed| estimate_path(&sampler.draw(seed), m, kind));
    let estimates = results
        .into_iter()
        .map(|r| match r {
            Ok(rec) => Ok(Some(rec.joint())),
            Err(EstimationError::DegeneratePath { .. }) => Ok(None),
            Err(source) => Err(ExperimentError::Estimation { n, source }),
        })
        .collect::<Result<_, _>>()?;
    Ok(ReplicateSet { n, estimates })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentStats {
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    pub included: usize,
    pub excluded: usize,
    pub components: [ComponentStats; 2],
    pub cross_cov: f64,
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / (x.len() - 1) as f64
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    covariance(x, y) / (covariance(x, x) * covariance(y, y)).sqrt()
}

/// Mean, bias, variance and a normal 95% interval (`mean +- 1.96 sd`) of the
/// included estimates on the requested scale.
pub fn summarize(
    set: &ReplicateSet,
    truth: [f64; 2],
    scale: Scale,
) -> Result<NSummary, ExperimentError> {
    let included = set.included();
    if included.len() < 2 {
        return Err(ExperimentError::AllExcluded { n: set.n });
    }
    let f = scale.factor();
    let values = [
        included
            .iter()
            .map(|e| e.alpha11_hat * f)
            .collect::<Vec<_>>(),
        included
            .iter()
            .map(|e| e.alpha22_hat * f)
            .collect::<Vec<_>>(),
    ];
    let stats = |i: usize| {
        let mu = mean(&values[i]);
        let var = covariance(&values[i], &values[i]);
        let half = Z_975 * var.sqrt();
        ComponentStats {
            mean: mu,
            bias: mu - truth[i] * f,
            variance: var,
            ci_low: mu - half,
            ci_high: mu + half,
        }
    };
    Ok(NSummary {
        n: set.n,
        included: included.len(),
        excluded: set.excluded(),
        components: [stats(0), stats(1)],
        cross_cov: covariance(&values[0], &values[1]),
    })
}

/// Least-squares fit of `ln value` on `ln n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Sample sizes whose value fell below [`SLOPE_FLOOR`] and were dropped.
    pub dropped: Vec<usize>,
}

pub fn fit_decay_rate(points: &[(f64, f64)]) -> Result<RateFit, ExperimentError> {
    if points.len() < 3 {
        return Err(ExperimentError::RateFit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(n, v)) = points.iter().find(|(n, v)| !(*v > 0.0) || !(*n > 0.0)) {
        return Err(ExperimentError::RateFit(format!(
            "non-positive value {v} at n = {n}"
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (mean(&x), mean(&y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        dropped: Vec::new(),
    })
}

/// Fits `|value|` against `n`, dropping values under the floor. `None` when
/// fewer than three points survive.
pub fn fit_abs_series(series: &[(usize, f64)]) -> Option<RateFit> {
    let (kept, dropped): (Vec<_>, Vec<_>) =
        series.iter().partition(|(_, v)| v.abs() >= SLOPE_FLOOR);
    let points: Vec<(f64, f64)> = kept.iter().map(|(n, v)| (*n as f64, v.abs())).collect();
    let mut fit = fit_decay_rate(&points).ok()?;
    fit.dropped = dropped.iter().map(|(n, _)| *n).collect();
    Some(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSet {
    pub bias: [Option<RateFit>; 2],
    pub variance: [Option<RateFit>; 2],
    pub cross_cov: Option<RateFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub scale: Scale,
    /// True indices on the reported scale.
    pub truth: [f64; 2],
    pub per_n: Vec<NSummary>,
    pub slopes: SlopeSet,
}

impl ExperimentSummary {
    pub fn from_rows(scale: Scale, truth: [f64; 2], per_n: Vec<NSummary>) -> Self {
        let series = |f: &dyn Fn(&NSummary) -> f64| -> Vec<(usize, f64)> {
            per_n.iter().map(|s| (s.n, f(s))).collect()
        };
        let slopes = SlopeSet {
            bias: [
                fit_abs_series(&series(&|s| s.components[0].bias)),
                fit_abs_series(&series(&|s| s.components[1].bias)),
            ],
            variance: [
                fit_abs_series(&series(&|s| s.components[0].variance)),
                fit_abs_series(&series(&|s| s.components[1].variance)),
            ],
            cross_cov: fit_abs_series(&series(&|s| s.cross_cov)),
        };
        Self {
            scale,
            truth,
            per_n,
            slopes,
        }
    }

    /// Number of grid sizes whose interval for component `i` (1 or 2) covers the truth.
    pub fn coverage(&self, component: usize) -> usize {
        let t = self.truth[component - 1];
        self.per_n
            .iter()
            .filter(|s| {
                let c = &s.components[component - 1];
                c.ci_low <= t && t <= c.ci_high
            })
            .count()
    }

    /// Long-format CSV: `n,metric,component,value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,metric,component,value")?;
        for s in &self.per_n {
            write_rows(&mut out, s)?;
        }
        Ok(())
    }
}

/// CSV rows for one grid size (no header).
pub fn write_rows<W: Write>(out: &mut W, s: &NSummary) -> std::io::Result<()> {
    for (i, c) in s.components.iter().enumerate() {
        let comp = i + 1;
        for (metric, value) in [
            ("mean", c.mean),
            ("bias", c.bias),
            ("variance", c.variance),
            ("ci_low", c.ci_low),
            ("ci_high", c.ci_high),
        ] {
            writeln!(out, "{},{metric},{comp},{value:e}", s.n)?;
        }
    }
    writeln!(out, "{},cross_cov,12,{:e}", s.n, s.cross_cov)?;
    writeln!(out, "{},included,0,{}", s.n, s.included)?;
    writeln!(out, "{},excluded,0,{}", s.n, s.excluded)
}

/// Runs every grid size in order, calling `on_n` after each completes.
pub fn run_experiment(
    config: &ExperimentConfig,
    mut on_n: impl FnMut(&NSummary),
) -> Result<ExperimentSummary, ExperimentError> {
    config.validate()?;
    let exp = config.model.expansion();
    let scale = config.scale();
    let truth = [exp.alpha11, exp.alpha22];
    let mut rows = Vec::with_capacity(config.n_list.len());
    for &n in &config.n_list {
        let set = run_replicates(
            &config.model,
            n,
            config.reps,
            config.m,
            config.kind,
            config.base_seed,
        )?;
        let row = summarize(&set, truth, scale)?;
        on_n(&row);
        rows.push(row);
    }
    let f = scale.factor();
    Ok(ExperimentSummary::from_rows(
        scale,
        [truth[0] * f, truth[1] * f],
        rows,
    ))
}

/// Kolmogorov-Smirnov statistic against the standard normal and its
/// asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(K > lambda)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

pub fn ks_standard_normal(sample: &[f64]) -> KsResult {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let statistic = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let f = standard_normal_cdf(*v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    KsResult {
        statistic,
        p_value: kolmogorov_survival((sn + 0.12 + 0.11 / sn) * statistic),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub ks: [KsResult; 2],
    /// Covariance of the standardised pair.
    pub standardized_cov: [[f64; 2]; 2],
    /// Largest entry of `|standardized_cov - I|`.
    pub cov_max_deviation: f64,
    /// Correlation of the raw estimate pairs.
    pub raw_correlation: f64,
}

pub const MIN_DIAGNOSTIC_REPS: usize = 200;

/// Standardises `sqrt(n) (alpha-hat - alpha)` by the inverse square root of the
/// law's covariance and compares it with a standard bivariate normal.
pub fn normality_diagnostics(
    estimates: &[[f64; 2]],
    n: usize,
    law: &AsymptoticLaw,
    truth: [f64; 2],
) -> Result<DiagnosticsReport, AsymptoticsError> {
    if estimates.len() < MIN_DIAGNOSTIC_REPS {
        return Err(AsymptoticsError::TooFewReplicates {
            min: MIN_DIAGNOSTIC_REPS,
            got: estimates.len(),
        });
    }
    let w = law.inverse_sqrt()?;
    let sn = (n as f64).sqrt();
    let (mut z1, mut z2) = (Vec::new(), Vec::new());
    for e in estimates {
        let d1 = sn * (e[0] - truth[0]);
        let d2 = sn * (e[1] - truth[1]);
        z1.push(w[(0, 0)] * d1 + w[(0, 1)] * d2);
        z2.push(w[(1, 0)] * d1 + w[(1, 1)] * d2);
    }
    let cov = [
        [covariance(&z1, &z1), covariance(&z1, &z2)],
        [covariance(&z2, &z1), covariance(&z2, &z2)],
    ];
    let cov_max_deviation = (cov[0][0] - 1.0)
        .abs()
        .max((cov[1][1] - 1.0).abs())
        .max(cov[0][1].abs());
    let raw1: Vec<f64> = estimates.iter().map(|e| e[0]).collect();
    let raw2: Vec<f64> = estimates.iter().map(|e| e[1]).collect();
    Ok(DiagnosticsReport {
        ks: [ks_standard_normal(&z1), ks_standard_normal(&z2)],
        standardized_cov: cov,
        cov_max_deviation,
        raw_correlation: correlation(&raw1, &raw2),
    })
}

/// Standardised `Z-bar` marginal for one `(component, u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZbarMarginal {
    pub component: usize,
    pub u: usize,
    pub ks: KsResult,
    pub sample_mean: f64,
    pub sample_variance: f64,
}

/// Simulates `reps` paths and standardises each `Z-bar(u)` as
/// `sqrt(n - 2u) (n^alpha Z-bar - n^alpha E Z-bar) / sqrt(phi_0(u, u))`, with the
/// exact finite-`n` mean.
pub fn zbar_normality(
    model: &CovarianceModel,
    n: usize,
    reps: usize,
    m: usize,
    base_seed: u64,
    tol: f64,
) -> Result<Vec<ZbarMarginal>, ExperimentError> {
    let exp = model.expansion();
    let sampler = GaussianSampler::new(model, n)
        .map_err(|source| ExperimentError::Simulation { n, source })?;
    let seeds = replicate_seeds(base_seed, n, reps);
    let stats = map_replicates(&seeds, |seed| {
        IncrementStats::compute(&sampler.draw(seed), m)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|source| ExperimentError::Estimation { n, source })?;
    let phi = phi0_matrix(exp, m, tol);
    let mut out = Vec::new();
    for component in 1..=2 {
        let alpha = exp.alpha(component);
        let scale = (n as f64).powf(alpha);
        for u in 1..=m {
            let expected = expected_zbar(model, n, u, component) * scale;
            let idx = (component - 1) * m + u - 1;
            let sd = phi.matrix[(idx, idx)].sqrt();
            let root = ((n - 2 * u) as f64).sqrt();
            let z: Vec<f64> = stats
                .iter()
                .map(|s| root * (s.component(component)[u - 1] * scale - expected) / sd)
                .collect();
            out.push(ZbarMarginal {
                component,
                u,
                ks: ks_standard_normal(&z),
                sample_mean: mean(&z),
                sample_variance: covariance(&z, &z),
            });
        }
    }
    Ok(out)
}
