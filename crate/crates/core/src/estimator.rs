//! Increment-based estimators of the two fractal indices.
//!
//! For each component and dilation `u` the path is filtered with the dilated
//! second difference `(1, -2, 1)`, the squared increments are averaged into
//! `Z-bar(u)`, and `alpha-hat = sum_u L_u ln Z-bar(u)` for weights with
//! `sum L_u = 0` and `sum L_u ln u = 1`. The `n^(alpha/2)` normalisation of the
//! increments is never applied: the first constraint cancels it.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::covariance::trajectory_dimension;
use crate::error::EstimationError;
use crate::simulate::SamplePath;

/// Second-difference filter taps for offsets `-1, 0, 1`.
pub const FILTER: [f64; 3] = [1.0, -2.0, 1.0];

/// Tolerance used when checking the two weight constraints.
pub const WEIGHT_TOL: f64 = 1e-10;

/// Range to which index estimates are clamped before plug-in use.
pub const ALPHA_CLAMP: (f64, f64) = (0.02, 1.98);

/// Linear regression weights `L_1..L_m` on `ln Z-bar(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    /// Accepts weights satisfying both constraints to [`WEIGHT_TOL`].
    pub fn new(weights: Vec<f64>) -> Result<Self, EstimationError> {
        if weights.len() < 2 {
            return Err(EstimationError::TooFewDilations {
                m: weights.len(),
                min: 2,
            });
        }
        let w = Self(weights);
        let (sum, slope) = w.constraint_residuals();
        if sum.abs() <= WEIGHT_TOL && slope.abs() <= WEIGHT_TOL {
            Ok(w)
        } else {
            Err(EstimationError::WeightConstraint { sum, slope })
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    /// `(sum L_u, sum L_u ln u - 1)`.
    pub fn constraint_residuals(&self) -> (f64, f64) {
        let sum: f64 = self.0.iter().sum();
        let slope: f64 = self
            .0
            .iter()
            .enumerate()
            .map(|(i, l)| l * ((i + 1) as f64).ln())
            .sum();
        (sum, slope - 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Ols,
    Gls,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EstimatorKind::Ols => "ols",
            EstimatorKind::Gls => "gls",
        })
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ols" => Ok(EstimatorKind::Ols),
            "gls" => Ok(EstimatorKind::Gls),
            other => Err(format!(
                "unknown estimator kind {other:?} (expected ols or gls)"
            )),
        }
    }
}

fn check_component(component: usize) -> Result<(), EstimationError> {
    if component == 1 || component == 2 {
        Ok(())
    } else {
        Err(EstimationError::Component(component))
    }
}

fn increments(x: &[f64], u: usize) -> Result<Vec<f64>, EstimationError> {
    let n = x.len();
    if u == 0 || 2 * u >= n {
        return Err(EstimationError::DilationTooLarge { u, n });
    }
    Ok((u..n - u)
        .map(|c| FILTER[0] * x[c - u] + FILTER[1] * x[c] + FILTER[2] * x[c + u])
        .collect())
}

/// `X_i((j-u)/n) - 2 X_i(j/n) + X_i((j+u)/n)` for `j = u+1, ..., n-u`.
pub fn filtered_increments(
    path: &SamplePath,
    u: usize,
    component: usize,
) -> Result<Vec<f64>, EstimationError> {
    check_component(component)?;
    increments(path.component(component), u)
}

fn mean_square(x: &[f64], u: usize) -> Result<f64, EstimationError> {
    let d = increments(x, u)?;
    Ok(d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64)
}

/// Mean of the squared filtered increments at dilation `u` (divisor `n - 2u`).
pub fn zbar(path: &SamplePath, u: usize, component: usize) -> Result<f64, EstimationError> {
    check_component(component)?;
    mean_square(path.component(component), u)
}

/// `Z-bar(u)` for `u = 1..m` and both components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementStats {
    pub zbar1: Vec<f64>,
    pub zbar2: Vec<f64>,
    /// Number of increments averaged at each dilation.
    pub counts: Vec<usize>,
}

impl IncrementStats {
    pub fn compute(path: &SamplePath, m: usize) -> Result<Self, EstimationError> {
        let n = path.n();
        if m < 1 {
            return Err(EstimationError::TooFewDilations { m, min: 1 });
        }
        if 2 * m >= n {
            return Err(EstimationError::DilationTooLarge { u: m, n });
        }
        let zbar1 = (1..=m)
            .map(|u| mean_square(&path.x1, u))
            .collect::<Result<_, _>>()?;
        let zbar2 = (1..=m)
            .map(|u| mean_square(&path.x2, u))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            zbar1,
            zbar2,
            counts: (1..=m).map(|u| n - 2 * u).collect(),
        })
    }

    pub fn component(&self, component: usize) -> &[f64] {
        if component == 1 {
            &self.zbar1
        } else {
            &self.zbar2
        }
    }
}

/// Ordinary least squares slope weights of `ln Z-bar` on `ln u`.
pub fn ols_weights(m: usize) -> Result<WeightVector, EstimationError> {
    if m < 2 {
        return Err(EstimationError::TooFewDilations { m, min: 2 });
    }
    let logs: Vec<f64> = (1..=m).map(|u| (u as f64).ln()).collect();
    let mean = logs.iter().sum::<f64>() / m as f64;
    let sxx: f64 = logs.iter().map(|l| (l - mean).powi(2)).sum();
    WeightVector::new(logs.iter().map(|l| (l - mean) / sxx).collect())
}

/// Approximate covariance matrix `Omega` of `ln Z-bar(1..m)` for a component
/// with smoothness `nu` (index `2 nu`), observed at `n` points.
pub fn gls_omega(m: usize, n: usize, nu: f64) -> Result<DMatrix<f64>, EstimationError> {
    if m < 2 {
        return Err(EstimationError::TooFewDilations { m, min: 2 });
    }
    if 2 * m >= n {
        return Err(EstimationError::DilationTooLarge { u: m, n });
    }
    let alpha = 2.0 * nu;
    let max_arg = n + 2 * m + 1;
    let pow: Vec<f64> = (0..=max_arg).map(|k| (k as f64).powf(alpha)).collect();
    let p = |x: i64| pow[x.unsigned_abs() as usize];
    let taps = [(-1i64, FILTER[0]), (0, FILTER[1]), (1, FILTER[2])];
    let base: f64 = taps
        .iter()
        .flat_map(|&(j, aj)| taps.iter().map(move |&(k, ak)| aj * ak * p(k - j)))
        .sum();
    let base_sq = base * base;

    let ni = n as i64;
    let mut omega = DMatrix::zeros(m, m);
    for u in 1..=m {
        for v in u..=m {
            let (ui, vi) = (u as i64, v as i64);
            // h in [u, n-u], l in [v, n-v]; the summand depends on d = h - l only.
            let mut total = 0.0;
            for d in (ui - (ni - vi))..=((ni - ui) - vi) {
                let lo = ui.max(vi + d);
                let hi = (ni - ui).min(ni - vi + d);
                if hi < lo {
                    continue;
                }
                let mut s = 0.0;
                for &(j, aj) in &taps {
                    for &(k, ak) in &taps {
                        s += aj * ak * p(d + k * vi - j * ui);
                    }
                }
                total += (hi - lo + 1) as f64 * s * s;
            }
            let norm = 2.0 / (((n - 2 * u + 1) * (n - 2 * v + 1)) as f64);
            let value = norm * total / (base_sq * (u as f64).powf(alpha) * (v as f64).powf(alpha));
            omega[(u - 1, v - 1)] = value;
            omega[(v - 1, u - 1)] = value;
        }
    }
    Ok(omega)
}

/// Generalized least squares slope weights `e2' (G' W G)^-1 G' W`, `W = Omega^-1`,
/// with design rows `(1, ln u)`.
pub fn gls_weights(m: usize, n: usize, nu_plugin: f64) -> Result<WeightVector, EstimationError> {
    let omega = gls_omega(m, n, nu_plugin)?;
    let chol = omega
        .cholesky()
        .ok_or(EstimationError::SingularOmega { m, n })?;
    let design = DMatrix::from_fn(
        m,
        2,
        |r, c| if c == 0 { 1.0 } else { ((r + 1) as f64).ln() },
    );
    let solved = chol.solve(&design);
    let gram = design.transpose() * &solved;
    let gram = Matrix2::new(gram[(0, 0)], gram[(0, 1)], gram[(1, 0)], gram[(1, 1)]);
    let inv = gram
        .try_inverse()
        .ok_or(EstimationError::SingularOmega { m, n })?;
    let weights: Vec<f64> = (0..m)
        .map(|r| inv[(1, 0)] * solved[(r, 0)] + inv[(1, 1)] * solved[(r, 1)])
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(EstimationError::SingularOmega { m, n });
    }
    WeightVector::new(weights)
}

/// `sum_u L_u ln Z-bar(u)`; every `Z-bar` must be positive.
pub fn alpha_from_zbar(
    zbar: &[f64],
    weights: &WeightVector,
    component: usize,
) -> Result<f64, EstimationError> {
    if zbar.len() < weights.m() {
        return Err(EstimationError::WeightLength {
            weights: weights.m(),
            expected: zbar.len(),
        });
    }
    let mut alpha = 0.0;
    for (u, (z, l)) in zbar.iter().zip(weights.as_slice()).enumerate() {
        if !(*z > 0.0) || !z.is_finite() {
            return Err(EstimationError::DegeneratePath {
                component,
                u: u + 1,
            });
        }
        alpha += l * z.ln();
    }
    Ok(alpha)
}

// Z-bar below this multiple of (eps * max|x|)^2 is rounding noise from an
// affine or constant path.
const DEGENERATE_FACTOR: f64 = 64.0;

fn degenerate_floor(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    DEGENERATE_FACTOR * (f64::EPSILON * scale).powi(2)
}

fn zbar_checked(x: &[f64], m: usize, component: usize) -> Result<Vec<f64>, EstimationError> {
    let floor = degenerate_floor(x);
    (1..=m)
        .map(|u| {
            let z = mean_square(x, u)?;
            if z <= floor {
                Err(EstimationError::DegeneratePath { component, u })
            } else {
                Ok(z)
            }
        })
        .collect()
}

/// Index estimate for one component with the given weights (`m = weights.m()`).
pub fn estimate_alpha(
    path: &SamplePath,
    component: usize,
    weights: &WeightVector,
) -> Result<f64, EstimationError> {
    check_component(component)?;
    let z = zbar_checked(path.component(component), weights.m(), component)?;
    alpha_from_zbar(&z, weights, component)
}

fn clamp_alpha(alpha: f64) -> f64 {
    alpha.clamp(ALPHA_CLAMP.0, ALPHA_CLAMP.1)
}

/// Joint estimate of both indices and the plug-in trajectory dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointEstimate {
    pub alpha11_hat: f64,
    pub alpha22_hat: f64,
    pub nu11_hat: f64,
    pub nu22_hat: f64,
    pub dim_hat: f64,
}

impl JointEstimate {
    pub fn from_alphas(alpha11_hat: f64, alpha22_hat: f64) -> Self {
        let dim_hat = trajectory_dimension(clamp_alpha(alpha11_hat), clamp_alpha(alpha22_hat))
            .expect("clamped indices lie in (0, 2)");
        Self {
            alpha11_hat,
            alpha22_hat,
            nu11_hat: alpha11_hat / 2.0,
            nu22_hat: alpha22_hat / 2.0,
            dim_hat,
        }
    }
}

pub fn estimate_joint(
    path: &SamplePath,
    w1: &WeightVector,
    w2: &WeightVector,
) -> Result<JointEstimate, EstimationError> {
    let a1 = estimate_alpha(path, 1, w1)?;
    let a2 = estimate_alpha(path, 2, w2)?;
    Ok(JointEstimate::from_alphas(a1, a2))
}

/// Number of dilations used when none is given: 50 for `n >= 500`,
/// otherwise `max(2, n / 10)`.
pub fn default_m(n: usize) -> usize {
    if n >= 500 {
        50
    } else {
        (n / 10).max(2)
    }
}

/// Full record of one estimation run, as exported to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub n: usize,
    pub m: usize,
    pub estimator_kind: EstimatorKind,
    pub alpha11_hat: f64,
    pub alpha22_hat: f64,
    pub nu11_hat: f64,
    pub nu22_hat: f64,
    pub dim_hat: f64,
    pub zbar: [Vec<f64>; 2],
}

impl EstimateRecord {
    pub fn joint(&self) -> JointEstimate {
        JointEstimate::from_alphas(self.alpha11_hat, self.alpha22_hat)
    }
}

/// OLS estimate and, for GLS, one refit with weights built from the OLS
/// smoothness estimates.
pub fn estimate_path(
    path: &SamplePath,
    m: usize,
    kind: EstimatorKind,
) -> Result<EstimateRecord, EstimationError> {
    let n = path.n();
    let ols = ols_weights(m)?;
    if 2 * m >= n {
        return Err(EstimationError::DilationTooLarge { u: m, n });
    }
    let z1 = zbar_checked(&path.x1, m, 1)?;
    let z2 = zbar_checked(&path.x2, m, 2)?;
    let mut a1 = alpha_from_zbar(&z1, &ols, 1)?;
    let mut a2 = alpha_from_zbar(&z2, &ols, 2)?;
    if kind == EstimatorKind::Gls {
        let w1 = gls_weights(m, n, clamp_alpha(a1) / 2.0)?;
        let w2 = gls_weights(m, n, clamp_alpha(a2) / 2.0)?;
        a1 = alpha_from_zbar(&z1, &w1, 1)?;
        a2 = alpha_from_zbar(&z2, &w2, 2)?;
    }
    let joint = JointEstimate::from_alphas(a1, a2);
    Ok(EstimateRecord {
        n,
        m,
        estimator_kind: kind,
        alpha11_hat: joint.alpha11_hat,
        alpha22_hat: joint.alpha22_hat,
        nu11_hat: joint.nu11_hat,
        nu22_hat: joint.nu22_hat,
        dim_hat: joint.dim_hat,
        zbar: [z1, z2],
    })
}
