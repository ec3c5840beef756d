//! Limit covariances of the normalised increment statistics, the matrix
//! `Phi_0`, the normalising constants `tau`, the limiting law of
//! `sqrt(n) (alpha-hat - alpha)` and predicted decay exponents.
//!
//! Everything here is on the `n^alpha`-normalised scale. Empirical `Z-bar`
//! values from [`crate::estimator`] must be multiplied by `n^alpha` (true
//! `alpha`) before comparison.

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceModel, LocalExpansion};
use crate::error::{AsymptoticsError, EstimationError};
use crate::estimator::{WeightVector, FILTER};

/// Default absolute truncation tolerance for `phi_0` series.
pub const DEFAULT_TOL: f64 = 1e-10;

const TAPS: [(i64, f64); 3] = [(-1, FILTER[0]), (0, FILTER[1]), (1, FILTER[2])];

fn filtered_power_sum(h: i64, u: i64, v: i64, pow: impl Fn(i64) -> f64) -> f64 {
    let mut s = 0.0;
    for &(j, aj) in &TAPS {
        for &(k, ak) in &TAPS {
            s += aj * ak * pow(h + k * v - j * u);
        }
    }
    s
}

/// `-c sum_{j,k} a_j a_k |h + k v - j u|^alpha`.
pub fn sigma0_marginal(h: i64, u: usize, v: usize, alpha: f64, c: f64) -> f64 {
    -c * filtered_power_sum(h, u as i64, v as i64, |x| (x.abs() as f64).powf(alpha))
}

/// Limit cross covariance between the dilation-`u` increments of component 1
/// and the dilation-`v` increments of component 2 at lag `h`.
pub fn sigma0_cross(h: i64, u: usize, v: usize, exp: &LocalExpansion) -> f64 {
    if !exp.is_equality_case() {
        return 0.0;
    }
    sigma0_marginal(h, u, v, exp.alpha12, exp.cross_coefficient())
}

/// `c (8 - 2^(alpha+1)) u^alpha`, the limit of `E Z-bar(u)` after normalisation.
pub fn tau(u: usize, alpha: f64, c: f64) -> f64 {
    c * (8.0 - 2f64.powf(alpha + 1.0)) * (u as f64).powf(alpha)
}

/// A `phi_0` value together with its truncation metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phi0Entry {
    pub value: f64,
    /// Lags `|h| <= cutoff` were summed.
    pub cutoff: usize,
    /// Upper bound on the discarded tail.
    pub tail_bound: f64,
}

/// `(alpha, coefficient)` governing entry `(i, j)`; `None` for a vanishing cross block.
fn entry_params(exp: &LocalExpansion, i: usize, j: usize) -> Option<(f64, f64)> {
    match (i, j) {
        (1, 1) => Some((exp.alpha11, exp.c11)),
        (2, 2) => Some((exp.alpha22, exp.c22)),
        _ if exp.is_equality_case() => Some((exp.alpha12, exp.cross_coefficient())),
        _ => None,
    }
}

// For |h| > u + v the 9-term sum is a fourth mixed difference of |x|^alpha, so
// |sigma_0(h)| <= K (|h| - u - v)^(alpha - 4) with K = |c| u^2 v^2 |alpha (alpha-1)(alpha-2)(alpha-3)|.
// Summing K^2 x^(2 alpha - 8) over both tails is at most 2 K^2 (H - s)^(2 alpha - 7) / (7 - 2 alpha),
// and phi doubles it.
fn truncation(u: usize, v: usize, alpha: f64, c: f64, tol: f64) -> (usize, f64) {
    let s = (u + v) as f64;
    let k = c.abs()
        * (u * u * v * v) as f64
        * (alpha * (alpha - 1.0) * (alpha - 2.0) * (alpha - 3.0)).abs();
    let p = 7.0 - 2.0 * alpha;
    let bound = |h: f64| 4.0 * k * k * (h - s).powf(-p) / p;
    if k == 0.0 {
        return (u + v, 0.0);
    }
    let gap = (4.0 * k * k / (p * tol)).powf(1.0 / p).ceil().max(1.0);
    let cutoff = u + v + gap as usize;
    (cutoff, bound(cutoff as f64))
}

fn phi_sum(u: usize, v: usize, alpha: f64, c: f64, cutoff: usize) -> f64 {
    let (ui, vi) = (u as i64, v as i64);
    let max = cutoff + 2 * (u + v) + 1;
    let pow: Vec<f64> = (0..=max).map(|x| (x as f64).powf(alpha)).collect();
    let h_max = cutoff as i64;
    let mut total = 0.0;
    for h in -h_max..=h_max {
        let s = -c * filtered_power_sum(h, ui, vi, |x| pow[x.unsigned_abs() as usize]);
        total += s * s;
    }
    2.0 * total
}

/// `2 sum_h sigma_0(h)^2` for dilations `(u, v)` and components `(i, j)`,
/// truncated so that the discarded tail is at most `tol`.
pub fn phi0_entry(
    u: usize,
    v: usize,
    i: usize,
    j: usize,
    exp: &LocalExpansion,
    tol: f64,
) -> Phi0Entry {
    assert!(tol > 0.0, "tolerance must be positive");
    match entry_params(exp, i, j) {
        None => Phi0Entry {
            value: 0.0,
            cutoff: 0,
            tail_bound: 0.0,
        },
        Some((alpha, c)) => {
            let (cutoff, tail_bound) = truncation(u, v, alpha, c, tol);
            Phi0Entry {
                value: phi_sum(u, v, alpha, c, cutoff),
                cutoff,
                tail_bound,
            }
        }
    }
}

/// Same series summed to an explicit cutoff, for truncation checks.
pub fn phi0_entry_with_cutoff(
    u: usize,
    v: usize,
    i: usize,
    j: usize,
    exp: &LocalExpansion,
    cutoff: usize,
) -> f64 {
    match entry_params(exp, i, j) {
        None => 0.0,
        Some((alpha, c)) => phi_sum(u, v, alpha, c, cutoff),
    }
}

/// `2m x 2m` limit covariance of the normalised `Z-bar` vector, ordered
/// `(component 1: u = 1..m, component 2: u = 1..m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Phi0Matrix {
    pub m: usize,
    pub matrix: DMatrix<f64>,
    /// Largest lag cutoff used by any entry.
    pub max_cutoff: usize,
    /// Largest per-entry tail bound.
    pub max_tail_bound: f64,
    pub tol: f64,
}

impl Phi0Matrix {
    pub fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        let m = self.m;
        self.matrix
            .view(((i - 1) * m, (j - 1) * m), (m, m))
            .into_owned()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows = |b: DMatrix<f64>| -> Vec<Vec<f64>> {
            b.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        serde_json::json!({
            "m": self.m,
            "tol": self.tol,
            "max_cutoff": self.max_cutoff,
            "max_tail_bound": self.max_tail_bound,
            "phi11": rows(self.block(1, 1)),
            "phi12": rows(self.block(1, 2)),
            "phi22": rows(self.block(2, 2)),
        })
    }
}

pub fn phi0_matrix(exp: &LocalExpansion, m: usize, tol: f64) -> Phi0Matrix {
    let mut matrix = DMatrix::zeros(2 * m, 2 * m);
    let mut max_cutoff = 0;
    let mut max_tail_bound = 0.0f64;
    let mut record = |e: &Phi0Entry| {
        max_cutoff = max_cutoff.max(e.cutoff);
        max_tail_bound = max_tail_bound.max(e.tail_bound);
    };
    for (i, j) in [(1, 1), (2, 2), (1, 2)] {
        for u in 1..=m {
            // Diagonal blocks only need v >= u; the mirror write fills the rest.
            let v_start = if i == j { u } else { 1 };
            for v in v_start..=m {
                let e = phi0_entry(u, v, i, j, exp, tol);
                record(&e);
                let (r, c) = ((i - 1) * m + u - 1, (j - 1) * m + v - 1);
                matrix[(r, c)] = e.value;
                matrix[(c, r)] = e.value;
            }
        }
    }
    Phi0Matrix {
        m,
        matrix,
        max_cutoff,
        max_tail_bound,
        tol,
    }
}

/// Limit covariance of `sqrt(n) (alpha-hat - alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLaw {
    pub covariance: [[f64; 2]; 2],
    pub correlation: f64,
}

impl AsymptoticLaw {
    pub fn new(covariance: [[f64; 2]; 2]) -> Self {
        let denom = (covariance[0][0] * covariance[1][1]).sqrt();
        let correlation = if denom > 0.0 {
            covariance[0][1] / denom
        } else {
            0.0
        };
        Self {
            covariance,
            correlation,
        }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        let c = &self.covariance;
        Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1])
    }

    /// Same law on the `nu = alpha / 2` scale.
    pub fn nu_scale(&self) -> Self {
        let c = &self.covariance;
        Self::new([
            [c[0][0] / 4.0, c[0][1] / 4.0],
            [c[1][0] / 4.0, c[1][1] / 4.0],
        ])
    }

    /// Symmetric inverse square root of the covariance.
    pub fn inverse_sqrt(&self) -> Result<Matrix2<f64>, AsymptoticsError> {
        let eig = self.matrix().symmetric_eigen();
        let max = eig.eigenvalues.max();
        if !(max > 0.0) || eig.eigenvalues.iter().any(|&e| e <= max * 1e-12) {
            return Err(AsymptoticsError::SingularLaw);
        }
        let d = Matrix2::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e.sqrt()));
        Ok(eig.eigenvectors * d * eig.eigenvectors.transpose())
    }
}

/// `L_u / tau_u` for one component.
pub fn scaled_weights(weights: &WeightVector, alpha: f64, c: f64) -> Vec<f64> {
    weights
        .as_slice()
        .iter()
        .enumerate()
        .map(|(k, l)| l / tau(k + 1, alpha, c))
        .collect()
}

fn quad(a: &[f64], block: &DMatrix<f64>, b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (u, au) in a.iter().enumerate() {
        for (v, bv) in b.iter().enumerate() {
            s += au * block[(u, v)] * bv;
        }
    }
    s
}

/// Law with a precomputed `Phi_0` (whose `m` must match the weights).
pub fn asymptotic_law_with(
    exp: &LocalExpansion,
    w1: &WeightVector,
    w2: &WeightVector,
    phi: &Phi0Matrix,
) -> Result<AsymptoticLaw, AsymptoticsError> {
    for w in [w1, w2] {
        if w.m() != phi.m {
            return Err(EstimationError::WeightLength {
                weights: w.m(),
                expected: phi.m,
            }
            .into());
        }
    }
    let l1 = scaled_weights(w1, exp.alpha11, exp.c11);
    let l2 = scaled_weights(w2, exp.alpha22, exp.c22);
    let v11 = quad(&l1, &phi.block(1, 1), &l1);
    let v22 = quad(&l2, &phi.block(2, 2), &l2);
    let v12 = if exp.is_equality_case() {
        quad(&l1, &phi.block(1, 2), &l2)
    } else {
        0.0
    };
    Ok(AsymptoticLaw::new([[v11, v12], [v12, v22]]))
}

pub fn asymptotic_law(
    exp: &LocalExpansion,
    w1: &WeightVector,
    w2: &WeightVector,
    tol: f64,
) -> Result<AsymptoticLaw, AsymptoticsError> {
    let phi = phi0_matrix(exp, w1.m().max(w2.m()), tol);
    asymptotic_law_with(exp, w1, w2, &phi)
}

/// `min{1 + x1, 1 + x2, x1 + x2}`.
pub fn psi(x1: f64, x2: f64) -> f64 {
    (1.0 + x1).min(1.0 + x2).min(x1 + x2)
}

/// Predicted decay exponents `e` (quantities behave like `n^-e`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateExponents {
    pub bias: [f64; 2],
    pub mse: [f64; 2],
    /// Exponent of the cross term of the mean square error matrix.
    pub cross: f64,
    /// True when the cross term is `o(n^-1)`, i.e. in the strict case.
    pub cross_faster_than_inverse_n: bool,
}

/// Order bounds valid for any expansion satisfying the remainder condition.
/// In the strict case `cross` is `psi(beta11, beta22)`, the order of the
/// remainder-driven term.
pub fn rate_exponents(exp: &LocalExpansion) -> RateExponents {
    let (b1, b2) = (exp.beta11, exp.beta22);
    let strict = !exp.is_equality_case();
    RateExponents {
        bias: [b1.min(1.0), b2.min(1.0)],
        mse: [psi(b1, b1).min(1.0), psi(b2, b2).min(1.0)],
        cross: if strict {
            psi(b1, b2)
        } else {
            psi(b1, b2).min(1.0)
        },
        cross_faster_than_inverse_n: strict,
    }
}

/// Sharper predictions for the bivariate Matern family: bias and variance
/// decay like `1/n`; in the strict case the leading cross term scales like
/// `n^-(1 + 2 (alpha12 - (alpha11 + alpha22) / 2))`.
pub fn matern_rate_exponents(exp: &LocalExpansion) -> RateExponents {
    let strict = !exp.is_equality_case();
    RateExponents {
        bias: [1.0, 1.0],
        mse: [1.0, 1.0],
        cross: if strict {
            1.0 + 2.0 * (exp.alpha12 - exp.mean_alpha())
        } else {
            1.0
        },
        cross_faster_than_inverse_n: strict,
    }
}

/// Exact `E Z-bar(u) = sum_{j,k} a_j a_k C_ii((k - j) u / n)` for component
/// `i` at grid size `n`, without the `n^alpha` normalisation.
pub fn expected_zbar(model: &CovarianceModel, n: usize, u: usize, component: usize) -> f64 {
    let mut s = 0.0;
    for &(j, aj) in &TAPS {
        for &(k, ak) in &TAPS {
            let h = ((k - j) * u as i64) as f64 / n as f64;
            let c = model.evaluate(h);
            s += aj * ak * if component == 1 { c[0][0] } else { c[1][1] };
        }
    }
    s
}

/// Exact covariance of `Z-bar_i(u)` and `Z-bar_j(v)` at grid size `n`
/// (Gaussian fourth moments, no normalisation).
pub fn zbar_covariance(
    model: &CovarianceModel,
    n: usize,
    u: usize,
    v: usize,
    i: usize,
    j: usize,
) -> f64 {
    let lags: Vec<[[f64; 2]; 2]> = (0..=n + u + v)
        .map(|k| model.evaluate(k as f64 / n as f64))
        .collect();
    zbar_covariance_from_lags(&lags, n, u, v, i, j)
}

fn zbar_covariance_from_lags(
    lags: &[[[f64; 2]; 2]],
    n: usize,
    u: usize,
    v: usize,
    i: usize,
    j: usize,
) -> f64 {
    let c = |x: i64| lags[x.unsigned_abs() as usize][i - 1][j - 1];
    let (ui, vi, ni) = (u as i64, v as i64, n as i64);
    let mut total = 0.0;
    // Centres h in [u, n-1-u] and l in [v, n-1-v]; the summand depends on d = h - l.
    for d in (ui - (ni - 1 - vi))..=((ni - 1 - ui) - vi) {
        let lo = ui.max(vi + d);
        let hi = (ni - 1 - ui).min(ni - 1 - vi + d);
        if hi < lo {
            continue;
        }
        let mut s = 0.0;
        for &(a, wa) in &TAPS {
            for &(b, wb) in &TAPS {
                s += wa * wb * c(d + a * ui - b * vi);
            }
        }
        total += (hi - lo + 1) as f64 * s * s;
    }
    2.0 * total / (((n - 2 * u) * (n - 2 * v)) as f64)
}

/// Finite-`n` moments of `(alpha-hat_11, alpha-hat_22)` for fixed weights,
/// from the exact first two moments of `Z-bar`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteNPrediction {
    pub n: usize,
    /// First-order (delta method) covariance.
    pub covariance: [[f64; 2]; 2],
    /// Regression on `ln E Z-bar` minus the truth.
    pub deterministic_bias: [f64; 2],
    /// Deterministic bias plus the second-order term `-sum_u L_u Var / (2 E^2)`.
    pub bias: [f64; 2],
}

pub fn finite_n_prediction(
    model: &CovarianceModel,
    n: usize,
    w1: &WeightVector,
    w2: &WeightVector,
) -> Result<FiniteNPrediction, AsymptoticsError> {
    let m = w1.m().max(w2.m());
    if 2 * m >= n {
        return Err(EstimationError::DilationTooLarge { u: m, n }.into());
    }
    let exp = model.expansion();
    let lags: Vec<[[f64; 2]; 2]> = (0..=n + 2 * m)
        .map(|k| model.evaluate(k as f64 / n as f64))
        .collect();
    let w = [w1.as_slice(), w2.as_slice()];
    let mean: Vec<Vec<f64>> = (1..=2)
        .map(|c| {
            (1..=w[c - 1].len())
                .map(|u| expected_zbar(model, n, u, c))
                .collect()
        })
        .collect();
    let mut covariance = [[0.0; 2]; 2];
    for (i, j) in [(1, 1), (1, 2), (2, 2)] {
        let mut s = 0.0;
        for (u, lu) in w[i - 1].iter().enumerate() {
            for (v, lv) in w[j - 1].iter().enumerate() {
                let cov = zbar_covariance_from_lags(&lags, n, u + 1, v + 1, i, j);
                s += lu * lv * cov / (mean[i - 1][u] * mean[j - 1][v]);
            }
        }
        covariance[i - 1][j - 1] = s;
        covariance[j - 1][i - 1] = s;
    }
    let mut deterministic_bias = [0.0; 2];
    let mut bias = [0.0; 2];
    for c in 0..2 {
        let fitted: f64 = w[c].iter().zip(&mean[c]).map(|(l, e)| l * e.ln()).sum();
        let jensen: f64 = w[c]
            .iter()
            .enumerate()
            .map(|(u, l)| {
                let var = zbar_covariance_from_lags(&lags, n, u + 1, u + 1, c + 1, c + 1);
                -l * var / (2.0 * mean[c][u] * mean[c][u])
            })
            .sum();
        deterministic_bias[c] = fitted - exp.alpha(c + 1);
        bias[c] = deterministic_bias[c] + jensen;
    }
    Ok(FiniteNPrediction {
        n,
        covariance,
        deterministic_bias,
        bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{local_expansion, MaternParams};
    use crate::estimator::{gls_weights, ols_weights};
    use approx::assert_relative_eq;

    fn unit(alpha: f64) -> LocalExpansion {
        LocalExpansion {
            sigma1_sq: 1.0,
            sigma2_sq: 1.0,
            rho: 0.5,
            c11: 1.0,
            c22: 1.0,
            c12: 1.0,
            alpha11: alpha,
            alpha22: alpha,
            alpha12: alpha,
            beta11: 1.0,
            beta22: 1.0,
            beta12: 1.0,
        }
    }

    fn matern_case(nu12: f64) -> LocalExpansion {
        local_expansion(&MaternParams {
            nu12,
            ..MaternParams::unit(0.2, 0.7, 0.45, 0.5)
        })
        .unwrap()
    }

    #[test]
    fn sigma0_piecewise_linear() {
        assert_eq!(sigma0_marginal(0, 1, 1, 1.0, 1.0), 4.0);
        assert_eq!(sigma0_marginal(1, 1, 1, 1.0, 1.0), -2.0);
        assert_eq!(sigma0_marginal(-1, 1, 1, 1.0, 1.0), -2.0);
        for h in 2..10 {
            assert_eq!(sigma0_marginal(h, 1, 1, 1.0, 1.0), 0.0);
            assert_eq!(sigma0_marginal(-h, 1, 1, 1.0, 1.0), 0.0);
        }
        assert_relative_eq!(sigma0_marginal(0, 1, 1, 1.0, 1.0), 8.0 - 4.0);
    }

    #[test]
    fn sigma0_index_symmetry() {
        for alpha in [0.3, 1.0, 1.7] {
            for h in -6..=6 {
                for u in 1..=4 {
                    for v in 1..=4 {
                        assert_relative_eq!(
                            sigma0_marginal(h, u, v, alpha, 1.3),
                            sigma0_marginal(-h, v, u, alpha, 1.3),
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tau_matches_zero_lag_sigma0() {
        assert_eq!(tau(1, 1.0, 1.0), 4.0);
        assert_relative_eq!(tau(1, 1e-9, 1.0), 6.0, max_relative = 1e-8);
        for alpha in [0.3, 1.0, 1.7] {
            for u in 1..=10 {
                assert_relative_eq!(
                    sigma0_marginal(0, u, u, alpha, 0.8),
                    tau(u, alpha, 0.8),
                    max_relative = 1e-12
                );
                assert!(tau(u, alpha, 0.8) > 0.0);
            }
        }
    }

    #[test]
    fn sigma0_cross_cases() {
        assert_eq!(sigma0_cross(0, 1, 1, &matern_case(0.6)), 0.0);
        assert_eq!(sigma0_cross(3, 2, 1, &matern_case(0.6)), 0.0);
        let mut e = unit(1.0);
        e.rho = 1.0;
        assert_eq!(sigma0_cross(0, 1, 1, &e), 4.0);
        e.rho = 0.0;
        assert_eq!(sigma0_cross(0, 1, 1, &e), 0.0);
    }

    #[test]
    fn phi0_exact_at_alpha_one() {
        let e = phi0_entry(1, 1, 1, 1, &unit(1.0), DEFAULT_TOL);
        assert_eq!(e.value, 48.0);
        assert_eq!(e.tail_bound, 0.0);
    }

    #[test]
    fn phi0_truncation_is_stable() {
        let exp = matern_case(0.45);
        for (u, v, i, j) in [(1, 1, 1, 1), (3, 2, 2, 2), (2, 5, 1, 2), (4, 4, 2, 1)] {
            let e = phi0_entry(u, v, i, j, &exp, DEFAULT_TOL);
            assert!(e.tail_bound <= DEFAULT_TOL);
            let doubled = phi0_entry_with_cutoff(u, v, i, j, &exp, 2 * e.cutoff);
            assert!((doubled - e.value).abs() <= DEFAULT_TOL, "{u} {v} {i} {j}");
        }
    }

    #[test]
    fn phi0_structure() {
        let strict = phi0_matrix(&matern_case(0.6), 4, DEFAULT_TOL);
        assert!(strict.block(1, 2).iter().all(|&x| x == 0.0));
        assert!(strict.block(2, 1).iter().all(|&x| x == 0.0));

        let eq = phi0_matrix(&matern_case(0.45), 4, DEFAULT_TOL);
        assert_eq!(eq.matrix, eq.matrix.transpose());
        assert_eq!(eq.block(1, 2), eq.block(2, 1).transpose());
        assert!(eq.block(1, 2).iter().all(|&x| x > 0.0));
        for b in [eq.block(1, 1), eq.block(2, 2)] {
            assert!(b.symmetric_eigenvalues().iter().all(|&l| l >= -1e-10));
        }

        let single = phi0_matrix(&matern_case(0.45), 1, DEFAULT_TOL);
        assert_eq!(single.matrix.shape(), (2, 2));
        let exp = matern_case(0.45);
        assert_eq!(
            single.matrix[(0, 0)],
            phi0_entry(1, 1, 1, 1, &exp, DEFAULT_TOL).value
        );
        assert_eq!(
            single.matrix[(0, 1)],
            phi0_entry(1, 1, 1, 2, &exp, DEFAULT_TOL).value
        );
    }

    #[test]
    fn law_structure_and_homogeneity() {
        let w = ols_weights(4).unwrap();
        let strict = asymptotic_law(&matern_case(0.6), &w, &w, DEFAULT_TOL).unwrap();
        assert_eq!(strict.covariance[0][1], 0.0);
        assert_eq!(strict.correlation, 0.0);

        let exp = matern_case(0.45);
        let base = asymptotic_law(&exp, &w, &w, DEFAULT_TOL).unwrap();
        assert!(base.covariance[0][1] != 0.0);
        assert!(base.correlation.abs() < 1.0);
        let mut scaled = exp;
        scaled.c11 *= 4.0;
        scaled.sigma1_sq *= 4.0;
        let law = asymptotic_law(&scaled, &w, &w, DEFAULT_TOL).unwrap();
        assert_relative_eq!(
            law.covariance[0][0],
            base.covariance[0][0],
            max_relative = 1e-12
        );
        assert_relative_eq!(
            law.covariance[1][1],
            base.covariance[1][1],
            max_relative = 1e-12
        );

        let g = gls_weights(4, 1000, 0.35).unwrap();
        assert!(asymptotic_law(&exp, &g, &g, DEFAULT_TOL).is_ok());
        assert!(asymptotic_law_with(
            &exp,
            &ols_weights(3).unwrap(),
            &w,
            &phi0_matrix(&exp, 4, 1e-8)
        )
        .is_err());
    }

    #[test]
    fn law_inverse_sqrt() {
        let law = AsymptoticLaw::new([[4.0, 1.0], [1.0, 2.0]]);
        let s = law.inverse_sqrt().unwrap();
        let id = s * law.matrix() * s;
        assert_relative_eq!(id, Matrix2::identity(), epsilon = 1e-12);
        assert!(AsymptoticLaw::new([[1.0, 1.0], [1.0, 1.0]])
            .inverse_sqrt()
            .is_err());
    }

    #[test]
    fn predicted_exponents() {
        let p = rate_exponents(&local_expansion(&MaternParams::unit(0.4, 0.4, 0.45, 0.5)).unwrap());
        assert_relative_eq!(p.bias[0], 1.0);
        assert_relative_eq!(p.mse[1], 1.0);
        assert!(p.cross > 1.0 && p.cross_faster_than_inverse_n);

        let eq = matern_rate_exponents(&matern_case(0.45));
        assert_eq!(eq.cross, 1.0);
        assert!(!eq.cross_faster_than_inverse_n);
        let strict = matern_rate_exponents(&matern_case(0.6));
        assert_relative_eq!(strict.cross, 1.6, max_relative = 1e-12);
        assert_relative_eq!(
            rate_exponents(&matern_case(0.6)).cross,
            1.6,
            max_relative = 1e-12
        );
        assert_relative_eq!(psi(0.5, 2.0), 1.5);
    }

    #[test]
    fn finite_n_covariance_approaches_phi0() {
        // n Cov(n^a Z-bar) -> Phi_0 on the diagonal blocks.
        let model = CovarianceModel::matern(MaternParams::unit(0.5, 0.5, 0.5, 0.5)).unwrap();
        let exp = model.expansion();
        let phi = phi0_matrix(exp, 2, DEFAULT_TOL);
        let mut prev = f64::INFINITY;
        for n in [128usize, 512, 2048] {
            let scale = (n as f64).powf(2.0 * exp.alpha11) * n as f64;
            let dev = (1..=2)
                .flat_map(|u| (1..=2).map(move |v| (u, v)))
                .map(|(u, v)| {
                    let c = zbar_covariance(&model, n, u, v, 1, 1) * scale;
                    (c - phi.matrix[(u - 1, v - 1)]).abs() / phi.matrix[(u - 1, v - 1)]
                })
                .fold(0.0, f64::max);
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 0.01, "{prev}");
    }

    #[test]
    fn finite_n_prediction_structure() {
        let model = CovarianceModel::matern(MaternParams::unit(0.2, 0.7, 0.45, 0.5)).unwrap();
        let w = ols_weights(4).unwrap();
        let p = finite_n_prediction(&model, 200, &w, &w).unwrap();
        assert!(p.covariance[0][0] > 0.0 && p.covariance[1][1] > 0.0);
        assert_eq!(p.covariance[0][1], p.covariance[1][0]);
        assert!(p.covariance[0][1].abs() < (p.covariance[0][0] * p.covariance[1][1]).sqrt());
        assert!(p.bias[0] < 0.0 && p.bias[1] < 0.0);
        assert!(finite_n_prediction(&model, 8, &w, &w).is_err());
    }

    #[test]
    fn expected_zbar_approaches_tau() {
        let params = MaternParams::unit(0.2, 0.7, 0.45, 0.5);
        let model = CovarianceModel::matern(params).unwrap();
        let exp = model.expansion();
        let n = 4000;
        for u in 1..=3 {
            let z = expected_zbar(&model, n, u, 2) * (n as f64).powf(exp.alpha22);
            assert_relative_eq!(z, tau(u, exp.alpha22, exp.c22), max_relative = 1e-3);
        }
    }
}
