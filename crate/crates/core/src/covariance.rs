//! Bivariate covariance models: the full bivariate Matérn family and a generic
//! model described only by its behaviour near lag zero.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::specialfn::{bessel_k, gamma, ln_gamma};

/// Tolerance used to decide whether `(alpha11 + alpha22) / 2 == alpha12`.
pub const EQUALITY_TOL: f64 = 1e-12;

/// Local behaviour of `C(t)` at the origin:
///
/// ```text
/// C11(t) = s1^2 - c11 |t|^a11 + O(|t|^(a11 + b11))
/// C22(t) = s2^2 - c22 |t|^a22 + O(|t|^(a22 + b22))
/// C12(t) = rho s1 s2 (1 - c12 |t|^a12 + O(|t|^(a12 + b12)))
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalExpansion {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub rho: f64,
    pub c11: f64,
    pub c22: f64,
    pub c12: f64,
    pub alpha11: f64,
    pub alpha22: f64,
    pub alpha12: f64,
    pub beta11: f64,
    pub beta22: f64,
    pub beta12: f64,
}

fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Parameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}

fn fractal_exponent(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value > 0.0 && value < 2.0 {
        Ok(())
    } else {
        Err(ModelError::Parameter {
            name,
            value,
            reason: "must lie in (0, 2)",
        })
    }
}

impl LocalExpansion {
    /// Range checks on every field. Validity of the cross structure is
    /// reported separately by [`check_validity`].
    pub fn check_ranges(&self) -> Result<(), ModelError> {
        positive("sigma1_sq", self.sigma1_sq)?;
        positive("sigma2_sq", self.sigma2_sq)?;
        positive("c11", self.c11)?;
        positive("c22", self.c22)?;
        positive("c12", self.c12)?;
        fractal_exponent("alpha11", self.alpha11)?;
        fractal_exponent("alpha22", self.alpha22)?;
        positive("alpha12", self.alpha12)?;
        positive("beta11", self.beta11)?;
        positive("beta22", self.beta22)?;
        positive("beta12", self.beta12)?;
        if !(self.rho.abs() < 1.0) {
            return Err(ModelError::Parameter {
                name: "rho",
                value: self.rho,
                reason: "must satisfy |rho| < 1",
            });
        }
        Ok(())
    }

    /// Range checks plus the validity condition; the error names the failed clause.
    pub fn validate(&self) -> Result<(), ModelError> {
        self.check_ranges()?;
        match check_validity(self) {
            Validity::Valid => Ok(()),
            Validity::Invalid(reason) => Err(ModelError::Invalid(reason.to_string())),
        }
    }

    pub fn mean_alpha(&self) -> f64 {
        0.5 * (self.alpha11 + self.alpha22)
    }

    /// `(alpha11 + alpha22) / 2 == alpha12`: the two index estimators stay
    /// correlated in the limit.
    pub fn is_equality_case(&self) -> bool {
        (self.mean_alpha() - self.alpha12).abs() <= EQUALITY_TOL
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1_sq.sqrt()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2_sq.sqrt()
    }

    /// Coefficient of `|t|^alpha12` in `C12(0) - C12(t)`, i.e. `rho s1 s2 c12`.
    pub fn cross_coefficient(&self) -> f64 {
        self.rho * self.sigma1() * self.sigma2() * self.c12
    }

    pub fn alpha(&self, component: usize) -> f64 {
        if component == 1 {
            self.alpha11
        } else {
            self.alpha22
        }
    }

    pub fn c(&self, component: usize) -> f64 {
        if component == 1 {
            self.c11
        } else {
            self.c22
        }
    }

    pub fn beta(&self, component: usize) -> f64 {
        if component == 1 {
            self.beta11
        } else {
            self.beta22
        }
    }

    /// The same description with components 1 and 2 relabelled.
    pub fn swapped(&self) -> Self {
        Self {
            sigma1_sq: self.sigma2_sq,
            sigma2_sq: self.sigma1_sq,
            c11: self.c22,
            c22: self.c11,
            alpha11: self.alpha22,
            alpha22: self.alpha11,
            beta11: self.beta22,
            beta22: self.beta11,
            ..*self
        }
    }
}

/// Outcome of a validity check.
#[derive(Debug, Clone, PartialEq)]
pub enum Validity {
    Valid,
    Invalid(InvalidReason),
}

impl Validity {
    pub fn is_valid(&self) -> bool {
        matches!(self, Validity::Valid)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InvalidReason {
    /// `alpha12 < (alpha11 + alpha22) / 2`.
    CrossRougherThanMean { mean_alpha: f64, alpha12: f64 },
    /// Equality case with `c12^2 rho^2 s1^2 s2^2 >= c11 c22`.
    CoefficientBound { lhs: f64, rhs: f64 },
    /// `rho^2 f12^2 > f11 f22` at the reported frequency.
    Spectral { frequency: f64, lhs: f64, rhs: f64 },
    /// The cross spectral density decays more slowly than the geometric mean
    /// of the marginal densities.
    SpectralTail {
        cross_exponent: f64,
        marginal_exponent: f64,
    },
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvalidReason::CrossRougherThanMean { mean_alpha, alpha12 } => write!(
                f,
                "alpha12 = {alpha12} is below (alpha11 + alpha22)/2 = {mean_alpha}"
            ),
            InvalidReason::CoefficientBound { lhs, rhs } => write!(
                f,
                "equality case requires c12^2 rho^2 s1^2 s2^2 < c11 c22, got {lhs} >= {rhs}"
            ),
            InvalidReason::Spectral { frequency, lhs, rhs } => write!(
                f,
                "rho^2 f12^2 = {lhs:e} exceeds f11 f22 = {rhs:e} at frequency {frequency}"
            ),
            InvalidReason::SpectralTail {
                cross_exponent,
                marginal_exponent,
            } => write!(
                f,
                "cross spectrum decays like xi^-{cross_exponent}, slower than the marginal bound xi^-{marginal_exponent}"
            ),
        }
    }
}

/// The validity condition on a local expansion: either the cross term is
/// smoother than the mean of the marginals, or they are equal and the
/// coefficients satisfy a strict Cauchy-Schwarz type bound.
pub fn check_validity(exp: &LocalExpansion) -> Validity {
    let mean = exp.mean_alpha();
    if exp.is_equality_case() {
        let lhs = exp.c12 * exp.c12 * exp.rho * exp.rho * exp.sigma1_sq * exp.sigma2_sq;
        let rhs = exp.c11 * exp.c22;
        if lhs < rhs {
            Validity::Valid
        } else {
            Validity::Invalid(InvalidReason::CoefficientBound { lhs, rhs })
        }
    } else if mean < exp.alpha12 {
        Validity::Valid
    } else {
        Validity::Invalid(InvalidReason::CrossRougherThanMean {
            mean_alpha: mean,
            alpha12: exp.alpha12,
        })
    }
}

/// Matérn correlation `M(h | nu, a) = 2^(1-nu)/Γ(nu) (a|h|)^nu K_nu(a|h|)`.
///
/// `nu` must lie in `(0, 3]` and `a > 0`; `M(0) = 1`.
pub fn matern_correlation(h: f64, nu: f64, a: f64) -> f64 {
    assert!(
        a > 0.0,
        "matern_correlation: scale a = {a} must be positive"
    );
    let x = a * h.abs();
    if x == 0.0 {
        return 1.0;
    }
    let k = bessel_k(nu, x).expect("matern_correlation: order outside (0, 3]");
    if k == 0.0 {
        return 0.0;
    }
    let log_norm = (1.0 - nu) * std::f64::consts::LN_2 - ln_gamma(nu).expect("nu > 0");
    (log_norm + nu * x.ln() + k.ln()).exp()
}

/// Leading small-lag coefficient of `1 - M(h | nu, a) ~ b1 |h|^(2 nu)`,
/// `b1 = Γ(1-nu) a^(2nu) / (2^(2nu) Γ(1+nu))`, for `nu in (0, 1)`.
pub fn matern_leading_coefficient(nu: f64, a: f64) -> Result<f64, ModelError> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(ModelError::Parameter {
            name: "nu",
            value: nu,
            reason: "expansion coefficient needs nu in (0, 1)",
        });
    }
    positive("a", a)?;
    Ok(gamma(1.0 - nu)? * a.powf(2.0 * nu) / (2f64.powf(2.0 * nu) * gamma(1.0 + nu)?))
}

/// Parameters of the full bivariate Matérn model:
/// `C11 = s1^2 M(.|nu11,a11)`, `C22 = s2^2 M(.|nu22,a22)`,
/// `C12 = C21 = rho s1 s2 M(.|nu12,a12)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    pub nu11: f64,
    pub nu22: f64,
    pub nu12: f64,
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

impl MaternParams {
    /// Unit-variance, unit-scale model with the given smoothness and correlation.
    pub fn unit(nu11: f64, nu22: f64, nu12: f64, rho: f64) -> Self {
        Self {
            nu11,
            nu22,
            nu12,
            a11: 1.0,
            a22: 1.0,
            a12: 1.0,
            sigma1: 1.0,
            sigma2: 1.0,
            rho,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            nu11: self.nu22,
            nu22: self.nu11,
            a11: self.a22,
            a22: self.a11,
            sigma1: self.sigma2,
            sigma2: self.sigma1,
            ..*self
        }
    }

    pub fn evaluate(&self, t: f64) -> [[f64; 2]; 2] {
        let c11 = self.sigma1 * self.sigma1 * matern_correlation(t, self.nu11, self.a11);
        let c22 = self.sigma2 * self.sigma2 * matern_correlation(t, self.nu22, self.a22);
        let c12 = self.rho * self.sigma1 * self.sigma2 * matern_correlation(t, self.nu12, self.a12);
        [[c11, c12], [c12, c22]]
    }
}

/// Small-lag expansion of a bivariate Matérn model. Fails when the expansion
/// violates the validity condition.
pub fn local_expansion(params: &MaternParams) -> Result<LocalExpansion, ModelError> {
    for (name, nu) in [
        ("nu11", params.nu11),
        ("nu22", params.nu22),
        ("nu12", params.nu12),
    ] {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(ModelError::Parameter {
                name,
                value: nu,
                reason: "must lie in (0, 1)",
            });
        }
    }
    positive("sigma1", params.sigma1)?;
    positive("sigma2", params.sigma2)?;
    let s1 = params.sigma1 * params.sigma1;
    let s2 = params.sigma2 * params.sigma2;
    let exp = LocalExpansion {
        sigma1_sq: s1,
        sigma2_sq: s2,
        rho: params.rho,
        c11: s1 * matern_leading_coefficient(params.nu11, params.a11)?,
        c22: s2 * matern_leading_coefficient(params.nu22, params.a22)?,
        c12: matern_leading_coefficient(params.nu12, params.a12)?,
        alpha11: 2.0 * params.nu11,
        alpha22: 2.0 * params.nu22,
        alpha12: 2.0 * params.nu12,
        beta11: 2.0 - 2.0 * params.nu11,
        beta22: 2.0 - 2.0 * params.nu22,
        beta12: 2.0 - 2.0 * params.nu12,
    };
    exp.validate()?;
    Ok(exp)
}

/// Natural log of the one-dimensional Matérn spectral density (unit variance),
/// `f(xi) = Γ(nu+1/2)/(Γ(nu) sqrt(pi)) a^(2nu) (a^2 + xi^2)^(-nu-1/2)`.
pub fn ln_matern_spectral_density(xi: f64, nu: f64, a: f64) -> f64 {
    ln_spectral_constant(nu, a) - (nu + 0.5) * (a * a + xi * xi).ln()
}

fn ln_spectral_constant(nu: f64, a: f64) -> f64 {
    ln_gamma(nu + 0.5).expect("nu > 0")
        - ln_gamma(nu).expect("nu > 0")
        - 0.5 * std::f64::consts::PI.ln()
        + 2.0 * nu * a.ln()
}

/// Minimum number of frequencies accepted by [`check_matern_validity`].
pub const MIN_FREQ_GRID: usize = 128;

/// Spectral (Cramér) validity of a bivariate Matérn model: checks
/// `rho^2 f12^2 <= f11 f22` on a log-spaced frequency grid plus the
/// large-frequency exponent comparison.
pub fn check_matern_validity(
    params: &MaternParams,
    freq_grid_size: usize,
) -> Result<Validity, ModelError> {
    if freq_grid_size < MIN_FREQ_GRID {
        return Err(ModelError::Parameter {
            name: "freq_grid_size",
            value: freq_grid_size as f64,
            reason: "must be at least 128",
        });
    }
    for (name, v) in [
        ("nu11", params.nu11),
        ("nu22", params.nu22),
        ("nu12", params.nu12),
        ("a11", params.a11),
        ("a22", params.a22),
        ("a12", params.a12),
    ] {
        positive(name, v)?;
    }
    if !(params.rho.abs() <= 1.0) {
        return Err(ModelError::Parameter {
            name: "rho",
            value: params.rho,
            reason: "must satisfy |rho| <= 1",
        });
    }
    if params.rho == 0.0 {
        return Ok(Validity::Valid);
    }
    let ln_rho2 = 2.0 * params.rho.abs().ln();

    // Tail: f_ij ~ K_ij xi^(-2 nu_ij - 1).
    let cross_exp = 2.0 * (2.0 * params.nu12 + 1.0);
    let marginal_exp = (2.0 * params.nu11 + 1.0) + (2.0 * params.nu22 + 1.0);
    if cross_exp < marginal_exp - EQUALITY_TOL {
        return Ok(Validity::Invalid(InvalidReason::SpectralTail {
            cross_exponent: cross_exp / 2.0,
            marginal_exponent: marginal_exp / 2.0,
        }));
    }

    let lo = 1e-3 * params.a11.min(params.a22).min(params.a12);
    let hi = 1e6 * params.a11.max(params.a22).max(params.a12);
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let check = |xi: f64| -> Option<InvalidReason> {
        let lhs = ln_rho2 + 2.0 * ln_matern_spectral_density(xi, params.nu12, params.a12);
        let rhs = ln_matern_spectral_density(xi, params.nu11, params.a11)
            + ln_matern_spectral_density(xi, params.nu22, params.a22);
        if lhs > rhs + 1e-12 {
            Some(InvalidReason::Spectral {
                frequency: xi,
                lhs: lhs.exp(),
                rhs: rhs.exp(),
            })
        } else {
            None
        }
    };
    if let Some(reason) = check(0.0) {
        return Ok(Validity::Invalid(reason));
    }
    for i in 0..freq_grid_size {
        let xi = (ln_lo + (ln_hi - ln_lo) * i as f64 / (freq_grid_size - 1) as f64).exp();
        if let Some(reason) = check(xi) {
            return Ok(Validity::Invalid(reason));
        }
    }
    // Equal exponents: the limit ratio is governed by the tail constants.
    if (cross_exp - marginal_exp).abs() <= EQUALITY_TOL {
        let lhs = ln_rho2 + 2.0 * ln_spectral_constant(params.nu12, params.a12);
        let rhs = ln_spectral_constant(params.nu11, params.a11)
            + ln_spectral_constant(params.nu22, params.a22);
        if lhs > rhs + 1e-12 {
            return Ok(Validity::Invalid(InvalidReason::Spectral {
                frequency: f64::INFINITY,
                lhs: lhs.exp(),
                rhs: rhs.exp(),
            }));
        }
    }
    Ok(Validity::Valid)
}

/// Hausdorff dimension of the graph `{(t, X1(t), X2(t))}` over `[0, 1]`.
pub fn trajectory_dimension(alpha11: f64, alpha22: f64) -> Result<f64, ModelError> {
    fractal_exponent("alpha11", alpha11)?;
    fractal_exponent("alpha22", alpha22)?;
    let (lo, hi) = if alpha11 <= alpha22 {
        (alpha11, alpha22)
    } else {
        (alpha22, alpha11)
    };
    Ok(((2.0 + hi - lo) / hi).min(3.0 - 0.5 * (lo + hi)))
}

/// Hausdorff dimension `2 - alpha/2` of a single component's graph.
pub fn component_graph_dimension(alpha: f64) -> Result<f64, ModelError> {
    fractal_exponent("alpha", alpha)?;
    Ok(2.0 - 0.5 * alpha)
}

type Evaluator = dyn Fn(f64) -> [[f64; 2]; 2] + Send + Sync;

/// Lag at which a generic evaluator is compared against its declared expansion.
pub const GENERIC_CHECK_LAG: f64 = 1e-3;
/// Relative tolerance of that comparison.
pub const GENERIC_CHECK_TOL: f64 = 1e-2;

/// A stationary bivariate covariance `t -> C(t)` with its local expansion attached.
#[derive(Clone)]
pub struct CovarianceModel {
    kind: ModelKind,
    expansion: LocalExpansion,
}

#[derive(Clone)]
enum ModelKind {
    Matern(MaternParams),
    Generic {
        name: String,
        evaluator: Arc<Evaluator>,
    },
}

impl fmt::Debug for CovarianceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::Matern(p) => f.debug_tuple("Matern").field(p).finish(),
            ModelKind::Generic { name, .. } => f
                .debug_struct("Generic")
                .field("name", name)
                .field("expansion", &self.expansion)
                .finish(),
        }
    }
}

impl CovarianceModel {
    /// Bivariate Matérn model; checks both the expansion and spectral validity.
    pub fn matern(params: MaternParams) -> Result<Self, ModelError> {
        let expansion = local_expansion(&params)?;
        if let Validity::Invalid(reason) = check_matern_validity(&params, 512)? {
            return Err(ModelError::Invalid(reason.to_string()));
        }
        Ok(Self {
            kind: ModelKind::Matern(params),
            expansion,
        })
    }

    /// User-supplied covariance with a declared local expansion. The evaluator
    /// must reproduce the declared variances at lag 0 and the declared leading
    /// terms at lag [`GENERIC_CHECK_LAG`] to [`GENERIC_CHECK_TOL`].
    pub fn generic<F>(
        name: impl Into<String>,
        expansion: LocalExpansion,
        evaluator: F,
    ) -> Result<Self, ModelError>
    where
        F: Fn(f64) -> [[f64; 2]; 2] + Send + Sync + 'static,
    {
        expansion.validate()?;
        let c0 = evaluator(0.0);
        let h = GENERIC_CHECK_LAG;
        let ch = evaluator(h);
        let zero_lag = [
            ("C11(0)", c0[0][0], expansion.sigma1_sq),
            ("C22(0)", c0[1][1], expansion.sigma2_sq),
            (
                "C12(0)",
                c0[0][1],
                expansion.rho * expansion.sigma1() * expansion.sigma2(),
            ),
        ];
        for (label, got, want) in zero_lag {
            if (got - want).abs() > 1e-12 * want.abs().max(1.0) {
                return Err(ModelError::ExpansionMismatch(format!(
                    "{label} = {got}, declared {want}"
                )));
            }
        }
        let mut leading = vec![
            (
                "C11",
                c0[0][0] - ch[0][0],
                expansion.c11 * h.powf(expansion.alpha11),
            ),
            (
                "C22",
                c0[1][1] - ch[1][1],
                expansion.c22 * h.powf(expansion.alpha22),
            ),
        ];
        if expansion.rho != 0.0 {
            leading.push((
                "C12",
                c0[0][1] - ch[0][1],
                expansion.cross_coefficient() * h.powf(expansion.alpha12),
            ));
        }
        for (label, got, want) in leading {
            let ratio = got / want;
            if !((ratio - 1.0).abs() <= GENERIC_CHECK_TOL) {
                return Err(ModelError::ExpansionMismatch(format!(
                    "{label}(0) - {label}({h}) = {got:e}, declared leading term {want:e}"
                )));
            }
        }
        Ok(Self {
            kind: ModelKind::Generic {
                name: name.into(),
                evaluator: Arc::new(evaluator),
            },
            expansion,
        })
    }

    pub fn expansion(&self) -> &LocalExpansion {
        &self.expansion
    }

    pub fn matern_params(&self) -> Option<&MaternParams> {
        match &self.kind {
            ModelKind::Matern(p) => Some(p),
            ModelKind::Generic { .. } => None,
        }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            ModelKind::Matern(_) => "matern",
            ModelKind::Generic { name, .. } => name,
        }
    }

    /// `C(t)` with `C_ij(t) = E[X_i(s) X_j(s + t)]`.
    pub fn evaluate(&self, t: f64) -> [[f64; 2]; 2] {
        match &self.kind {
            ModelKind::Matern(p) => p.evaluate(t),
            ModelKind::Generic { evaluator, .. } => evaluator(t),
        }
    }

    /// The model with components 1 and 2 relabelled.
    pub fn swapped(&self) -> Self {
        match &self.kind {
            ModelKind::Matern(p) => Self {
                kind: ModelKind::Matern(p.swapped()),
                expansion: self.expansion.swapped(),
            },
            ModelKind::Generic { name, evaluator } => {
                let inner = Arc::clone(evaluator);
                Self {
                    kind: ModelKind::Generic {
                        name: format!("{name} (swapped)"),
                        evaluator: Arc::new(move |t| {
                            let c = inner(t);
                            [[c[1][1], c[1][0]], [c[0][1], c[0][0]]]
                        }),
                    },
                    expansion: self.expansion.swapped(),
                }
            }
        }
    }
}

/// `C(t)` for the given model.
pub fn evaluate_cov(model: &CovarianceModel, t: f64) -> [[f64; 2]; 2] {
    model.evaluate(t)
}

/// Determinant of the covariance matrix of `X(s) - X(s + h)`.
pub fn increment_covariance_det(model: &CovarianceModel, h: f64) -> f64 {
    let c0 = model.evaluate(0.0);
    let ch = model.evaluate(h);
    let d11 = 2.0 * (c0[0][0] - ch[0][0]);
    let d22 = 2.0 * (c0[1][1] - ch[1][1]);
    let d12 = 2.0 * (c0[0][1] - ch[0][1]);
    d11 * d22 - d12 * d12
}
