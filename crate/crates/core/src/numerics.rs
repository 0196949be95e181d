//! Special functions and quadrature oracles.
//!
//! Three layers live here:
//!
//! * `erf`/`erfc` kernels, a double-precision port of the classic FreeBSD
//!   libm rational approximations (absolute error below 1e-12),
//! * the J curve fit mapping the standard deviation of a consistent
//!   Gaussian LLR to mutual information, together with its piecewise
//!   inverse, using the published fit coefficients verbatim,
//! * a direct numerical-quadrature evaluation of the same mutual
//!   information, used as an independent oracle for the fit.
//!
//! # Example
//!
//! ```
//! use fg_mimo_core::numerics::{j_function, mutual_information_quadrature, QuadratureSpec};
//!
//! let sigma = 1.25_f64;
//! let fitted = j_function(sigma).unwrap();
//! let exact = mutual_information_quadrature(sigma * sigma, &QuadratureSpec::default()).unwrap();
//! assert!((fitted - exact).abs() < 5e-3);
//! ```

#![allow(clippy::excessive_precision)]

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::real::Real;

const ERX: f64 = 8.45062911510467529297e-01;

// Coefficients for erf on [0, 0.84375].
const EFX: f64 = 1.28379167095512586316e-01;
const EFX8: f64 = 1.02703333676410069053e+00;
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;

// Coefficients for erf on [0.84375, 1.25].
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;

// Coefficients for erfc on [1.25, 1/0.35].
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;

// Coefficients for erfc on [1/0.35, 28].
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

const VERY_TINY: f64 = 2.848094538889218e-306; // 0x0080000000000000
const TINY: f64 = 1.3877787807814457e-17; // 2^-56
const SMALL: f64 = 3.725290298461914e-9; // 2^-28

/// Raw error-function kernel; callers must handle non-finite inputs.
pub(crate) fn erf_kernel(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    } else if x == f64::INFINITY {
        return 1.0;
    } else if x == f64::NEG_INFINITY {
        return -1.0;
    }
    let sign = x < 0.0;
    let x = x.abs();
    if x < 0.84375 {
        let temp = if x < SMALL {
            if x < VERY_TINY {
                0.125 * (8.0 * x + EFX8 * x) // avoid underflow
            } else {
                x + EFX * x
            }
        } else {
            let z = x * x;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            x + x * (r / s)
        };
        return if sign { -temp } else { temp };
    }
    if x < 1.25 {
        let s = x - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return if sign { -ERX - p / q } else { ERX + p / q };
    }
    if x >= 6.0 {
        return if sign { -1.0 } else { 1.0 };
    }
    let s = 1.0 / (x * x);
    let (num, den) = if x < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2
                        + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // Truncate x to pseudo-single precision so -z*z is exact.
    let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
    let r = f64::exp(-z * z - 0.5625) * f64::exp((z - x) * (z + x) + num / den);
    if sign {
        r / x - 1.0
    } else {
        1.0 - r / x
    }
}

/// Raw complementary-error-function kernel; callers must handle non-finite inputs.
pub(crate) fn erfc_kernel(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    } else if x == f64::INFINITY {
        return 0.0;
    } else if x == f64::NEG_INFINITY {
        return 2.0;
    }
    let sign = x < 0.0;
    let x = x.abs();
    if x < 0.84375 {
        let temp = if x < TINY {
            x
        } else {
            let z = x * x;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            let y = r / s;
            if x < 0.25 {
                x + x * y
            } else {
                0.5 + (x * y + (x - 0.5))
            }
        };
        return if sign { 1.0 + temp } else { 1.0 - temp };
    }
    if x < 1.25 {
        let s = x - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return if sign { 1.0 + ERX + p / q } else { 1.0 - ERX - p / q };
    }
    if x < 28.0 {
        let s = 1.0 / (x * x);
        let (num, den) = if x < 1.0 / 0.35 {
            (
                RA0 + s
                    * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
                1.0 + s
                    * (SA1
                        + s * (SA2
                            + s * (SA3
                                + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
            )
        } else {
            if sign && x > 6.0 {
                return 2.0;
            }
            (
                RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
                1.0 + s
                    * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
            )
        };
        // Truncate x to pseudo-single precision so -z*z is exact.
        let z = f64::from_bits(x.to_bits() & 0xffff_ffff_0000_0000);
        let r = f64::exp(-z * z - 0.5625) * f64::exp((z - x) * (z + x) + num / den);
        return if sign { 2.0 - r / x } else { r / x };
    }
    if sign {
        2.0
    } else {
        0.0
    }
}

/// Error function, `(2/√π)·∫₀ˣ exp(−t²) dt`.
pub fn erf<R: Real>(x: R) -> Result<R> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("erf requires a finite argument, got {x}")));
    }
    Ok(x.erf())
}

/// Complementary error function, `1 − erf(x)`, without cancellation for large `x`.
pub fn erfc<R: Real>(x: R) -> Result<R> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("erfc requires a finite argument, got {x}")));
    }
    Ok(x.erfc())
}

/// Coefficients of the piecewise J curve fit and its inverse.
///
/// `J(σ)` approximates the mutual information carried by a consistent
/// Gaussian LLR of standard deviation `σ` (mean `σ²/2`, variance `σ²`).
/// The forward fit is a cubic up to `sigma_star`, then `1 − exp(cubic)`
/// up to `σ = 10`, then exactly 1. The inverse uses a polynomial-in-√I
/// branch up to `i_star` and a logarithmic branch above it.
#[derive(Debug, Clone, PartialEq)]
pub struct JCoefficients<R> {
    pub sigma_star: R,
    pub a_j1: R,
    pub b_j1: R,
    pub e_j1: R,
    pub a_j2: R,
    pub b_j2: R,
    pub e_j2: R,
    pub d_j2: R,
    pub i_star: R,
    pub a_s1: R,
    pub b_s1: R,
    pub e_s1: R,
    pub a_s2: R,
    pub b_s2: R,
    pub e_s2: R,
}

impl<R: Real> Default for JCoefficients<R> {
    fn default() -> Self {
        Self {
            sigma_star: R::of(1.6363),
            a_j1: R::of(-0.0421061),
            b_j1: R::of(0.209252),
            e_j1: R::of(-0.00640081),
            a_j2: R::of(0.00181491),
            b_j2: R::of(-0.142675),
            e_j2: R::of(-0.0822054),
            d_j2: R::of(0.0549608),
            i_star: R::of(0.3646),
            a_s1: R::of(1.09542),
            b_s1: R::of(0.214217),
            e_s1: R::of(2.33727),
            a_s2: R::of(0.706692),
            b_s2: R::of(0.386013),
            e_s2: R::of(-1.75017),
        }
    }
}

impl<R: Real> JCoefficients<R> {
    /// Evaluates `J(σ)`, clamped into `[0, 1]`.
    pub fn evaluate(&self, sigma: R) -> Result<R> {
        if sigma.is_nan() || sigma < R::zero() {
            return Err(Error::Domain(format!(
                "j_function requires sigma >= 0, got {sigma}"
            )));
        }
        let value = if sigma <= self.sigma_star {
            ((self.a_j1 * sigma + self.b_j1) * sigma + self.e_j1) * sigma
        } else if sigma < R::of(10.0) {
            let cubic =
                ((self.a_j2 * sigma + self.b_j2) * sigma + self.e_j2) * sigma + self.d_j2;
            R::one() - cubic.exp()
        } else {
            R::one()
        };
        Ok(value.max(R::zero()).min(R::one()))
    }

    /// Evaluates `J⁻¹(I)`, returning the standard deviation `σ`.
    ///
    /// Callers that need the variance square the result. Inputs at or above
    /// 1 are rejected; cap them below 1 before calling.
    pub fn invert(&self, i: R) -> Result<R> {
        if !(i >= R::zero() && i < R::one()) {
            return Err(Error::Domain(format!(
                "j_inverse requires 0 <= I < 1, got {i}"
            )));
        }
        let sigma = if i <= self.i_star {
            (self.a_s1 * i + self.b_s1) * i + self.e_s1 * i.sqrt()
        } else {
            -self.a_s2 * (self.b_s2 * (R::one() - i)).ln() - self.e_s2 * i
        };
        Ok(sigma.max(R::zero()))
    }
}

/// Evaluates the J curve fit with the published coefficients.
pub fn j_function<R: Real>(sigma: R) -> Result<R> {
    JCoefficients::default().evaluate(sigma)
}

/// Evaluates the inverse J fit with the published coefficients.
pub fn j_inverse<R: Real>(i: R) -> Result<R> {
    JCoefficients::default().invert(i)
}

/// Quadrature rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Uniform trapezoid rule.
    Trapezoid,
    /// Gauss-Legendre nodes on the same interval.
    GaussLegendre,
}

/// Configuration of the mutual-information quadrature oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    integration_half_width: f64,
    node_count: usize,
    rule: QuadratureRule,
}

impl QuadratureSpec {
    /// Builds a validated spec.
    ///
    /// Oracle use requires at least 1001 nodes and an integration window of
    /// at least 10 standard deviations on each side of the mean.
    pub fn new(rule: QuadratureRule, node_count: usize, integration_half_width: f64) -> Result<Self> {
        if node_count < 1001 {
            return Err(Error::InvalidArgument(format!(
                "quadrature node_count must be >= 1001, got {node_count}"
            )));
        }
        if integration_half_width.is_nan() || integration_half_width < 10.0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature half_width must be >= 10 standard deviations, got {integration_half_width}"
            )));
        }
        Ok(Self {
            integration_half_width,
            node_count,
            rule,
        })
    }

    /// Integration window half-width in standard deviations.
    pub fn integration_half_width(&self) -> f64 {
        self.integration_half_width
    }

    /// Number of quadrature nodes.
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Selected rule.
    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }
}

impl Default for QuadratureSpec {
    /// 20001 trapezoid nodes over mean ± 12 standard deviations.
    fn default() -> Self {
        Self {
            integration_half_width: 12.0,
            node_count: 20001,
            rule: QuadratureRule::Trapezoid,
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
///
/// Nodes are found by Newton iteration on the Legendre recurrence; weights
/// follow from the derivative at each root.
pub fn gauss_legendre_nodes(node_count: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(node_count >= 1, "at least one node required");
    let n = node_count;
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for j in 0..n {
                let jf = j as f64;
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * jf + 1.0) * z * p1 - jf * p2) / (jf + 1.0);
            }
            dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let step = p0 / dp;
            z -= step;
            if step.abs() < 3e-14 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrates `f` over `[a, b]` with the given spec.
fn integrate(f: impl Fn(f64) -> f64, spec: &QuadratureSpec, a: f64, b: f64) -> f64 {
    match spec.rule {
        QuadratureRule::Trapezoid => {
            let n = spec.node_count;
            let h = (b - a) / (n - 1) as f64;
            let mut sum = 0.5 * (f(a) + f(b));
            for k in 1..n - 1 {
                sum += f(a + h * k as f64);
            }
            sum * h
        }
        QuadratureRule::GaussLegendre => {
            let (nodes, weights) = gauss_legendre_nodes(spec.node_count);
            let mid = 0.5 * (a + b);
            let half = 0.5 * (b - a);
            nodes
                .iter()
                .zip(&weights)
                .map(|(&t, &w)| w * f(mid + half * t))
                .sum::<f64>()
                * half
        }
    }
}

/// Mutual information between a uniform binary symbol and a consistent
/// Gaussian LLR of the given variance (mean ± variance/2), by quadrature.
///
/// This is the defining integral that the J fit approximates; it serves as
/// the independent oracle for [`j_function`].
pub fn mutual_information_quadrature<R: Real>(variance: R, spec: &QuadratureSpec) -> Result<R> {
    let v = variance.as_f64();
    if !v.is_finite() || v < 0.0 {
        return Err(Error::Domain(format!(
            "mutual information requires variance >= 0, got {variance}"
        )));
    }
    if v == 0.0 {
        return Ok(R::zero());
    }
    let sd = v.sqrt();
    let mean = 0.5 * v;
    let norm = 1.0 / (sd * (2.0 * PI).sqrt());
    // E[log2(1 + e^{-gamma})] under gamma ~ N(v/2, v); by symmetry of the
    // consistent Gaussian this single conditional expectation is the full
    // binary mutual-information deficit.
    let integrand = |gamma: f64| {
        let z = (gamma - mean) / sd;
        let softplus = (-gamma).max(0.0) + (-gamma.abs()).exp().ln_1p();
        norm * (-0.5 * z * z).exp() * softplus / LN_2
    };
    let a = mean - spec.integration_half_width * sd;
    let b = mean + spec.integration_half_width * sd;
    let deficit = integrate(integrand, spec, a, b);
    Ok(R::of((1.0 - deficit).clamp(0.0, 1.0)))
}
