use std::f64::consts::TAU;

use super::quad::adaptive_simpson;
use super::{Diagnostics, LyapunovError, LyapunovEstimate, Method};
use crate::model::Mat2;

const QUAD_TOL: f64 = 1e-10;

/// Exponential-form density for noise `B = [[α, -β], [β, α]]`:
///
/// ```text
/// p(θ) = K/β² exp{ ((a21 - a12 - αβ) θ + (a11 - a22)/2 cos 2θ + (a21 - a12)/2 sin 2θ) / β² }
/// ```
///
/// with `K` fixed by `∫_0^{2π} p = 1`. The linear term makes `p` non-periodic
/// unless `a21 - a12 = αβ`; check [`ClosedFormDensity::periodicity_defect`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormDensity {
    pub a: Mat2,
    pub alpha: f64,
    pub beta: f64,
    /// `ln ∫_0^{2π} exp(E(θ)) dθ`.
    log_norm: f64,
}

impl ClosedFormDensity {
    fn exponent(&self, theta: f64) -> f64 {
        let a = &self.a;
        let (s2, c2) = (2.0 * theta).sin_cos();
        ((a.a21 - a.a12 - self.alpha * self.beta) * theta
            + 0.5 * (a.a11 - a.a22) * c2
            + 0.5 * (a.a21 - a.a12) * s2)
            / (self.beta * self.beta)
    }

    pub fn eval(&self, theta: f64) -> f64 {
        (self.exponent(theta) - self.log_norm).exp()
    }

    /// The normalizing constant `K = β² / ∫ exp(E)`.
    pub fn k(&self) -> f64 {
        (2.0 * self.beta.abs().ln() - self.log_norm).exp()
    }

    pub fn periodicity_defect(&self) -> f64 {
        (self.eval(TAU) - self.eval(0.0)).abs()
    }

    /// `∫_0^{2π} w(θ) p(θ) dθ`.
    pub fn expect<F: Fn(f64) -> f64>(&self, w: F) -> f64 {
        adaptive_simpson(|t| w(t) * self.eval(t), 0.0, TAU, QUAD_TOL)
    }
}

pub fn closed_form_density(a: Mat2, alpha: f64, beta: f64) -> Result<ClosedFormDensity, LyapunovError> {
    if beta == 0.0 {
        return Err(LyapunovError::ZeroBeta);
    }
    if !(a.is_finite() && alpha.is_finite() && beta.is_finite()) {
        return Err(LyapunovError::InvalidConfig("non-finite closed-form input".into()));
    }
    let mut d = ClosedFormDensity {
        a,
        alpha,
        beta,
        log_norm: 0.0,
    };
    // shift by the max exponent so the quadrature stays in range
    let shift = (0..=4096)
        .map(|i| d.exponent(TAU * i as f64 / 4096.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let z = adaptive_simpson(|t| (d.exponent(t) - shift).exp(), 0.0, TAU, QUAD_TOL);
    d.log_norm = shift + z.ln();
    if !d.log_norm.is_finite() {
        return Err(LyapunovError::NonFinite("closed-form normalization".into()));
    }
    Ok(d)
}

/// `λ = (a11 + a22 + β² - α²)/2 + (a11 - a22) c2 / 2 + (a21 + a12) s2 / 2`
/// with `c2`, `s2` the cos 2θ and sin 2θ moments of the closed-form density.
pub fn closed_form_lyapunov(a: Mat2, alpha: f64, beta: f64) -> Result<LyapunovEstimate, LyapunovError> {
    let d = closed_form_density(a, alpha, beta)?;
    let c2 = d.expect(|t| (2.0 * t).cos());
    let s2 = d.expect(|t| (2.0 * t).sin());
    let value = 0.5 * (a.a11 + a.a22 + beta * beta - alpha * alpha)
        + 0.5 * (a.a11 - a.a22) * c2
        + 0.5 * (a.a21 + a.a12) * s2;
    if !value.is_finite() {
        return Err(LyapunovError::NonFinite(format!("lambda = {value}")));
    }
    Ok(LyapunovEstimate {
        value,
        method: Method::Closed,
        stderr: 0.0,
        n: 0,
        diagnostics: Diagnostics {
            periodicity_defect: d.periodicity_defect(),
            min_q4_sq: beta * beta,
        },
    })
}
