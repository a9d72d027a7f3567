use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use super::phase::{phase_coefficients, PhaseCoefficients};
use super::{Diagnostics, LyapunovError, LyapunovEstimate, Method};
use crate::sde::LinearSde;

/// Angular period the density is solved over.
///
/// The coefficients of a linear system are π-periodic, so both spans give the
/// same exponent; `Pi` halves the work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Span {
    Pi,
    #[default]
    TwoPi,
}

impl Span {
    pub fn radians(self) -> f64 {
        match self {
            Span::Pi => PI,
            Span::TwoPi => TAU,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Span::Pi => "pi",
            Span::TwoPi => "2pi",
        })
    }
}

impl FromStr for Span {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pi" => Ok(Span::Pi),
            "2pi" => Ok(Span::TwoPi),
            _ => Err(format!("unknown span `{s}` (expected pi|2pi)")),
        }
    }
}

/// How the constant on the right of the first-order stationary equation
/// `(-q3 + q2 q4 + q4 q5) p + q4^2 p' / 2 = p0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxConstant {
    /// Solve for the `p0` that makes the discrete density periodic.
    #[default]
    Periodic,
    /// Use the seed value `p0 = p(0) = 1`; the result is generally not periodic.
    SeedValue,
}

impl fmt::Display for FluxConstant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluxConstant::Periodic => "periodic",
            FluxConstant::SeedValue => "seed",
        })
    }
}

impl FromStr for FluxConstant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "periodic" => Ok(FluxConstant::Periodic),
            "seed" => Ok(FluxConstant::SeedValue),
            _ => Err(format!("unknown flux mode `{s}` (expected periodic|seed)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub n: usize,
    pub span: Span,
    pub flux: FluxConstant,
    /// Smallest admissible `q4^2` on the grid.
    pub q4_floor: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            n: 10_000,
            span: Span::TwoPi,
            flux: FluxConstant::Periodic,
            q4_floor: 1e-12,
        }
    }
}

impl FdOptions {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_span(mut self, span: Span) -> Self {
        self.span = span;
        self
    }

    pub fn with_flux(mut self, flux: FluxConstant) -> Self {
        self.flux = flux;
        self
    }
}

/// Stationary angular density on the nodes `θ_i = i h`, `i = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDensity {
    pub n: usize,
    pub step: f64,
    pub span: Span,
    pub values: Vec<f64>,
    /// `|p(n) - p(0)|` after normalization.
    pub periodicity_defect: f64,
    pub min_q4_sq: f64,
    /// Normalized integration constant `p0` (NaN when not applicable).
    pub flux: f64,
}

impl PhaseDensity {
    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    /// `sum_{i=1..n} p(i) h`.
    pub fn integral(&self) -> f64 {
        self.values[1..].iter().sum::<f64>() * self.step
    }
}

fn grid(sys: &LinearSde, n: usize, h: f64) -> Vec<PhaseCoefficients> {
    (0..=n).map(|i| phase_coefficients(sys, i as f64 * h)).collect()
}

fn check_options(opts: &FdOptions) -> Result<(), LyapunovError> {
    if opts.n < 2 {
        return Err(LyapunovError::InvalidConfig(format!("grid size must be >= 2, got {}", opts.n)));
    }
    if !(opts.q4_floor >= 0.0) {
        return Err(LyapunovError::InvalidConfig("q4 floor must be >= 0".into()));
    }
    Ok(())
}

fn solve(sys: &LinearSde, opts: &FdOptions) -> Result<(PhaseDensity, Vec<PhaseCoefficients>), LyapunovError> {
    check_options(opts)?;
    let n = opts.n;
    let h = opts.span.radians() / n as f64;
    let q = grid(sys, n, h);
    let min_q4_sq = q.iter().map(|c| c.q4 * c.q4).fold(f64::INFINITY, f64::min);
    if !(min_q4_sq >= opts.q4_floor) || min_q4_sq == 0.0 {
        return Err(LyapunovError::DegeneratePhaseDiffusion {
            min_q4_sq,
            floor: opts.q4_floor,
        });
    }

    // Backward difference at node i:
    //   (c_i + d_i) p(i) - c_i p(i-1) = p0,  c_i = q4^2 / 2h,  d_i = -q3 + q2 q4 + q4 q5
    // so p(i) = (p0 + c_i p(i-1)) F(i) with F(i) = 1 / (c_i + d_i).
    let c: Vec<f64> = q.iter().map(|v| v.q4 * v.q4 / (2.0 * h)).collect();
    let d: Vec<f64> = q.iter().map(|v| -v.q3 + v.q2 * v.q4 + v.q4 * v.q5).collect();

    let mut p = vec![0.0; n + 1];
    let p0;
    match opts.flux {
        FluxConstant::SeedValue => {
            p0 = 1.0;
            p[0] = 1.0;
            for i in 1..=n {
                p[i] = (p0 + c[i] * p[i - 1]) / (c[i] + d[i]);
            }
        }
        FluxConstant::Periodic => {
            // p = P u + p0 v by linearity; run in whichever direction contracts.
            let growth: f64 = (1..=n).map(|i| (c[i] / (c[i] + d[i])).abs().ln()).sum();
            let mut u = vec![0.0; n + 1];
            let mut v = vec![0.0; n + 1];
            if growth <= 0.0 {
                u[0] = 1.0;
                for i in 1..=n {
                    let den = c[i] + d[i];
                    u[i] = c[i] * u[i - 1] / den;
                    v[i] = (1.0 + c[i] * v[i - 1]) / den;
                }
                p0 = (1.0 - u[n]) / v[n];
            } else {
                u[n] = 1.0;
                for i in (1..=n).rev() {
                    let den = c[i] + d[i];
                    u[i - 1] = den * u[i] / c[i];
                    v[i - 1] = (den * v[i] - 1.0) / c[i];
                }
                p0 = (1.0 - u[0]) / v[0];
            }
            for i in 0..=n {
                p[i] = u[i] + p0 * v[i];
            }
        }
    }

    let z = p[1..].iter().sum::<f64>() * h;
    if !(z.is_finite() && z > 0.0) || !p0.is_finite() {
        return Err(LyapunovError::NonFinite(format!(
            "phase density normalization {z} (flux {p0})"
        )));
    }
    for v in p.iter_mut() {
        *v /= z;
    }
    if let Some(index) = p.iter().position(|v| *v < 0.0) {
        return Err(LyapunovError::NegativeDensity { index });
    }
    let density = PhaseDensity {
        n,
        step: h,
        span: opts.span,
        periodicity_defect: (p[n] - p[0]).abs(),
        values: p,
        min_q4_sq,
        flux: p0 / z,
    };
    Ok((density, q))
}

/// Stationary phase density by the backward-difference recurrence.
pub fn stationary_density_fd(sys: &LinearSde, opts: &FdOptions) -> Result<PhaseDensity, LyapunovError> {
    solve(sys, opts).map(|(d, _)| d)
}

/// `λ(N) = sum_{i=1..N} (q1 + (q4^2 - q2^2)/2)(i) p(i) h`.
pub fn lyapunov_fd(sys: &LinearSde, opts: &FdOptions) -> Result<LyapunovEstimate, LyapunovError> {
    let (density, q) = solve(sys, opts)?;
    let value = (1..=density.n)
        .map(|i| q[i].growth_rate() * density.values[i])
        .sum::<f64>()
        * density.step;
    if !value.is_finite() {
        return Err(LyapunovError::NonFinite(format!("lambda = {value}")));
    }
    Ok(LyapunovEstimate {
        value,
        method: Method::Fd,
        stderr: 0.0,
        n: density.n,
        diagnostics: Diagnostics {
            periodicity_defect: density.periodicity_defect,
            min_q4_sq: density.min_q4_sq,
        },
    })
}

/// Density in integrating-factor form over `[0, 2π]`:
///
/// ```text
/// p = K / (D q4^2) (1 + η ∫_0^θ D),  D = exp(-2 ∫_0^θ (q3 - q2 q4 - q4 q5) / q4^2)
/// η = (D(2π) - 1) / ∫_0^{2π} D
/// ```
///
/// Integrals use the trapezoid rule on `n` intervals. Diagnostic only: the
/// q5 term enters `D` with the opposite sign to the backward-difference
/// scheme, so the two agree only when `q4 q5` vanishes.
pub fn integrating_factor_density(sys: &LinearSde, n: usize) -> Result<PhaseDensity, LyapunovError> {
    check_options(&FdOptions::default().with_n(n))?;
    let h = TAU / n as f64;
    let q = grid(sys, n, h);
    let min_q4_sq = q.iter().map(|c| c.q4 * c.q4).fold(f64::INFINITY, f64::min);
    if min_q4_sq == 0.0 || !min_q4_sq.is_finite() {
        return Err(LyapunovError::DegeneratePhaseDiffusion {
            min_q4_sq,
            floor: 0.0,
        });
    }
    let k: Vec<f64> = q
        .iter()
        .map(|v| (v.q3 - v.q2 * v.q4 - v.q4 * v.q5) / (v.q4 * v.q4))
        .collect();
    let mut log_d = vec![0.0; n + 1];
    for i in 1..=n {
        log_d[i] = log_d[i - 1] - h * (k[i - 1] + k[i]);
    }
    // 1 + η C(θ) = (R(θ) + D(2π) C(θ)) / C(2π) with C = ∫_0^θ D, R = ∫_θ^{2π} D;
    // both terms are carried relative to D(θ) to avoid cancellation
    let ratio = |i: usize, j: usize| (log_d[j] - log_d[i]).exp();
    let mut fwd = vec![0.0; n + 1];
    for i in 1..=n {
        let r = ratio(i, i - 1);
        fwd[i] = fwd[i - 1] * r + 0.5 * h * (r + 1.0);
    }
    let mut bwd = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let r = ratio(i, i + 1);
        bwd[i] = bwd[i + 1] * r + 0.5 * h * (r + 1.0);
    }
    let d_end = log_d[n].exp();
    let mut p: Vec<f64> = (0..=n)
        .map(|i| (bwd[i] + d_end * fwd[i]) / (q[i].q4 * q[i].q4))
        .collect();
    let z = p[1..].iter().sum::<f64>() * h;
    if !(z.is_finite() && z > 0.0) {
        return Err(LyapunovError::NonFinite(format!("normalization {z}")));
    }
    for v in p.iter_mut() {
        *v /= z;
    }
    Ok(PhaseDensity {
        n,
        step: h,
        span: Span::TwoPi,
        periodicity_defect: (p[n] - p[0]).abs(),
        values: p,
        min_q4_sq,
        flux: f64::NAN,
    })
}
