use rayon::prelude::*;

use super::closed::closed_form_lyapunov;
use super::density::{lyapunov_fd, FdOptions};
use super::mc::{lyapunov_mc, McConfig};
use super::{LyapunovError, LyapunovEstimate, Method};
use crate::model::{Equilibrium, Mat2, ModelSpec};
use crate::sde::{linearize, LinearSde};

/// `lo, lo + step, ...` up to `hi`, inclusive when `hi` is within half a step
/// of a grid node.
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, LyapunovError> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) {
        return Err(LyapunovError::InvalidConfig("alpha range must be finite".into()));
    }
    if step <= 0.0 {
        return Err(LyapunovError::InvalidConfig(format!("alpha step must be > 0, got {step}")));
    }
    if hi < lo {
        return Err(LyapunovError::InvalidConfig(format!("alpha range {lo}:{hi} is reversed")));
    }
    let n = ((hi - lo) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub method: Method,
    pub fd: FdOptions,
    /// For mc, `stream_base` is replaced per grid point by `index << 32`.
    pub mc: McConfig,
    /// Bisection stops once a bracket is at most this wide.
    pub refine_width: f64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        SweepSettings {
            method: Method::Fd,
            fd: FdOptions::default(),
            mc: McConfig::default(),
            refine_width: 1e-3,
        }
    }
}

impl SweepSettings {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub result: Result<LyapunovEstimate, LyapunovError>,
}

/// A refined zero crossing. `lo` and `hi` bracket it with opposite stability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignChange {
    pub lo: f64,
    pub hi: f64,
    pub location: f64,
    /// True when λ goes from unstable to stable as α increases.
    pub stabilizing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub method: Method,
    pub beta: f64,
    pub points: Vec<SweepPoint>,
    pub sign_changes: Vec<SignChange>,
    /// Closed α-intervals with λ ≤ 0, clipped to the grid.
    pub stable_set: Vec<(f64, f64)>,
}

struct Evaluator<'a> {
    a: Mat2,
    beta: f64,
    settings: &'a SweepSettings,
}

impl Evaluator<'_> {
    fn eval(&self, alpha: f64, index: usize) -> Result<LyapunovEstimate, LyapunovError> {
        let sys = LinearSde::new(self.a, Mat2::rotation_family(alpha, self.beta));
        match self.settings.method {
            Method::Fd => lyapunov_fd(&sys, &self.settings.fd),
            Method::Closed => closed_form_lyapunov(self.a, alpha, self.beta),
            Method::Mc => {
                let cfg = McConfig {
                    stream_base: (index as u64) << 32,
                    ..self.settings.mc
                };
                lyapunov_mc(&sys, &cfg)
            }
        }
    }

    /// Bisects `[lo, hi]`, reusing the left node's random streams for every
    /// midpoint so mc refinement sees common noise.
    fn refine(&self, mut lo: f64, mut hi: f64, lo_stable: bool, index: usize) -> (f64, f64) {
        while hi - lo > self.settings.refine_width {
            let mid = 0.5 * (lo + hi);
            match self.eval(mid, index) {
                Ok(e) if e.is_stable() == lo_stable => lo = mid,
                Ok(_) => hi = mid,
                Err(_) => break,
            }
        }
        (lo, hi)
    }
}

/// λ(α) for `B = [[α, -β], [β, α]]` and a fixed drift matrix.
pub fn sweep_linear(
    a: Mat2,
    beta: f64,
    alphas: &[f64],
    settings: &SweepSettings,
) -> Result<SweepResult, LyapunovError> {
    if alphas.iter().any(|v| !v.is_finite()) || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LyapunovError::InvalidConfig("alpha grid must be strictly increasing".into()));
    }
    if !(settings.refine_width > 0.0) {
        return Err(LyapunovError::InvalidConfig("refine width must be > 0".into()));
    }
    let ev = Evaluator { a, beta, settings };

    let points: Vec<SweepPoint> = alphas
        .par_iter()
        .enumerate()
        .map(|(i, &alpha)| SweepPoint {
            alpha,
            result: ev.eval(alpha, i),
        })
        .collect();

    // (index, alpha, stable) of the points that succeeded
    let ok: Vec<(usize, f64, bool)> = points
        .iter()
        .enumerate()
        .filter_map(|(i, p)| p.result.as_ref().ok().map(|e| (i, p.alpha, e.is_stable())))
        .collect();

    let brackets: Vec<_> = ok.windows(2).filter(|w| w[0].2 != w[1].2).map(|w| (w[0], w[1])).collect();
    let sign_changes: Vec<SignChange> = brackets
        .par_iter()
        .map(|&((i, lo, lo_stable), (_, hi, _))| {
            let (l, h) = ev.refine(lo, hi, lo_stable, i);
            SignChange {
                lo: l,
                hi: h,
                location: 0.5 * (l + h),
                stabilizing: !lo_stable,
            }
        })
        .collect();

    let mut stable_set = Vec::new();
    let mut open = match ok.first() {
        Some(&(_, alpha, true)) => Some(alpha),
        _ => None,
    };
    for c in &sign_changes {
        if c.stabilizing {
            open = Some(c.location);
        } else if let Some(start) = open.take() {
            stable_set.push((start, c.location));
        }
    }
    if let (Some(start), Some(&(_, last, _))) = (open, ok.last()) {
        stable_set.push((start, last));
    }

    Ok(SweepResult {
        method: settings.method,
        beta,
        points,
        sign_changes,
        stable_set,
    })
}

/// Sweeps the linearization of `model` at `e`.
pub fn stability_sweep(
    model: &ModelSpec,
    e: &Equilibrium,
    beta: f64,
    alphas: &[f64],
    settings: &SweepSettings,
) -> Result<SweepResult, LyapunovError> {
    let sys = linearize(model, Mat2::ZERO, e)?;
    sweep_linear(sys.a, beta, alphas, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        assert_eq!(alpha_grid(-4.0, 4.0, 0.02).unwrap().len(), 401);
        assert_eq!(alpha_grid(0.0, 1.0, 0.3).unwrap().len(), 4);
        assert_eq!(alpha_grid(1.0, 1.0, 0.1).unwrap(), vec![1.0]);
        assert!(alpha_grid(0.0, 1.0, 0.0).is_err());
        assert!(alpha_grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn empty_grid_gives_empty_result() {
        let r = sweep_linear(Mat2::ZERO, -2.0, &[], &SweepSettings::default()).unwrap();
        assert!(r.points.is_empty() && r.sign_changes.is_empty() && r.stable_set.is_empty());
    }

    #[test]
    fn rejects_unsorted_grid() {
        assert!(sweep_linear(Mat2::ZERO, -2.0, &[0.0, 0.0], &SweepSettings::default()).is_err());
    }

    #[test]
    fn isotropic_crossings_are_exact() {
        // λ = a + (β² - α²)/2 crosses at α = ±sqrt(2a + β²) = ±sqrt(3.8)
        let a = Mat2::scaled_identity(-0.1);
        let settings = SweepSettings::default().with_method(Method::Closed);
        let r = sweep_linear(a, -2.0, &alpha_grid(-4.0, 4.0, 0.1).unwrap(), &settings).unwrap();
        let root = 3.8f64.sqrt();
        assert_eq!(r.sign_changes.len(), 2);
        assert!((r.sign_changes[0].location + root).abs() < 1e-3);
        assert!((r.sign_changes[1].location - root).abs() < 1e-3);
        assert!(r.sign_changes[0].stabilizing ^ r.sign_changes[1].stabilizing);
        assert_eq!(r.stable_set.len(), 2);
        assert_eq!(r.stable_set[0].0, -4.0);
        assert_eq!(r.stable_set[1].1, r.points.last().unwrap().alpha);
    }

    #[test]
    fn failures_are_recorded_and_sweep_continues() {
        // β = 0 makes the closed form undefined everywhere
        let settings = SweepSettings::default().with_method(Method::Closed);
        let r = sweep_linear(Mat2::ZERO, 0.0, &[0.0, 1.0], &settings).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.points.iter().all(|p| p.result.is_err()));
        assert!(r.stable_set.is_empty());
    }
}
