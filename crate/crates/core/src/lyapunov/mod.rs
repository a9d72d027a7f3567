//! Top Lyapunov exponent of `dX = A X dt + B X dW`.
//!
//! In polar coordinates `X = r (cos θ, sin θ)` the angle is an autonomous
//! diffusion on the circle and
//!
//! ```text
//! d log r = (q1 + (q4^2 - q2^2)/2) dt + q2 dW
//! dθ      = (q3 - q2 q4) dt + q4 dW
//! ```
//!
//! so λ is the average of `q1 + (q4^2 - q2^2)/2` against the stationary law of
//! θ. Three estimators are provided: a backward-difference solve of the
//! stationary Fokker-Planck equation ([`lyapunov_fd`]), the exponential
//! density for rotation-family noise ([`closed_form_lyapunov`]) and Monte Carlo
//! on the polar pair ([`lyapunov_mc`]).

mod closed;
mod density;
mod mc;
mod phase;
mod quad;
mod sweep;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::ModelError;

pub use closed::{closed_form_density, closed_form_lyapunov, ClosedFormDensity};
pub use density::{
    integrating_factor_density, lyapunov_fd, stationary_density_fd, FdOptions, FluxConstant,
    PhaseDensity, Span,
};
pub use mc::{lyapunov_mc, McConfig};
pub use phase::{phase_coefficients, PhaseCoefficients};
pub use quad::adaptive_simpson;
pub use sweep::{
    alpha_grid, stability_sweep, sweep_linear, SignChange, SweepPoint, SweepResult,
    SweepSettings,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LyapunovError {
    #[error("degenerate phase diffusion: min q4^2 = {min_q4_sq:e} below {floor:e}; use the mc method")]
    DegeneratePhaseDiffusion { min_q4_sq: f64, floor: f64 },
    #[error("phase density went negative at node {index}; refine the grid")]
    NegativeDensity { index: usize },
    #[error("closed-form density is undefined for beta = 0")]
    ZeroBeta,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite result: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Fd,
    Closed,
    Mc,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fd => "fd",
            Method::Closed => "closed",
            Method::Mc => "mc",
        })
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fd" => Ok(Method::Fd),
            "closed" => Ok(Method::Closed),
            "mc" => Ok(Method::Mc),
            _ => Err(format!("unknown method `{s}` (expected fd|closed|mc)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// `|p(end) - p(0)|` of the normalized density (0 for mc).
    pub periodicity_defect: f64,
    /// Smallest `q4^2` seen on the grid (NaN when not applicable).
    pub min_q4_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub value: f64,
    pub method: Method,
    /// Standard error of the mean for mc, 0 otherwise.
    pub stderr: f64,
    /// Grid size, quadrature nodes or path count.
    pub n: usize,
    pub diagnostics: Diagnostics,
}

impl LyapunovEstimate {
    pub fn is_stable(&self) -> bool {
        self.value <= 0.0
    }
}
