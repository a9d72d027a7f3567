//! Stochastic tumor-immune models.
//!
//! * [`model`]: vector fields, presets, equilibria and Jacobians.
//! * [`sde`]: equilibrium-anchored affine diffusions and the linearized system.
//! * [`lyapunov`]: top Lyapunov exponents from the stationary phase density,
//!   the rotation-family closed form and Monte Carlo, plus stability sweeps.
//! * [`integrate`]: seeded Box-Muller increments and weak Euler schemes.
//! * [`cli`]: configuration parsing and CSV output for the `tumor-sde` binary.

pub mod cli;
pub mod integrate;
pub mod lyapunov;
pub mod model;
pub mod sde;

pub use model::{Equilibrium, EquilibriumLabel, Mat2, ModelSpec, Preset, State};
pub use sde::{AffineDiffusion, LinearSde};
