//! Seeded noise and explicit weak Euler schemes.

mod rng;
mod schemes;
mod simulate;

pub use rng::{box_muller, RngStream};
pub use schemes::{euler1_step, euler2_step, BlowUp, NonlinearSystem, SdeSystem};
pub use simulate::{
    ensemble_stats, simulate, terminal_states, BlowUpAt, Ensemble, NoiseStreams, Scheme, SimConfig,
    SimError, Trajectory,
};
