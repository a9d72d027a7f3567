use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use super::rng::RngStream;
use super::schemes::{euler1_step, euler2_step, BlowUp, SdeSystem};
use crate::model::State;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Euler1,
    Euler2,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler1 => "euler1",
            Scheme::Euler2 => "euler2",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euler1" => Ok(Scheme::Euler1),
            "euler2" => Ok(Scheme::Euler2),
            _ => Err(format!("unknown scheme `{s}` (expected euler1|euler2)")),
        }
    }
}

/// Whether both components see the same Wiener increment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseStreams {
    #[default]
    Shared,
    Independent,
}

impl fmt::Display for NoiseStreams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseStreams::Shared => "shared",
            NoiseStreams::Independent => "independent",
        })
    }
}

impl FromStr for NoiseStreams {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "shared" => Ok(NoiseStreams::Shared),
            "independent" => Ok(NoiseStreams::Independent),
            _ => Err(format!("unknown noise stream mode `{s}` (expected shared|independent)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub steps: usize,
    pub initial: State,
    pub scheme: Scheme,
    pub noise_streams: NoiseStreams,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(dt: f64, steps: usize, initial: State) -> Self {
        SimConfig {
            dt,
            steps,
            initial,
            scheme: Scheme::Euler1,
            noise_streams: NoiseStreams::Shared,
            seed: 1,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_noise_streams(mut self, n: NoiseStreams) -> Self {
        self.noise_streams = n;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(SimError::InvalidConfig("steps must be >= 1".into()));
        }
        if !self.initial.is_finite() {
            return Err(SimError::InvalidConfig("initial state is not finite".into()));
        }
        Ok(())
    }
}

/// Where a path stopped: the update out of state `step` produced a
/// non-finite `component`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlowUpAt {
    pub step: usize,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub blowup: Option<BlowUpAt>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> Option<State> {
        self.states.last().copied()
    }
}

struct PathRun<'a, S: ?Sized> {
    sys: &'a S,
    cfg: &'a SimConfig,
    rng: RngStream,
    sqrt_dt: f64,
}

impl<'a, S: SdeSystem + ?Sized> PathRun<'a, S> {
    fn new(sys: &'a S, cfg: &'a SimConfig, path: u64) -> Self {
        PathRun {
            sys,
            cfg,
            rng: RngStream::new(cfg.seed, path),
            sqrt_dt: cfg.dt.sqrt(),
        }
    }

    #[inline]
    fn step(&mut self, s: State) -> Result<State, BlowUp> {
        let g1 = self.sqrt_dt * self.rng.standard_normal();
        let g2 = match self.cfg.noise_streams {
            NoiseStreams::Shared => g1,
            NoiseStreams::Independent => self.sqrt_dt * self.rng.standard_normal(),
        };
        match self.cfg.scheme {
            Scheme::Euler1 => euler1_step(self.sys, s, self.cfg.dt, g1, g2),
            Scheme::Euler2 => euler2_step(self.sys, s, self.cfg.dt, g1, g2),
        }
    }

    fn run(mut self, mut visit: impl FnMut(usize, State)) -> Option<BlowUpAt> {
        let mut s = self.cfg.initial;
        visit(0, s);
        for n in 0..self.cfg.steps {
            match self.step(s) {
                Ok(next) => {
                    s = next;
                    visit(n + 1, s);
                }
                Err(b) => {
                    return Some(BlowUpAt {
                        step: n,
                        component: b.component,
                    })
                }
            }
        }
        None
    }
}

fn simulate_path<S: SdeSystem + ?Sized>(sys: &S, cfg: &SimConfig, path: u64) -> Trajectory {
    let mut times = Vec::with_capacity(cfg.steps + 1);
    let mut states = Vec::with_capacity(cfg.steps + 1);
    let blowup = PathRun::new(sys, cfg, path).run(|n, s| {
        times.push(n as f64 * cfg.dt);
        states.push(s);
    });
    Trajectory { times, states, blowup }
}

/// One sample path on stream 0 of `cfg.seed`.
pub fn simulate<S: SdeSystem + ?Sized>(sys: &S, cfg: &SimConfig) -> Result<Trajectory, SimError> {
    cfg.validate()?;
    Ok(simulate_path(sys, cfg, 0))
}

/// Final state of each of `paths` independent paths; `None` for paths that blew up.
pub fn terminal_states<S: SdeSystem + ?Sized>(
    sys: &S,
    cfg: &SimConfig,
    paths: usize,
) -> Result<Vec<Option<State>>, SimError> {
    cfg.validate()?;
    Ok((0..paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut last = cfg.initial;
            match PathRun::new(sys, cfg, p).run(|_, s| last = s) {
                None => Some(last),
                Some(_) => None,
            }
        })
        .collect())
}

/// Running count, mean and centered second moment of one component.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64;
        self.n = n;
    }

    fn variance(&self) -> f64 {
        if self.n > 1 {
            self.m2 / (self.n - 1) as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub times: Vec<f64>,
    pub mean: Vec<State>,
    /// Sample variance (denominator `count - 1`).
    pub variance: Vec<State>,
    /// Paths still finite at each time.
    pub count: Vec<usize>,
    /// Empty unless requested.
    pub trajectories: Vec<Trajectory>,
}

impl Ensemble {
    /// Standard error of the mean at time index `n`.
    pub fn stderr(&self, n: usize) -> State {
        let c = self.count[n].max(1) as f64;
        State::new((self.variance[n].x / c).sqrt(), (self.variance[n].y / c).sqrt())
    }
}

const CHUNK: usize = 256;

/// Per-time moments over `paths` paths, path `p` on stream `p` of `cfg.seed`.
///
/// Paths are processed in fixed chunks and merged in chunk order, so results do
/// not depend on the thread count.
pub fn ensemble_stats<S: SdeSystem + ?Sized>(
    sys: &S,
    cfg: &SimConfig,
    paths: usize,
    keep_paths: bool,
) -> Result<Ensemble, SimError> {
    cfg.validate()?;
    if paths == 0 {
        return Err(SimError::InvalidConfig("paths must be >= 1".into()));
    }
    let len = cfg.steps + 1;
    let chunks: Vec<(Vec<(Moments, Moments)>, Vec<Trajectory>)> = (0..paths.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![(Moments::default(), Moments::default()); len];
            let mut kept = Vec::new();
            for p in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                if keep_paths {
                    let t = simulate_path(sys, cfg, p as u64);
                    for (m, s) in acc.iter_mut().zip(&t.states) {
                        m.0.push(s.x);
                        m.1.push(s.y);
                    }
                    kept.push(t);
                } else {
                    PathRun::new(sys, cfg, p as u64).run(|n, s| {
                        acc[n].0.push(s.x);
                        acc[n].1.push(s.y);
                    });
                }
            }
            (acc, kept)
        })
        .collect();

    let mut total = vec![(Moments::default(), Moments::default()); len];
    let mut trajectories = Vec::new();
    for (acc, kept) in chunks {
        for (t, a) in total.iter_mut().zip(&acc) {
            t.0.merge(&a.0);
            t.1.merge(&a.1);
        }
        trajectories.extend(kept);
    }
    Ok(Ensemble {
        times: (0..len).map(|n| n as f64 * cfg.dt).collect(),
        mean: total.iter().map(|(x, y)| State::new(x.mean, y.mean)).collect(),
        variance: total
            .iter()
            .map(|(x, y)| State::new(x.variance(), y.variance()))
            .collect(),
        count: total.iter().map(|(x, _)| x.n).collect(),
        trajectories,
    })
}
