use crate::model::{ModelError, ModelSpec, State};
use crate::sde::{AffineDiffusion, LinearSde};

/// Drift, diffusion and the own-component partials the order-2 scheme needs.
///
/// Partials are diagonal only: `d/dx` of the first component and `d/dy` of
/// the second.
pub trait SdeSystem: Sync {
    fn drift(&self, s: State) -> Result<State, ModelError>;
    fn diffusion(&self, s: State) -> State;
    fn drift_slope(&self, s: State) -> Result<(f64, f64), ModelError>;
    fn drift_curvature(&self, s: State) -> Result<(f64, f64), ModelError>;
    fn diffusion_slope(&self, s: State) -> (f64, f64);
    fn diffusion_curvature(&self, _s: State) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Full nonlinear drift of a model with an affine diffusion.
#[derive(Debug, Clone)]
pub struct NonlinearSystem {
    pub model: ModelSpec,
    pub diffusion: AffineDiffusion,
}

impl NonlinearSystem {
    pub fn new(model: ModelSpec, diffusion: AffineDiffusion) -> Self {
        NonlinearSystem { model, diffusion }
    }

    pub fn deterministic(model: ModelSpec) -> Self {
        NonlinearSystem::new(model, AffineDiffusion::ZERO)
    }
}

impl SdeSystem for NonlinearSystem {
    fn drift(&self, s: State) -> Result<State, ModelError> {
        self.model.eval(s)
    }

    fn diffusion(&self, s: State) -> State {
        self.diffusion.eval(s)
    }

    fn drift_slope(&self, s: State) -> Result<(f64, f64), ModelError> {
        let j = self.model.jacobian(s)?;
        Ok((j.a11, j.a22))
    }

    fn drift_curvature(&self, s: State) -> Result<(f64, f64), ModelError> {
        self.model.diagonal_curvature(s)
    }

    fn diffusion_slope(&self, _s: State) -> (f64, f64) {
        self.diffusion.diagonal_slope()
    }
}

impl SdeSystem for LinearSde {
    fn drift(&self, s: State) -> Result<State, ModelError> {
        Ok(self.a.apply(s))
    }

    fn diffusion(&self, s: State) -> State {
        self.b.apply(s)
    }

    fn drift_slope(&self, _s: State) -> Result<(f64, f64), ModelError> {
        Ok((self.a.a11, self.a.a22))
    }

    fn drift_curvature(&self, _s: State) -> Result<(f64, f64), ModelError> {
        Ok((0.0, 0.0))
    }

    fn diffusion_slope(&self, _s: State) -> (f64, f64) {
        (self.b.a11, self.b.a22)
    }
}

/// First component that went non-finite during an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlowUp {
    pub component: usize,
}

fn check(s: State) -> Result<State, BlowUp> {
    if !s.x.is_finite() {
        Err(BlowUp { component: 1 })
    } else if !s.y.is_finite() {
        Err(BlowUp { component: 2 })
    } else {
        Ok(s)
    }
}

fn drift_or_blowup<S: SdeSystem + ?Sized>(sys: &S, s: State) -> Result<State, BlowUp> {
    // h1, h2 feed the first component; h3..h5 the second
    sys.drift(s).map_err(|e| match e {
        ModelError::Domain { index, .. } if index > 2 => BlowUp { component: 2 },
        _ => BlowUp { component: 1 },
    })
}

/// `x_i + f_i h + g_i G_i`.
pub fn euler1_step<S: SdeSystem + ?Sized>(
    sys: &S,
    s: State,
    dt: f64,
    g1: f64,
    g2: f64,
) -> Result<State, BlowUp> {
    let f = drift_or_blowup(sys, s)?;
    let g = sys.diffusion(s);
    check(State::new(s.x + f.x * dt + g.x * g1, s.y + f.y * dt + g.y * g2))
}

/// Order-2 weak Euler step with own-component partials only:
///
/// ```text
/// x_i + f h + g G + g g' (G^2 - h)/2
///     + (f f' + g^2 f''/2) h^2/2
///     + (g f' + f g' + g^2 g''/2) h G/2
/// ```
pub fn euler2_step<S: SdeSystem + ?Sized>(
    sys: &S,
    s: State,
    dt: f64,
    g1: f64,
    g2: f64,
) -> Result<State, BlowUp> {
    let f = drift_or_blowup(sys, s)?;
    let g = sys.diffusion(s);
    let (fp1, fp2) = sys.drift_slope(s).map_err(|_| BlowUp { component: 1 })?;
    let (fpp1, fpp2) = sys.drift_curvature(s).map_err(|_| BlowUp { component: 1 })?;
    let (gp1, gp2) = sys.diffusion_slope(s);
    let (gpp1, gpp2) = sys.diffusion_curvature(s);
    let x = component(s.x, f.x, g.x, fp1, fpp1, gp1, gpp1, dt, g1);
    let y = component(s.y, f.y, g.y, fp2, fpp2, gp2, gpp2, dt, g2);
    check(State::new(x, y))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn component(x: f64, f: f64, g: f64, fp: f64, fpp: f64, gp: f64, gpp: f64, h: f64, inc: f64) -> f64 {
    let half_g2 = 0.5 * g * g;
    x + f * h
        + g * inc
        + g * gp * (inc * inc - h) / 2.0
        + (f * fp + half_g2 * fpp) * h * h / 2.0
        + (g * fp + f * gp + half_g2 * gpp) * h * inc / 2.0
}
