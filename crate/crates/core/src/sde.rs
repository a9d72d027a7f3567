//! Itô systems anchored at an equilibrium.
//!
//! The diffusion is affine, `g_i(x, y) = b_i1 x + b_i2 y + c_i`, with offsets
//! chosen so that `g` vanishes at the anchor. Linearizing drift and diffusion
//! there gives `dX = A X dt + B X dW` with a single Wiener driver.

use crate::model::{Equilibrium, Mat2, ModelError, ModelSpec, State};

/// Residual above which `linearize` refuses the anchor point.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineDiffusion {
    pub b: Mat2,
    pub c1: f64,
    pub c2: f64,
}

impl AffineDiffusion {
    pub const ZERO: AffineDiffusion = AffineDiffusion { b: Mat2::ZERO, c1: 0.0, c2: 0.0 };

    pub fn eval(&self, s: State) -> State {
        State::new(
            self.b.a11 * s.x + self.b.a12 * s.y + self.c1,
            self.b.a21 * s.x + self.b.a22 * s.y + self.c2,
        )
    }

    /// Own-component partials `(dg1/dx, dg2/dy)`.
    pub fn diagonal_slope(&self) -> (f64, f64) {
        (self.b.a11, self.b.a22)
    }
}

/// Diffusion vanishing at `e`: `c_i = -b_i1 x_e - b_i2 y_e`.
pub fn diffusion_at_equilibrium(b: Mat2, e: &Equilibrium) -> AffineDiffusion {
    let p = e.point;
    AffineDiffusion {
        b,
        c1: -b.a11 * p.x - b.a12 * p.y,
        c2: -b.a21 * p.x - b.a22 * p.y,
    }
}

/// Linearized system `dX = A X dt + B X dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSde {
    pub a: Mat2,
    pub b: Mat2,
}

impl LinearSde {
    pub const fn new(a: Mat2, b: Mat2) -> Self {
        LinearSde { a, b }
    }
}

pub fn linearize(model: &ModelSpec, b: Mat2, e: &Equilibrium) -> Result<LinearSde, ModelError> {
    let residual = model.residual(e.point)?;
    if residual > EQUILIBRIUM_TOL {
        return Err(ModelError::NotEquilibrium {
            x: e.point.x,
            y: e.point.y,
            residual,
        });
    }
    if !b.is_finite() {
        return Err(ModelError::InvalidParams("noise matrix has non-finite entries".into()));
    }
    Ok(LinearSde {
        a: model.jacobian(e.point)?,
        b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bell_equilibria, kt_equilibria, BellParams, EquilibriumLabel, KtParams};

    #[test]
    fn offsets_at_kt_p1() {
        let e = kt_equilibria(&KtParams::default()).unwrap().points[0];
        let g = diffusion_at_equilibrium(Mat2::new(10.0, -2.0, 2.0, 10.0), &e);
        assert!((g.c1 + 3.15186).abs() < 1e-5);
        assert!((g.c2 + 0.630372).abs() < 1e-5);
        assert_eq!(g.eval(e.point), State::new(0.0, 0.0));
    }

    #[test]
    fn zero_noise_is_deterministic() {
        let e = kt_equilibria(&KtParams::default()).unwrap().points[1];
        let g = diffusion_at_equilibrium(Mat2::ZERO, &e);
        assert_eq!(g.eval(State::new(3.0, -7.0)), State::new(0.0, 0.0));
    }

    #[test]
    fn linearize_examples() {
        let model = ModelSpec::kt(KtParams::default()).unwrap();
        let e = kt_equilibria(&KtParams::default()).unwrap().points[0];
        let b = Mat2::new(10.0, -2.0, 2.0, 10.0);
        let sys = linearize(&model, b, &e).unwrap();
        assert_eq!(sys.b, b);
        assert_eq!(sys.a, model.jacobian(e.point).unwrap());

        let bell = ModelSpec::bell(BellParams::default()).unwrap();
        let p2 = bell_equilibria(&BellParams::default()).unwrap()[1];
        let sys = linearize(&bell, Mat2::rotation_family(1.0, -2.0), &p2).unwrap();
        assert_eq!(sys.b, Mat2::new(1.0, 2.0, -2.0, 1.0));
    }

    #[test]
    fn rejects_non_equilibrium() {
        let model = ModelSpec::kt(KtParams::default()).unwrap();
        let e = Equilibrium {
            point: State::new(1.0, 1.0),
            label: EquilibriumLabel::Numeric,
            residual: 0.0,
        };
        assert!(matches!(
            linearize(&model, Mat2::ZERO, &e),
            Err(ModelError::NotEquilibrium { .. })
        ));
    }
}
