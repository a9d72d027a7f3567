use crate::sde::LinearSde;

/// The trigonometric forms entering the polar equations at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCoefficients {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub q5: f64,
}

impl PhaseCoefficients {
    /// Integrand of the exponent, `q1 + (q4^2 - q2^2) / 2`.
    #[inline]
    pub fn growth_rate(&self) -> f64 {
        self.q1 + 0.5 * (self.q4 * self.q4 - self.q2 * self.q2)
    }

    /// Angular drift `q3 - q2 q4`.
    #[inline]
    pub fn angular_drift(&self) -> f64 {
        self.q3 - self.q2 * self.q4
    }
}

#[inline]
pub fn phase_coefficients(sys: &LinearSde, theta: f64) -> PhaseCoefficients {
    let (s, c) = theta.sin_cos();
    let (cc, cs, ss) = (c * c, c * s, s * s);
    let (s2, c2) = (2.0 * theta).sin_cos();
    let a = &sys.a;
    let b = &sys.b;
    PhaseCoefficients {
        q1: a.a11 * cc + (a.a12 + a.a21) * cs + a.a22 * ss,
        q2: b.a11 * cc + (b.a12 + b.a21) * cs + b.a22 * ss,
        q3: a.a21 * cc + (a.a22 - a.a11) * cs - a.a12 * ss,
        q4: b.a21 * cc + (b.a22 - b.a11) * cs - b.a12 * ss,
        q5: -(b.a12 + b.a21) * s2 - (b.a22 - b.a11) * c2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mat2;
    use std::f64::consts::FRAC_PI_2;

    fn sys() -> LinearSde {
        LinearSde::new(Mat2::new(1.0, 2.0, 3.0, 4.0), Mat2::new(-0.5, 0.7, 1.3, 2.2))
    }

    #[test]
    fn at_zero() {
        let s = sys();
        let q = phase_coefficients(&s, 0.0);
        assert_eq!(
            (q.q1, q.q2, q.q3, q.q4, q.q5),
            (s.a.a11, s.b.a11, s.a.a21, s.b.a21, -(s.b.a22 - s.b.a11))
        );
    }

    #[test]
    fn at_right_angle() {
        let s = sys();
        let q = phase_coefficients(&s, FRAC_PI_2);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(q.q1, s.a.a22));
        assert!(close(q.q2, s.b.a22));
        assert!(close(q.q3, -s.a.a12));
        assert!(close(q.q4, -s.b.a12));
        assert!(close(q.q5, s.b.a22 - s.b.a11));
    }

    #[test]
    fn trace_identity() {
        let s = sys();
        let (p, q) = (phase_coefficients(&s, 0.3), phase_coefficients(&s, 0.3 + FRAC_PI_2));
        assert!((p.q1 + q.q1 - s.a.trace()).abs() < 1e-12);
        assert!((p.q2 + q.q2 - s.b.trace()).abs() < 1e-12);
    }
}
