//! Deterministic tumor-immune vector fields.
//!
//! Two families are covered: the Kuznetsov-Taylor system
//!
//! ```text
//! x' = a1 - a2 x + a3 x y
//! y' = b1 y (1 - b2 y) - x y
//! ```
//!
//! and the d'Onofrio family built from five scalar functions of `x`:
//!
//! ```text
//! x' = x (h1(x) - h2(x) y)
//! y' = (h3(x) - h4(x)) y + h5(x)
//! ```
//!
//! The Volterra, Bell, Stepanova, Vladar-Gonzalez, exponential and logistic
//! presets are members of the second family.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ModelError {
    #[error("h{index} is not finite at x = {x}")]
    Domain { index: usize, x: f64 },
    #[error("non-finite vector field at ({x}, {y})")]
    NonFinite { x: f64, y: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unknown parameter `{name}` for model `{model}`")]
    UnknownParam { model: &'static str, name: String },
    #[error("missing parameter `{name}` for model `{model}`")]
    MissingParam { model: &'static str, name: &'static str },
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("degenerate equilibrium {label}: {reason}")]
    Degenerate { label: &'static str, reason: String },
    #[error("point ({x}, {y}) is not an equilibrium (residual {residual:e})")]
    NotEquilibrium { x: f64, y: f64, residual: f64 },
}

/// A point in the (tumor, effector) plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub const fn new(x: f64, y: f64) -> Self {
        State { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dist(&self, other: &State) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Add for State {
    type Output = State;
    fn add(self, rhs: State) -> State {
        State::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for State {
    type Output = State;
    fn sub(self, rhs: State) -> State {
        State::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Row-major 2x2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn diag(d1: f64, d2: f64) -> Self {
        Mat2::new(d1, 0.0, 0.0, d2)
    }

    pub const fn scaled_identity(a: f64) -> Self {
        Mat2::diag(a, a)
    }

    /// Rotation-dilation noise matrix `[[alpha, -beta], [beta, alpha]]`.
    pub const fn rotation_family(alpha: f64, beta: f64) -> Self {
        Mat2::new(alpha, -beta, beta, alpha)
    }

    pub fn apply(&self, v: State) -> State {
        State::new(
            self.a11 * v.x + self.a12 * v.y,
            self.a21 * v.x + self.a22 * v.y,
        )
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|v| v.is_finite())
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues as `(re, im)` pairs, larger real part first.
    pub fn eigenvalues(&self) -> [(f64, f64); 2] {
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        if disc >= 0.0 {
            let s = disc.sqrt();
            [(half_tr + s, 0.0), (half_tr - s, 0.0)]
        } else {
            let s = (-disc).sqrt();
            [(half_tr, s), (half_tr, -s)]
        }
    }
}

/// Kuznetsov-Taylor coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KtParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b1: f64,
    pub b2: f64,
}

impl Default for KtParams {
    fn default() -> Self {
        KtParams {
            a1: 0.1181,
            a2: 0.3747,
            a3: 0.01184,
            b1: 1.636,
            b2: 0.002,
        }
    }
}

impl KtParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.a1, self.a2, self.a3, self.b1, self.b2];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParams("non-finite coefficient".into()));
        }
        for (name, v) in [("a2", self.a2), ("a3", self.a3), ("b1", self.b1), ("b2", self.b2)] {
            if v <= 0.0 {
                return Err(ModelError::InvalidParams(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    fn field(&self, s: State) -> (f64, f64) {
        let f1 = self.a1 - self.a2 * s.x + self.a3 * s.x * s.y;
        let f2 = self.b1 * s.y * (1.0 - self.b2 * s.y) - s.x * s.y;
        (f1, f2)
    }

    fn jacobian(&self, s: State) -> Mat2 {
        Mat2::new(
            -self.a2 + self.a3 * s.y,
            self.a3 * s.x,
            -s.y,
            self.b1 - 2.0 * self.b1 * self.b2 * s.y - s.x,
        )
    }
}

/// Bell model coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellParams {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
}

impl Default for BellParams {
    fn default() -> Self {
        BellParams {
            a1: 2.5,
            a2: 1.0,
            b1: 1.0,
            b2: 0.4,
            b3: 0.95,
            b4: 2.0,
        }
    }
}

impl BellParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let all = [self.a1, self.a2, self.b1, self.b2, self.b3, self.b4];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidParams("non-finite coefficient".into()));
        }
        if self.a2 == 0.0 {
            return Err(ModelError::InvalidParams("a2 must be nonzero".into()));
        }
        Ok(())
    }

    // x' = x (a1 - a2 y), y' = (b1 x - b3) y - b2 x + b4
    fn jacobian(&self, s: State) -> Mat2 {
        Mat2::new(
            self.a1 - self.a2 * s.y,
            -self.a2 * s.x,
            self.b1 * s.y - self.b2,
            self.b1 * s.x - self.b3,
        )
    }
}

/// User-supplied scalar function of the tumor population.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One of the five scalar functions `h1..h5` of the family.
#[derive(Clone)]
pub enum HFn {
    /// `c0 + c1 x + c2 x^2`
    Poly { c0: f64, c1: f64, c2: f64 },
    /// `ln(k / x)`; undefined for `x <= 0`.
    LogRatio { k: f64 },
    /// `c - a / x`
    Reciprocal { c: f64, a: f64 },
    Custom(ScalarFn),
}

impl HFn {
    pub const fn constant(c: f64) -> Self {
        HFn::Poly { c0: c, c1: 0.0, c2: 0.0 }
    }

    pub const fn affine(c0: f64, c1: f64) -> Self {
        HFn::Poly { c0, c1, c2: 0.0 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            HFn::Poly { c0, c1, c2 } => c0 + x * (c1 + c2 * x),
            HFn::LogRatio { k } => {
                if x <= 0.0 {
                    f64::NAN
                } else {
                    (k / x).ln()
                }
            }
            HFn::Reciprocal { c, a } => c - a / x,
            HFn::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for HFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HFn::Poly { c0, c1, c2 } => write!(f, "Poly({c0} + {c1} x + {c2} x^2)"),
            HFn::LogRatio { k } => write!(f, "LogRatio(ln({k} / x))"),
            HFn::Reciprocal { c, a } => write!(f, "Reciprocal({c} - {a} / x)"),
            HFn::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    Kt,
    Volterra,
    Bell,
    Stepanova,
    VladarGonzalez,
    Exponential,
    Logistic,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Kt,
        Preset::Volterra,
        Preset::Bell,
        Preset::Stepanova,
        Preset::VladarGonzalez,
        Preset::Exponential,
        Preset::Logistic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Kt => "kt",
            Preset::Volterra => "volterra",
            Preset::Bell => "bell",
            Preset::Stepanova => "stepanova",
            Preset::VladarGonzalez => "vladar",
            Preset::Exponential => "exponential",
            Preset::Logistic => "logistic",
            Preset::Custom => "custom",
        }
    }

    /// Parameter names with their defaults (`None` means the caller must supply it).
    pub fn parameters(self) -> &'static [(&'static str, Option<f64>)] {
        match self {
            Preset::Kt => &[
                ("a1", Some(0.1181)),
                ("a2", Some(0.3747)),
                ("a3", Some(0.01184)),
                ("b1", Some(1.636)),
                ("b2", Some(0.002)),
            ],
            Preset::Bell => &[
                ("a1", Some(2.5)),
                ("a2", Some(1.0)),
                ("b1", Some(1.0)),
                ("b2", Some(0.4)),
                ("b3", Some(0.95)),
                ("b4", Some(2.0)),
            ],
            Preset::Volterra => &[("a", None), ("b", None), ("d", None), ("f", None), ("k", None)],
            Preset::Stepanova => &[
                ("a1", None),
                ("c", Some(1.0)),
                ("b1", None),
                ("b", None),
                ("b2", None),
                ("b4", None),
            ],
            Preset::VladarGonzalez => &[
                ("K", None),
                ("c", Some(1.0)),
                ("b1", None),
                ("b2", None),
                ("b3", None),
                ("s", Some(1.0)),
            ],
            Preset::Exponential => &[
                ("r", Some(1.0)),
                ("c", Some(1.0)),
                ("b1", None),
                ("b2", None),
                ("b3", None),
                ("s", Some(1.0)),
            ],
            Preset::Logistic => &[
                ("a1", None),
                ("c", Some(1.0)),
                ("b1", None),
                ("b2", None),
                ("b3", None),
                ("s", Some(1.0)),
            ],
            Preset::Custom => &[],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Preset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "kt" => Preset::Kt,
            "volterra" => Preset::Volterra,
            "bell" => Preset::Bell,
            "stepanova" => Preset::Stepanova,
            "vladar" => Preset::VladarGonzalez,
            "exponential" => Preset::Exponential,
            "logistic" => Preset::Logistic,
            "custom" => Preset::Custom,
            other => return Err(ModelError::UnknownModel(other.to_string())),
        })
    }
}

#[derive(Debug, Clone)]
enum Field {
    Kt(KtParams),
    Family([HFn; 5]),
}

/// A named two-dimensional vector field with its resolved coefficients.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    preset: Preset,
    params: BTreeMap<String, f64>,
    field: Field,
    bell: Option<BellParams>,
}

impl ModelSpec {
    pub fn kt(p: KtParams) -> Result<Self, ModelError> {
        p.validate()?;
        let params = [("a1", p.a1), ("a2", p.a2), ("a3", p.a3), ("b1", p.b1), ("b2", p.b2)];
        Ok(ModelSpec {
            preset: Preset::Kt,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            field: Field::Kt(p),
            bell: None,
        })
    }

    pub fn bell(p: BellParams) -> Result<Self, ModelError> {
        p.validate()?;
        let params = [
            ("a1", p.a1),
            ("a2", p.a2),
            ("b1", p.b1),
            ("b2", p.b2),
            ("b3", p.b3),
            ("b4", p.b4),
        ];
        let h = [
            HFn::constant(p.a1),
            HFn::constant(p.a2),
            HFn::affine(0.0, p.b1),
            HFn::constant(p.b3),
            HFn::affine(p.b4, -p.b2),
        ];
        Ok(ModelSpec {
            preset: Preset::Bell,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            field: Field::Family(h),
            bell: Some(p),
        })
    }

    /// Family member from arbitrary `h1..h5`.
    pub fn custom(h: [HFn; 5]) -> Self {
        ModelSpec {
            preset: Preset::Custom,
            params: BTreeMap::new(),
            field: Field::Family(h),
            bell: None,
        }
    }

    /// Builds a preset, filling defaults and rejecting unknown or missing names.
    pub fn preset<'a, I>(preset: Preset, overrides: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let decl = preset.parameters();
        let mut values: BTreeMap<&'static str, f64> = decl
            .iter()
            .filter_map(|(k, d)| d.map(|v| (*k, v)))
            .collect();
        for (name, v) in overrides {
            let key = decl
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(k, _)| *k)
                .ok_or_else(|| ModelError::UnknownParam {
                    model: preset.name(),
                    name: name.to_string(),
                })?;
            if !v.is_finite() {
                return Err(ModelError::InvalidParams(format!("{key} = {v} is not finite")));
            }
            values.insert(key, v);
        }
        let get = |name: &'static str| -> Result<f64, ModelError> {
            values.get(name).copied().ok_or(ModelError::MissingParam {
                model: preset.name(),
                name,
            })
        };

        let h = match preset {
            Preset::Kt => {
                return ModelSpec::kt(KtParams {
                    a1: get("a1")?,
                    a2: get("a2")?,
                    a3: get("a3")?,
                    b1: get("b1")?,
                    b2: get("b2")?,
                })
            }
            Preset::Bell => {
                return ModelSpec::bell(BellParams {
                    a1: get("a1")?,
                    a2: get("a2")?,
                    b1: get("b1")?,
                    b2: get("b2")?,
                    b3: get("b3")?,
                    b4: get("b4")?,
                })
            }
            Preset::Volterra => [
                HFn::constant(get("a")?),
                HFn::constant(get("b")?),
                HFn::affine(0.0, get("d")?),
                HFn::constant(get("f")?),
                HFn::affine(0.0, -get("k")?),
            ],
            Preset::Stepanova => [
                HFn::constant(get("a1")?),
                HFn::constant(get("c")?),
                HFn::affine(0.0, get("b1")?),
                HFn::constant(get("b")?),
                HFn::affine(get("b4")?, -get("b2")?),
            ],
            Preset::VladarGonzalez => [
                HFn::LogRatio { k: get("K")? },
                HFn::constant(get("c")?),
                HFn::affine(0.0, get("b1")?),
                HFn::Poly { c0: get("b2")?, c1: 0.0, c2: get("b3")? },
                HFn::constant(get("s")?),
            ],
            Preset::Exponential => [
                HFn::constant(get("r")?),
                HFn::constant(get("c")?),
                HFn::affine(0.0, get("b1")?),
                HFn::Poly { c0: get("b2")?, c1: 0.0, c2: get("b3")? },
                HFn::constant(get("s")?),
            ],
            Preset::Logistic => [
                HFn::Reciprocal { c: 1.0, a: get("a1")? },
                HFn::constant(get("c")?),
                HFn::affine(0.0, get("b1")?),
                HFn::Poly { c0: get("b2")?, c1: 0.0, c2: get("b3")? },
                HFn::constant(get("s")?),
            ],
            Preset::Custom => {
                return Err(ModelError::InvalidParams(
                    "custom models are built from h-functions, not parameters".into(),
                ))
            }
        };
        Ok(ModelSpec {
            preset,
            params: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            field: Field::Family(h),
            bell: None,
        })
    }

    pub fn name(&self) -> Preset {
        self.preset
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    pub fn kt_params(&self) -> Option<KtParams> {
        match self.field {
            Field::Kt(p) => Some(p),
            Field::Family(_) => None,
        }
    }

    pub fn bell_params(&self) -> Option<BellParams> {
        self.bell
    }

    /// Largest coefficient magnitude (at least 1), used to scale residual checks.
    pub fn scale(&self) -> f64 {
        self.params.values().fold(1.0, |m, v| m.max(v.abs()))
    }

    /// Evaluates `(f1, f2)` at `s`.
    pub fn eval(&self, s: State) -> Result<State, ModelError> {
        let (f1, f2) = match &self.field {
            Field::Kt(p) => p.field(s),
            Field::Family(h) => {
                let mut v = [0.0; 5];
                for (i, hf) in h.iter().enumerate() {
                    v[i] = hf.eval(s.x);
                    if !v[i].is_finite() {
                        return Err(ModelError::Domain { index: i + 1, x: s.x });
                    }
                }
                (s.x * (v[0] - v[1] * s.y), (v[2] - v[3]) * s.y + v[4])
            }
        };
        if !(f1.is_finite() && f2.is_finite()) {
            return Err(ModelError::NonFinite { x: s.x, y: s.y });
        }
        Ok(State::new(f1, f2))
    }

    /// Max-norm of the vector field at `s`.
    pub fn residual(&self, s: State) -> Result<f64, ModelError> {
        let f = self.eval(s)?;
        Ok(f.x.abs().max(f.y.abs()))
    }

    /// Drift Jacobian: analytic for `kt` and `bell`, central differences otherwise.
    pub fn jacobian(&self, at: State) -> Result<Mat2, ModelError> {
        let j = match (&self.field, &self.bell) {
            (Field::Kt(p), _) => p.jacobian(at),
            (_, Some(b)) => b.jacobian(at),
            _ => self.jacobian_fd(at)?,
        };
        if !j.is_finite() {
            return Err(ModelError::NonFinite { x: at.x, y: at.y });
        }
        Ok(j)
    }

    /// Central-difference Jacobian with step `1e-6 * max(1, |coordinate|)`.
    pub fn jacobian_fd(&self, at: State) -> Result<Mat2, ModelError> {
        let hx = 1e-6 * at.x.abs().max(1.0);
        let hy = 1e-6 * at.y.abs().max(1.0);
        let fxp = self.eval(State::new(at.x + hx, at.y))?;
        let fxm = self.eval(State::new(at.x - hx, at.y))?;
        let fyp = self.eval(State::new(at.x, at.y + hy))?;
        let fym = self.eval(State::new(at.x, at.y - hy))?;
        Ok(Mat2::new(
            (fxp.x - fxm.x) / (2.0 * hx),
            (fyp.x - fym.x) / (2.0 * hy),
            (fxp.y - fxm.y) / (2.0 * hx),
            (fyp.y - fym.y) / (2.0 * hy),
        ))
    }

    /// Own-component second derivatives `(d2f1/dx2, d2f2/dy2)`.
    pub fn diagonal_curvature(&self, at: State) -> Result<(f64, f64), ModelError> {
        match (&self.field, &self.bell) {
            (Field::Kt(p), _) => Ok((0.0, -2.0 * p.b1 * p.b2)),
            // f1 is linear in x for fixed y, f2 linear in y for fixed x
            (_, Some(_)) => Ok((0.0, 0.0)),
            _ => {
                let hx = 1e-4 * at.x.abs().max(1.0);
                let hy = 1e-4 * at.y.abs().max(1.0);
                let f0 = self.eval(at)?;
                let fxp = self.eval(State::new(at.x + hx, at.y))?;
                let fxm = self.eval(State::new(at.x - hx, at.y))?;
                let fyp = self.eval(State::new(at.x, at.y + hy))?;
                let fym = self.eval(State::new(at.x, at.y - hy))?;
                Ok((
                    (fxp.x - 2.0 * f0.x + fxm.x) / (hx * hx),
                    (fyp.y - 2.0 * f0.y + fym.y) / (hy * hy),
                ))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquilibriumLabel {
    P1,
    P2,
    Numeric,
}

impl fmt::Display for EquilibriumLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EquilibriumLabel::P1 => "P1",
            EquilibriumLabel::P2 => "P2",
            EquilibriumLabel::Numeric => "numeric",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub point: State,
    pub label: EquilibriumLabel,
    pub residual: f64,
}

impl Equilibrium {
    pub fn new(model: &ModelSpec, point: State, label: EquilibriumLabel) -> Result<Self, ModelError> {
        let residual = model.residual(point)?;
        Ok(Equilibrium { point, label, residual })
    }
}

/// Equilibria that exist plus notes on the ones that were left out.
#[derive(Debug, Clone, Default)]
pub struct EquilibriumSet {
    pub points: Vec<Equilibrium>,
    pub omitted: Vec<(EquilibriumLabel, String)>,
}

impl EquilibriumSet {
    pub fn get(&self, label: EquilibriumLabel) -> Option<&Equilibrium> {
        self.points.iter().find(|e| e.label == label)
    }
}

/// Closed-form equilibria of the Kuznetsov-Taylor system.
///
/// `P1 = (a1/a2, 0)` always exists. The interior point comes from the
/// quadratic obtained by substituting `x = b1 (1 - b2 y)` into `f1 = 0`; it is
/// reported only when its effector coordinate is positive.
pub fn kt_equilibria(p: &KtParams) -> Result<EquilibriumSet, ModelError> {
    let model = ModelSpec::kt(*p)?;
    let disc = p.b1 * p.b1 * (p.b2 * p.a2 - p.a3).powi(2) + 4.0 * p.b1 * p.b2 * p.a1 * p.a3;
    if disc < 0.0 {
        return Err(ModelError::InvalidParams(format!("negative discriminant {disc}")));
    }
    let sq = disc.sqrt();
    let mut set = EquilibriumSet::default();
    set.points.push(Equilibrium::new(
        &model,
        State::new(p.a1 / p.a2, 0.0),
        EquilibriumLabel::P1,
    )?);

    let x2 = (p.b1 * (p.a3 - p.b2 * p.a2) + sq) / (2.0 * p.a3);
    let y2 = (p.b1 * (p.a3 + p.b2 * p.a2) - sq) / (2.0 * p.b1 * p.b2 * p.a3);
    if y2 > 0.0 {
        set.points
            .push(Equilibrium::new(&model, State::new(x2, y2), EquilibriumLabel::P2)?);
    } else {
        set.omitted.push((
            EquilibriumLabel::P2,
            format!("effector coordinate y2 = {y2} is not positive"),
        ));
    }
    Ok(set)
}

/// Closed-form equilibria of the Bell model: `P1 = (0, b4/b3)` and
/// `P2 = ((a1 b3 - a2 b4) / (a1 b1 - a2 b2), a1 / a2)`.
pub fn bell_equilibria(p: &BellParams) -> Result<Vec<Equilibrium>, ModelError> {
    let model = ModelSpec::bell(*p)?;
    if p.b3 == 0.0 {
        return Err(ModelError::Degenerate {
            label: "P1",
            reason: "b3 = 0".into(),
        });
    }
    let denom = p.a1 * p.b1 - p.a2 * p.b2;
    if denom == 0.0 {
        return Err(ModelError::Degenerate {
            label: "P2",
            reason: "a1 b1 = a2 b2".into(),
        });
    }
    let p1 = State::new(0.0, p.b4 / p.b3);
    let p2 = State::new((p.a1 * p.b3 - p.a2 * p.b4) / denom, p.a1 / p.a2);
    Ok(vec![
        Equilibrium::new(&model, p1, EquilibriumLabel::P1)?,
        Equilibrium::new(&model, p2, EquilibriumLabel::P2)?,
    ])
}

/// Closed interval box `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl SearchBox {
    pub const fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        SearchBox { x_min, x_max, y_min, y_max }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        SearchBox::new(lo, hi, lo, hi)
    }

    pub fn is_empty(&self) -> bool {
        !(self.x_min <= self.x_max && self.y_min <= self.y_max)
    }

    fn contains(&self, s: State, tol: f64) -> bool {
        s.x >= self.x_min - tol
            && s.x <= self.x_max + tol
            && s.y >= self.y_min - tol
            && s.y <= self.y_max + tol
    }
}

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_STEP_TOL: f64 = 1e-12;
const ROOT_RESIDUAL_TOL: f64 = 1e-10;
const ROOT_DEDUP_DIST: f64 = 1e-6;

/// Damped Newton from a `grid x grid` lattice of starts over `bx`.
///
/// Converged roots inside the box with residual at most `1e-10` are
/// deduplicated and returned sorted by `x`, then `y`.
pub fn find_equilibria_numeric(model: &ModelSpec, bx: &SearchBox, grid: usize) -> Vec<Equilibrium> {
    if bx.is_empty() || grid < 2 {
        return Vec::new();
    }
    let mut roots: Vec<Equilibrium> = Vec::new();
    let step_x = (bx.x_max - bx.x_min) / (grid - 1) as f64;
    let step_y = (bx.y_max - bx.y_min) / (grid - 1) as f64;
    let tol = 1e-9 * (1.0 + bx.x_max.abs().max(bx.y_max.abs()));
    for i in 0..grid {
        for j in 0..grid {
            let start = State::new(bx.x_min + i as f64 * step_x, bx.y_min + j as f64 * step_y);
            let Some(root) = newton(model, start) else { continue };
            if !bx.contains(root, tol) {
                continue;
            }
            let Ok(residual) = model.residual(root) else { continue };
            if residual > ROOT_RESIDUAL_TOL {
                continue;
            }
            if roots.iter().any(|r| r.point.dist(&root) < ROOT_DEDUP_DIST) {
                continue;
            }
            roots.push(Equilibrium {
                point: root,
                label: EquilibriumLabel::Numeric,
                residual,
            });
        }
    }
    roots.sort_by(|a, b| {
        a.point
            .x
            .total_cmp(&b.point.x)
            .then(a.point.y.total_cmp(&b.point.y))
    });
    roots
}

fn merit(model: &ModelSpec, s: State) -> Option<f64> {
    let f = model.eval(s).ok()?;
    Some(0.5 * (f.x * f.x + f.y * f.y))
}

fn newton(model: &ModelSpec, start: State) -> Option<State> {
    let mut s = start;
    let mut phi = merit(model, s)?;
    for _ in 0..NEWTON_MAX_ITER {
        let f = model.eval(s).ok()?;
        let j = model.jacobian(s).ok()?;
        let det = j.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let dx = -(j.a22 * f.x - j.a12 * f.y) / det;
        let dy = -(-j.a21 * f.x + j.a11 * f.y) / det;
        // Armijo backtracking on 0.5 |f|^2; the Newton direction has slope -2 phi.
        let mut t = 1.0;
        let mut next = None;
        while t > 1e-10 {
            let trial = State::new(s.x + t * dx, s.y + t * dy);
            if let Some(p) = merit(model, trial) {
                if p <= (1.0 - 2e-4 * t) * phi {
                    next = Some((trial, p));
                    break;
                }
            }
            t *= 0.5;
        }
        let (trial, p) = match next {
            Some(v) => v,
            // already at the floating-point floor of the merit function
            None if phi < 1e-28 => return Some(s),
            None => return None,
        };
        let step = t * dx.hypot(dy);
        s = trial;
        phi = p;
        if step < NEWTON_STEP_TOL || phi == 0.0 {
            return Some(s);
        }
    }
    None
}
