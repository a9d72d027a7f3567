use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::integrate::{NoiseStreams, Scheme};
use crate::lyapunov::{alpha_grid, FdOptions, FluxConstant, McConfig, Method, Span};
use crate::model::{Mat2, ModelSpec, Preset, SearchBox, State};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConfigError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("{key}: {msg}")]
    Invalid { key: String, msg: String },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config: cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

fn invalid(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Command {
    #[default]
    Equilibria,
    Simulate,
    Lyapunov,
    Sweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Equilibria => "equilibria",
            Command::Simulate => "simulate",
            Command::Lyapunov => "lyapunov",
            Command::Sweep => "sweep",
        })
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "equilibria" => Ok(Command::Equilibria),
            "simulate" => Ok(Command::Simulate),
            "lyapunov" => Ok(Command::Lyapunov),
            "sweep" => Ok(Command::Sweep),
            _ => Err(format!("unknown command `{s}`")),
        }
    }
}

/// Which equilibrium to anchor at: a closed-form label or a position in the
/// reported list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumSelector {
    P1,
    P2,
    Index(usize),
}

impl fmt::Display for EquilibriumSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EquilibriumSelector::P1 => f.write_str("P1"),
            EquilibriumSelector::P2 => f.write_str("P2"),
            EquilibriumSelector::Index(i) => write!(f, "{i}"),
        }
    }
}

impl FromStr for EquilibriumSelector {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "P1" | "p1" => Ok(EquilibriumSelector::P1),
            "P2" | "p2" => Ok(EquilibriumSelector::P2),
            _ => s
                .parse()
                .map(EquilibriumSelector::Index)
                .map_err(|_| format!("expected P1, P2 or an index, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    Single(f64),
    /// `lo:hi:step`, inclusive.
    Range { lo: f64, hi: f64, step: f64 },
}

impl fmt::Display for AlphaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaSpec::Single(v) => write!(f, "{v}"),
            AlphaSpec::Range { lo, hi, step } => write!(f, "{lo}:{hi}:{step}"),
        }
    }
}

pub const DEFAULT_SWEEP: AlphaSpec = AlphaSpec::Range {
    lo: -4.0,
    hi: 4.0,
    step: 0.02,
};

/// Every key accepted in a config file; flags use the same names.
pub const KEYS: &[&str] = &[
    "command",
    "model",
    "params",
    "equilibrium",
    "noise",
    "alpha",
    "beta",
    "method",
    "grid-n",
    "span",
    "flux",
    "dt",
    "steps",
    "paths",
    "horizon",
    "seed",
    "scheme",
    "noise-streams",
    "init",
    "box",
    "out",
];

/// Fully resolved run settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: Preset,
    pub params: BTreeMap<String, f64>,
    pub equilibrium: EquilibriumSelector,
    /// Fixed noise matrix; when absent the rotation family in `alpha`, `beta` is used.
    pub noise: Option<Mat2>,
    pub alpha: Option<AlphaSpec>,
    pub beta: f64,
    pub method: Method,
    pub grid_n: usize,
    pub span: Span,
    pub flux: FluxConstant,
    pub dt: f64,
    pub steps: usize,
    pub paths: usize,
    pub horizon: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub noise_streams: NoiseStreams,
    /// Start of `simulate`; defaults to the anchor plus `(0.1, 0.1)`.
    pub init: Option<State>,
    /// Search region for models without closed-form equilibria.
    pub search_box: Option<SearchBox>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::default(),
            model: Preset::Kt,
            params: BTreeMap::new(),
            equilibrium: EquilibriumSelector::P2,
            noise: None,
            alpha: None,
            beta: -2.0,
            method: Method::Fd,
            grid_n: FdOptions::default().n,
            span: Span::TwoPi,
            flux: FluxConstant::Periodic,
            dt: 1e-3,
            steps: 10_000,
            paths: 64,
            horizon: 200.0,
            seed: 1,
            scheme: Scheme::Euler1,
            noise_streams: NoiseStreams::Shared,
            init: None,
            search_box: None,
            out: None,
        }
    }
}

fn real(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| invalid(key, format!("malformed number `{v}`")))?;
    if !x.is_finite() {
        return Err(invalid(key, format!("must be finite, got `{v}`")));
    }
    Ok(x)
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = real(key, v)?;
    if x <= 0.0 {
        return Err(invalid(key, format!("must be > 0, got {x}")));
    }
    Ok(x)
}

fn count(key: &str, v: &str, min: usize) -> Result<usize, ConfigError> {
    let n: usize = v
        .parse()
        .map_err(|_| invalid(key, format!("malformed integer `{v}`")))?;
    if n < min {
        return Err(invalid(key, format!("must be >= {min}, got {n}")));
    }
    Ok(n)
}

fn reals<const N: usize>(key: &str, v: &str) -> Result<[f64; N], ConfigError> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(invalid(key, format!("expected {N} comma-separated numbers, got `{v}`")));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = real(key, p)?;
    }
    Ok(out)
}

fn parsed<T: FromStr<Err = String>>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|e: String| invalid(key, e))
}

impl RunConfig {
    /// Applies one `key = value` setting, checking its range.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "command" => self.command = parsed(key, v)?,
            "model" => self.model = v.parse().map_err(|e: crate::model::ModelError| invalid(key, e.to_string()))?,
            "params" => {
                for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (name, val) = item
                        .split_once('=')
                        .ok_or_else(|| invalid(key, format!("expected name=value, got `{item}`")))?;
                    self.params.insert(name.trim().to_string(), real(key, val.trim())?);
                }
            }
            "equilibrium" => self.equilibrium = parsed(key, v)?,
            "noise" => {
                let [m11, m12, m21, m22] = reals::<4>(key, v)?;
                self.noise = Some(Mat2::new(m11, m12, m21, m22));
            }
            "alpha" => {
                let parts: Vec<&str> = v.split(':').collect();
                self.alpha = Some(match parts.as_slice() {
                    [single] => AlphaSpec::Single(real(key, single)?),
                    [lo, hi, step] => {
                        let (lo, hi, step) = (real(key, lo)?, real(key, hi)?, real(key, step)?);
                        alpha_grid(lo, hi, step).map_err(|e| invalid(key, e.to_string()))?;
                        AlphaSpec::Range { lo, hi, step }
                    }
                    _ => return Err(invalid(key, format!("expected a number or lo:hi:step, got `{v}`"))),
                });
            }
            "beta" => self.beta = real(key, v)?,
            "method" => self.method = parsed(key, v)?,
            "grid-n" => self.grid_n = count(key, v, 2)?,
            "span" => self.span = parsed(key, v)?,
            "flux" => self.flux = parsed(key, v)?,
            "dt" => self.dt = positive(key, v)?,
            "steps" => self.steps = count(key, v, 1)?,
            "paths" => self.paths = count(key, v, 1)?,
            "horizon" => self.horizon = positive(key, v)?,
            "seed" => {
                self.seed = v
                    .parse()
                    .map_err(|_| invalid(key, format!("malformed seed `{v}`")))?
            }
            "scheme" => self.scheme = parsed(key, v)?,
            "noise-streams" => self.noise_streams = parsed(key, v)?,
            "init" => {
                let [x, y] = reals::<2>(key, v)?;
                self.init = Some(State::new(x, y));
            }
            "box" => {
                let [x0, x1, y0, y1] = reals::<4>(key, v)?;
                let b = SearchBox::new(x0, x1, y0, y1);
                if b.is_empty() {
                    return Err(invalid(key, "expected x_min,x_max,y_min,y_max with min <= max"));
                }
                self.search_box = Some(b);
            }
            "out" => self.out = Some(PathBuf::from(v)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a line-oriented `key = value` file with `#` comments.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Renders every set value so that [`RunConfig::from_text`] reproduces it.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("command", self.command.to_string());
        line("model", self.model.to_string());
        if !self.params.is_empty() {
            let p: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            line("params", p.join(","));
        }
        line("equilibrium", self.equilibrium.to_string());
        if let Some(b) = self.noise {
            line("noise", format!("{},{},{},{}", b.a11, b.a12, b.a21, b.a22));
        }
        if let Some(a) = self.alpha {
            line("alpha", a.to_string());
        }
        line("beta", self.beta.to_string());
        line("method", self.method.to_string());
        line("grid-n", self.grid_n.to_string());
        line("span", self.span.to_string());
        line("flux", self.flux.to_string());
        line("dt", self.dt.to_string());
        line("steps", self.steps.to_string());
        line("paths", self.paths.to_string());
        line("horizon", self.horizon.to_string());
        line("seed", self.seed.to_string());
        line("scheme", self.scheme.to_string());
        line("noise-streams", self.noise_streams.to_string());
        if let Some(p) = self.init {
            line("init", format!("{},{}", p.x, p.y));
        }
        if let Some(b) = self.search_box {
            line("box", format!("{},{},{},{}", b.x_min, b.x_max, b.y_min, b.y_max));
        }
        if let Some(o) = &self.out {
            line("out", o.to_string_lossy().into_owned());
        }
        s
    }

    /// Cross-key checks that single settings cannot make on their own.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.model == Preset::Custom {
            return Err(invalid("model", "custom models are library-only"));
        }
        self.build_model()?;
        match (self.command, self.alpha) {
            (Command::Sweep, Some(AlphaSpec::Single(_))) => {
                return Err(invalid("alpha", "sweep needs a range lo:hi:step"));
            }
            (Command::Simulate | Command::Lyapunov, Some(AlphaSpec::Range { .. })) => {
                return Err(invalid("alpha", "a range is only valid for sweep"));
            }
            _ => {}
        }
        if self.noise.is_some() {
            if self.command == Command::Sweep {
                return Err(invalid("noise", "sweep always uses the alpha/beta family"));
            }
            if self.alpha.is_some() {
                return Err(invalid("noise", "give either a noise matrix or alpha, not both"));
            }
        }
        if self.command == Command::Lyapunov && self.method == Method::Closed {
            let (_, beta) = self.family_params().ok_or_else(|| {
                invalid("method", "closed needs noise of the form [[a, -b], [b, a]]")
            })?;
            if beta == 0.0 {
                return Err(invalid("beta", "closed method needs beta != 0"));
            }
        }
        Ok(())
    }

    pub fn build_model(&self) -> Result<ModelSpec, ConfigError> {
        ModelSpec::preset(self.model, self.params.iter().map(|(k, v)| (k.as_str(), *v)))
            .map_err(|e| invalid("params", e.to_string()))
    }

    /// The noise matrix for single-point commands.
    pub fn noise_matrix(&self) -> Mat2 {
        self.noise.unwrap_or_else(|| {
            let alpha = match self.alpha {
                Some(AlphaSpec::Single(a)) => a,
                _ => 0.0,
            };
            Mat2::rotation_family(alpha, self.beta)
        })
    }

    /// `(α, β)` when the noise is in the rotation family.
    pub fn family_params(&self) -> Option<(f64, f64)> {
        let b = self.noise_matrix();
        (b.a11 == b.a22 && b.a12 == -b.a21).then_some((b.a11, b.a21))
    }

    pub fn alpha_values(&self) -> Vec<f64> {
        match self.alpha.unwrap_or(DEFAULT_SWEEP) {
            AlphaSpec::Single(a) => vec![a],
            AlphaSpec::Range { lo, hi, step } => alpha_grid(lo, hi, step).unwrap_or_default(),
        }
    }

    pub fn fd_options(&self) -> FdOptions {
        FdOptions::default()
            .with_n(self.grid_n)
            .with_span(self.span)
            .with_flux(self.flux)
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig::new(self.horizon, self.dt, self.paths, self.seed)
    }
}
