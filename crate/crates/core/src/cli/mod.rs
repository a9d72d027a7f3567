//! Command-line front end: flag and config-file parsing, command dispatch and
//! CSV output.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for numerical
//! failures (degenerate phase diffusion, blow-up on the first step, ...), 1
//! when output cannot be written.

mod config;
mod csv;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{
    AlphaSpec, Command, ConfigError, EquilibriumSelector, RunConfig, DEFAULT_SWEEP, KEYS,
};
pub use csv::{
    emit_sweep_csv, emit_trajectory_csv, num, write_equilibria_csv, write_lyapunov_csv,
    write_sweep_csv, write_trajectory_csv,
};

use crate::integrate::{simulate, NonlinearSystem, SimConfig};
use crate::lyapunov::{
    closed_form_lyapunov, lyapunov_fd, lyapunov_mc, stability_sweep, LyapunovError, Method,
    SweepSettings,
};
use crate::model::{
    bell_equilibria, find_equilibria_numeric, kt_equilibria, Equilibrium, EquilibriumLabel,
    ModelError, ModelSpec, Preset, SearchBox, State,
};
use crate::sde::{diffusion_at_equilibrium, linearize};

#[derive(Parser, Debug)]
#[command(name = "tumor-sde", version, about = "Stochastic tumor-immune models: equilibria, simulation and Lyapunov stability")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// List equilibria with their Jacobian eigenvalues
    Equilibria(Flags),
    /// Integrate one sample path of the nonlinear SDE
    Simulate(Flags),
    /// Top Lyapunov exponent of the linearization at an equilibrium
    Lyapunov(Flags),
    /// Lyapunov exponent over an alpha grid with refined sign changes
    Sweep(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// kt | bell | volterra | stepanova | vladar | exponential | logistic
    #[arg(long)]
    model: Option<String>,
    /// Parameter overrides, name=value,...
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
    /// P1 | P2 | index into the equilibrium list
    #[arg(long)]
    equilibrium: Option<String>,
    /// Fixed noise matrix m11,m12,m21,m22
    #[arg(long, allow_hyphen_values = true)]
    noise: Option<String>,
    /// Rotation-family alpha, or lo:hi:step for sweep
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Rotation-family beta [default: -2]
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// fd | closed | mc
    #[arg(long)]
    method: Option<String>,
    /// Phase grid size for fd [default: 10000]
    #[arg(long)]
    grid_n: Option<String>,
    /// pi | 2pi
    #[arg(long)]
    span: Option<String>,
    /// periodic | seed
    #[arg(long)]
    flux: Option<String>,
    /// Time step [default: 0.001]
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    /// Monte Carlo paths
    #[arg(long)]
    paths: Option<String>,
    /// Monte Carlo horizon T
    #[arg(long, allow_hyphen_values = true)]
    horizon: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// euler1 | euler2
    #[arg(long)]
    scheme: Option<String>,
    /// shared | independent
    #[arg(long)]
    noise_streams: Option<String>,
    /// Initial state x,y for simulate
    #[arg(long, allow_hyphen_values = true)]
    init: Option<String>,
    /// Equilibrium search box x_min,x_max,y_min,y_max
    #[arg(long = "box", allow_hyphen_values = true)]
    search_box: Option<String>,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<String>,
    /// `key = value` config file; flags take precedence
    #[arg(long)]
    config: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let all: [(&'static str, &Option<String>); 20] = [
            ("model", &self.model),
            ("params", &self.params),
            ("equilibrium", &self.equilibrium),
            ("noise", &self.noise),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("method", &self.method),
            ("grid-n", &self.grid_n),
            ("span", &self.span),
            ("flux", &self.flux),
            ("dt", &self.dt),
            ("steps", &self.steps),
            ("paths", &self.paths),
            ("horizon", &self.horizon),
            ("seed", &self.seed),
            ("scheme", &self.scheme),
            ("noise-streams", &self.noise_streams),
            ("init", &self.init),
            ("box", &self.search_box),
            ("out", &self.out),
        ];
        all.into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Error, Debug)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Numerical(String),
    #[error("output: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => 0,
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownParam { .. }
            | ModelError::MissingParam { .. }
            | ModelError::UnknownModel(_)
            | ModelError::InvalidParams(_) => CliError::Config(ConfigError::Invalid {
                key: "params".into(),
                msg: e.to_string(),
            }),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LyapunovError> for CliError {
    fn from(e: LyapunovError) -> Self {
        match e {
            LyapunovError::InvalidConfig(msg) => CliError::Config(ConfigError::Invalid {
                key: "lyapunov".into(),
                msg,
            }),
            LyapunovError::Model(m) => m.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// Parses `argv` (program name first): defaults, then `--config`, then flags.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (command, flags) = match cli.command {
        Sub::Equilibria(f) => (Command::Equilibria, f),
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Lyapunov(f) => (Command::Lyapunov, f),
        Sub::Sweep(f) => (Command::Sweep, f),
    };
    let mut cfg = RunConfig::default();
    if let Some(path) = &flags.config {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.clone(),
            msg: e.to_string(),
        })?;
        cfg.apply_text(&text)?;
    }
    cfg.command = command;
    for (k, v) in flags.pairs() {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Equilibria found, plus `(label, reason)` for the ones left out.
pub type EquilibriumReport = (Vec<Equilibrium>, Vec<(String, String)>);

pub fn equilibria(cfg: &RunConfig, model: &ModelSpec) -> Result<EquilibriumReport, CliError> {
    Ok(match model.name() {
        Preset::Kt => {
            let set = kt_equilibria(&model.kt_params().expect("kt model"))?;
            let omitted = set.omitted.iter().map(|(l, why)| (l.to_string(), why.clone())).collect();
            (set.points, omitted)
        }
        Preset::Bell => (bell_equilibria(&model.bell_params().expect("bell model"))?, Vec::new()),
        _ => {
            let bx = cfg
                .search_box
                .unwrap_or_else(|| SearchBox::square(0.0, 10.0 * model.scale()));
            (find_equilibria_numeric(model, &bx, 41), Vec::new())
        }
    })
}

fn select(cfg: &RunConfig, list: &[Equilibrium], omitted: &[(String, String)]) -> Result<Equilibrium, CliError> {
    let found = match cfg.equilibrium {
        EquilibriumSelector::P1 => list
            .iter()
            .find(|e| e.label == EquilibriumLabel::P1)
            .or_else(|| list.first().filter(|e| e.label == EquilibriumLabel::Numeric)),
        EquilibriumSelector::P2 => list
            .iter()
            .find(|e| e.label == EquilibriumLabel::P2)
            .or_else(|| list.get(1).filter(|e| e.label == EquilibriumLabel::Numeric)),
        EquilibriumSelector::Index(i) => list.get(i),
    };
    found.copied().ok_or_else(|| {
        let why = omitted
            .iter()
            .find(|(l, _)| *l == cfg.equilibrium.to_string())
            .map(|(_, w)| format!(" ({w})"))
            .unwrap_or_default();
        CliError::Config(ConfigError::Invalid {
            key: "equilibrium".into(),
            msg: format!("{} not available: {} found{why}", cfg.equilibrium, list.len()),
        })
    })
}

/// Runs the configured command, writing CSV to `out`.
pub fn run<W: Write>(cfg: &RunConfig, out: &mut W) -> Result<(), CliError> {
    let model = cfg.build_model()?;
    let (list, omitted) = equilibria(cfg, &model)?;
    match cfg.command {
        Command::Equilibria => {
            let rows = list
                .iter()
                .map(|e| Ok((*e, model.jacobian(e.point)?.eigenvalues())))
                .collect::<Result<Vec<_>, ModelError>>()?;
            write_equilibria_csv(&rows, &omitted, out)?;
        }
        Command::Simulate => {
            let e = select(cfg, &list, &omitted)?;
            let sys = NonlinearSystem::new(model, diffusion_at_equilibrium(cfg.noise_matrix(), &e));
            let init = cfg.init.unwrap_or(e.point + State::new(0.1, 0.1));
            let sim = SimConfig::new(cfg.dt, cfg.steps, init)
                .with_scheme(cfg.scheme)
                .with_noise_streams(cfg.noise_streams)
                .with_seed(cfg.seed);
            let t = simulate(&sys, &sim).map_err(|e| {
                CliError::Config(ConfigError::Invalid {
                    key: "simulate".into(),
                    msg: e.to_string(),
                })
            })?;
            write_trajectory_csv(&t, out)?;
            if let Some(b) = t.blowup.filter(|b| b.step == 0) {
                return Err(CliError::Numerical(format!(
                    "blow-up in component {} on the first step",
                    b.component
                )));
            }
        }
        Command::Lyapunov => {
            let e = select(cfg, &list, &omitted)?;
            let sys = linearize(&model, cfg.noise_matrix(), &e)?;
            let est = match cfg.method {
                Method::Fd => lyapunov_fd(&sys, &cfg.fd_options())?,
                Method::Mc => lyapunov_mc(&sys, &cfg.mc_config())?,
                Method::Closed => {
                    let (alpha, beta) = cfg.family_params().expect("validated");
                    closed_form_lyapunov(sys.a, alpha, beta)?
                }
            };
            write_lyapunov_csv(&est, out)?;
        }
        Command::Sweep => {
            let e = select(cfg, &list, &omitted)?;
            let settings = SweepSettings {
                method: cfg.method,
                fd: cfg.fd_options(),
                mc: cfg.mc_config(),
                ..SweepSettings::default()
            };
            let r = stability_sweep(&model, &e, cfg.beta, &cfg.alpha_values(), &settings)?;
            write_sweep_csv(&r, out)?;
            if !r.points.is_empty() && r.points.iter().all(|p| p.result.is_err()) {
                let first = r.points[0].result.as_ref().unwrap_err();
                return Err(CliError::Numerical(format!("every sweep point failed: {first}")));
            }
        }
    }
    Ok(())
}

/// Parses, runs and writes to `--out` or stdout. Returns the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(argv).and_then(|cfg| match &cfg.out {
        Some(path) => {
            let mut w = io::BufWriter::new(fs::File::create(path)?);
            let r = run(&cfg, &mut w);
            w.flush()?;
            r
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            run(&cfg, &mut w)
        }
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            CliError::Usage(e).exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
