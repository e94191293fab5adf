//! Command-line flags, the optional JSON config file, and their resolution
//! into concrete run parameters. Flags override the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kerrsim::circuit::{Protocol, DEFAULT_MAX_N_THETA};
use kerrsim::rng::DEFAULT_SEED;
use kerrsim::{build_input_state, InputSpec, SignalState};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "kerrsim", version, about = "Weak cross-Kerr photon-number entanglement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Peak distances and discrimination error probabilities.
    Analyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Reproduce the nθ = 0.01, (1 − 1/n)²α = 4√2·10⁴ operating point.
        #[arg(long)]
        reproduce: bool,
        /// With --reproduce: the n ≫ 1 limit.
        #[arg(long, requires = "reproduce")]
        asymptotic: bool,
    },
    /// Monte Carlo detection runs with per-bin statistics.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of individual shot records to include.
        #[arg(long)]
        records: Option<usize>,
    },
    /// Homodyne outcome density on a grid, plus peaks and thresholds.
    Density {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, allow_hyphen_values = true)]
        grid_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        grid_max: Option<f64>,
        #[arg(long)]
        grid_points: Option<usize>,
        /// Path for the peaks/thresholds JSON (default: <output>.thresholds.json).
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Worked scenarios: entangling gate, n = 2 discrimination, state analyzer.
    Demo {
        scenario: Scenario,
        #[command(flatten)]
        common: CommonArgs,
        /// Minority-mode photon count l of the entangler input (default: all l).
        #[arg(long)]
        l: Option<u32>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Entangler,
    Parity2,
    Analyzer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// JSON config file mirroring these flags (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Photon number.
    #[arg(long)]
    pub n: Option<u32>,
    /// Kerr phase per photon θ (radians).
    #[arg(long, conflicts_with = "n_theta")]
    pub theta: Option<f64>,
    /// n·θ.
    #[arg(long)]
    pub n_theta: Option<f64>,
    /// Probe amplitude α.
    #[arg(long, conflicts_with = "n_alpha")]
    pub alpha: Option<f64>,
    /// Mean probe photon number |α|².
    #[arg(long)]
    pub n_alpha: Option<f64>,
    /// Input state: inline JSON `{"n":..,"amps":[[re_a,im_a,re_b,im_b],..]}` or a path to one.
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: standard output).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Upper bound on n·θ ("inf" disables the weak-regime check).
    #[arg(long)]
    pub max_n_theta: Option<f64>,
}

/// Config-file form. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<u32>,
    pub theta: Option<f64>,
    pub n_theta: Option<f64>,
    pub alpha: Option<f64>,
    pub n_alpha: Option<f64>,
    pub input: Option<InputSource>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
    pub max_n_theta: Option<f64>,
    pub records: Option<usize>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub sidecar: Option<PathBuf>,
    pub l: Option<u32>,
}

/// `input` in a config file: an inline spec object or a path string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InputSource {
    Inline(InputSpec),
    Path(String),
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })
}

fn parse_spec(text: &str, origin: &str) -> CliResult<InputSpec> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("bad input state {origin}: {e}")))
}

impl InputSource {
    fn load(&self, base: Option<&Path>) -> CliResult<InputSpec> {
        match self {
            InputSource::Inline(spec) => Ok(spec.clone()),
            InputSource::Path(p) => {
                let trimmed = p.trim_start();
                if trimmed.starts_with('{') {
                    return parse_spec(trimmed, "(inline)");
                }
                let path = match base {
                    Some(dir) if Path::new(p).is_relative() => dir.join(p),
                    _ => PathBuf::from(p),
                };
                parse_spec(&read(&path)?, &path.display().to_string())
            }
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        serde_json::from_str(&read(path)?)
            .map_err(|e| CliError::Config(format!("bad config file {}: {e}", path.display())))
    }

    /// Overlays command-line flags. A flag for θ (or α) in either form
    /// replaces both forms from the file.
    pub fn overlay(mut self, flags: &CommonArgs) -> Self {
        if flags.theta.is_some() || flags.n_theta.is_some() {
            self.theta = flags.theta;
            self.n_theta = flags.n_theta;
        }
        if flags.alpha.is_some() || flags.n_alpha.is_some() {
            self.alpha = flags.alpha;
            self.n_alpha = flags.n_alpha;
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if flags.$field.is_some() { self.$field = flags.$field.clone(); } )* };
        }
        take!(n, trials, seed, format, output, max_n_theta);
        if let Some(input) = &flags.input {
            self.input = Some(InputSource::Path(input.clone()));
        }
        self
    }
}

/// Loads the config file named by `--config` (if any) and applies the flags.
pub fn load(flags: &CommonArgs) -> CliResult<(RunConfig, Option<PathBuf>)> {
    let (file, base) = match &flags.config {
        Some(path) => (RunConfig::from_file(path)?, path.parent().map(Path::to_path_buf)),
        None => (RunConfig::default(), None),
    };
    Ok((file.overlay(flags), base))
}

/// Fully resolved physical parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    pub n: u32,
    pub theta: f64,
    pub n_theta: f64,
    pub alpha: f64,
    pub n_alpha: f64,
    pub max_n_theta: f64,
}

impl Params {
    pub fn protocol(&self) -> Protocol {
        Protocol::new(self.theta, self.alpha).with_max_n_theta(self.max_n_theta)
    }
}

/// Photon number from `--n`, falling back to the input state's.
pub fn resolve_n(cfg: &RunConfig, spec: Option<&InputSpec>) -> CliResult<u32> {
    match (cfg.n, spec) {
        (Some(n), Some(s)) if n != s.n() => {
            Err(CliError::Config(format!("--n {n} disagrees with the input state's n = {}", s.n())))
        }
        (Some(0), _) => Err(CliError::Config("--n must be at least 1".into())),
        (Some(n), _) => Ok(n),
        (None, Some(s)) => Ok(s.n()),
        (None, None) => Err(CliError::Config("photon number missing: give --n or --input".into())),
    }
}

/// θ and α for photon number `n`; `defaults` supplies (nθ, α) when neither
/// form is configured.
pub fn resolve_params(cfg: &RunConfig, n: u32, defaults: Option<(f64, f64)>) -> CliResult<Params> {
    let theta = match (cfg.theta, cfg.n_theta, defaults) {
        (Some(_), Some(_), _) => return Err(CliError::Config("give exactly one of theta / n_theta".into())),
        (Some(t), None, _) => t,
        (None, Some(nt), _) => nt / n as f64,
        (None, None, Some((nt, _))) => nt / n as f64,
        (None, None, None) => return Err(CliError::Config("missing --theta or --n-theta".into())),
    };
    let alpha = match (cfg.alpha, cfg.n_alpha, defaults) {
        (Some(_), Some(_), _) => return Err(CliError::Config("give exactly one of alpha / n_alpha".into())),
        (Some(a), None, _) => a,
        (None, Some(na), _) => {
            if !(na > 0.0) {
                return Err(CliError::Config(format!("n_alpha must be > 0, got {na}")));
            }
            na.sqrt()
        }
        (None, None, Some((_, a))) => a,
        (None, None, None) => return Err(CliError::Config("missing --alpha or --n-alpha".into())),
    };
    let max_n_theta = cfg.max_n_theta.unwrap_or(DEFAULT_MAX_N_THETA);
    let params = Params { n, theta, n_theta: n as f64 * theta, alpha, n_alpha: alpha * alpha, max_n_theta };
    params.protocol().validate(n)?;
    Ok(params)
}

pub fn load_spec(cfg: &RunConfig, base: Option<&Path>) -> CliResult<Option<InputSpec>> {
    cfg.input.as_ref().map(|src| src.load(base)).transpose()
}

/// The configured input state, or equal weight on every ket when absent.
pub fn resolve_state(spec: Option<&InputSpec>, n: u32) -> CliResult<(InputSpec, SignalState)> {
    let spec = match spec {
        Some(s) => s.clone(),
        None => InputSpec::uniform(n)?,
    };
    let state = build_input_state(&spec)?;
    Ok((spec, state))
}

pub fn seed(cfg: &RunConfig) -> u64 {
    cfg.seed.unwrap_or(DEFAULT_SEED)
}

pub fn format(cfg: &RunConfig) -> Format {
    cfg.format.unwrap_or(Format::Json)
}
