//! Command-line surface. Every flag except the I/O and worker controls can
//! also be given in a spec file (see [`crate::specfile`]).

use std::path::PathBuf;

use adrx_core::mc::ImperfectionModel;
use adrx_core::strategy::Strategy;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::table::Format;

#[derive(Debug, Parser)]
#[command(name = "adrx", version, about = "Adaptive displacement receivers for PSK coherent states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo error probability over a grid of signal powers.
    Sweep(SweepArgs),
    /// Posterior trace of the Bayesian receiver for given click times.
    Trace(TraceArgs),
    /// Helstrom bound and heterodyne limit over a power grid.
    Bench(BenchArgs),
    /// Optimal displacement over a power grid.
    Optimize(OptimizeArgs),
    /// Raw simulated trials.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sweep(_) => "sweep",
            Command::Trace(_) => "trace",
            Command::Bench(_) => "bench",
            Command::Optimize(_) => "optimize",
            Command::Simulate(_) => "simulate",
        }
    }

    pub fn io(&self) -> &IoArgs {
        match self {
            Command::Sweep(a) => &a.io,
            Command::Trace(a) => &a.io,
            Command::Bench(a) => &a.io,
            Command::Optimize(a) => &a.io,
            Command::Simulate(a) => &a.io,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct IoArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (stdout when omitted).
    #[arg(long, short)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Read flags from a `key = value` spec file; explicit flags win.
    #[arg(long)]
    #[serde(skip)]
    pub spec: Option<PathBuf>,
    /// Write the effective settings (including the seed) as a spec file.
    #[arg(long)]
    #[serde(skip)]
    pub dump_spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunArgs {
    /// Master seed; a random one is drawn and printed when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, env = "ADRX_WORKERS", default_value_t = 0)]
    #[serde(skip)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct GridArgs {
    /// Comma-separated signal powers |α|².
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    pub powers: Vec<f64>,
    /// Linear grid `lo:hi:count`.
    #[arg(long, conflicts_with_all = ["powers", "log_grid"])]
    #[serde(skip)]
    pub grid: Option<String>,
    /// Geometric grid `lo:hi:count`.
    #[arg(long, conflicts_with = "powers")]
    #[serde(skip)]
    pub log_grid: Option<String>,
}

impl GridArgs {
    /// Resolves `--grid`/`--log-grid` into the explicit power list.
    pub fn resolve(&mut self) -> Result<()> {
        if let Some(g) = self.grid.take() {
            self.powers = parse_range(&g, false)?;
        } else if let Some(g) = self.log_grid.take() {
            self.powers = parse_range(&g, true)?;
        }
        if self.powers.is_empty() {
            return Err(CliError::Argument("power grid is empty; use --powers, --grid or --log-grid".into()));
        }
        if self.powers.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(CliError::Argument("signal powers must be finite and >= 0".into()));
        }
        if self.powers.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Argument("signal powers must be strictly increasing".into()));
        }
        Ok(())
    }
}

fn parse_range(spec: &str, geometric: bool) -> Result<Vec<f64>> {
    let bad = || CliError::Argument(format!("grid '{spec}' is not of the form lo:hi:count"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    if geometric && !(lo > 0.0 && hi > 0.0) {
        return Err(CliError::Argument("geometric grid needs positive bounds".into()));
    }
    Ok((0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            if i == n - 1 {
                hi
            } else if geometric {
                lo * (hi / lo).powf(f)
            } else {
                lo + (hi - lo) * f
            }
        })
        .collect())
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ImperfectionArgs {
    /// Detector quantum efficiency.
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    /// Mean thermal photons per pulse.
    #[arg(long, default_value_t = 0.0)]
    pub n_th: f64,
    /// Dead time per click, as a fraction of the pulse.
    #[arg(long, default_value_t = 0.0)]
    pub dead_time: f64,
    /// Mean dark counts per pulse.
    #[arg(long, default_value_t = 0.0)]
    pub dark_rate: f64,
}

impl ImperfectionArgs {
    pub fn model(&self) -> Result<ImperfectionModel> {
        let m = ImperfectionModel {
            eta: self.eta,
            n_th: self.n_th,
            dead_time: self.dead_time,
            dark_rate: self.dark_rate,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Cyclic,
    Bayesian,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Cyclic => Strategy::Cyclic,
            StrategyArg::Bayesian => Strategy::Bayesian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaPolicy {
    /// β = 0: exact nulling (Bondurant receiver).
    Zero,
    /// β² from `--beta-sq`.
    Fixed,
    /// Exact cyclic-probing optimum, rescaled for detector efficiency.
    Analytic,
    /// Monte Carlo optimum for the chosen strategy and imperfections.
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizeMethod {
    /// Analytic when the objective is exact (cyclic, no noise/dead time/dark counts).
    Auto,
    Analytic,
    Mc,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    /// Number of states M.
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::Bayesian)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = BetaPolicy::Analytic)]
    pub beta_policy: BetaPolicy,
    /// Displacement β² for `--beta-policy fixed`.
    #[arg(long)]
    pub beta_sq: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub imperfections: ImperfectionArgs,
    /// Trials per grid point.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Trials per candidate β for `--beta-policy mc`.
    #[arg(long, default_value_t = 100_000)]
    pub opt_trials: u64,
    /// Candidate β values for `--beta-policy mc`.
    #[arg(long, default_value_t = 10)]
    pub opt_points: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct TraceArgs {
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Signal power |α|².
    #[arg(long)]
    pub alpha_sq: f64,
    /// Displacement β².
    #[arg(long)]
    pub beta_sq: f64,
    /// Comma-separated click times in (0, 1), strictly increasing.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub clicks: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct BenchArgs {
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct OptimizeArgs {
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = StrategyArg::Cyclic)]
    pub strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = OptimizeMethod::Auto)]
    pub method: OptimizeMethod,
    #[command(flatten)]
    #[serde(flatten)]
    pub imperfections: ImperfectionArgs,
    /// Trials per candidate β (Monte Carlo method).
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// Candidate β values (Monte Carlo method).
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    /// Amplitude tolerance (analytic method).
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long)]
    pub alpha_sq: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta_sq: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Bayesian)]
    pub strategy: StrategyArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub imperfections: ImperfectionArgs,
    /// Number of trials to print.
    #[arg(long, default_value_t = 10)]
    pub trials: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub io: IoArgs,
}
