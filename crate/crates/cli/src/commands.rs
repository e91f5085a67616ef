//! Command implementations. Each returns a [`Table`]; writing it out is
//! left to the caller.

use adrx_core::bounds::{helstrom_mpsk, sql_heterodyne_noisy};
use adrx_core::mc::{estimate_error, simulate_indexed_trial, ImperfectionModel, ReceiverConfig};
use adrx_core::optimize::{mc_beta_grid, optimize_beta_analytic, optimize_beta_mc, DEFAULT_BRACKET};
use adrx_core::signal::displaced_rates;
use adrx_core::{PosteriorState, PskAlphabet, Strategy};

use crate::args::{BenchArgs, BetaPolicy, OptimizeArgs, OptimizeMethod, SimulateArgs, SweepArgs, TraceArgs};
use crate::error::{CliError, Result};
use crate::table::{format_g17, Cell, Table};

pub const SWEEP_HEADER: [&str; 8] =
    ["alpha_sq", "beta_sq", "p_err", "std_err", "sql", "helstrom", "trials", "seed"];

/// Upper end of the Monte Carlo displacement grid, at least.
const MC_GRID_FLOOR: f64 = 0.5;
const ANALYTIC_TOL: f64 = 1e-7;

fn require_seed(seed: Option<u64>) -> u64 {
    seed.expect("seed resolved before execution")
}

/// Optimal cyclic-probing amplitude for power `alpha_sq` seen through a
/// detector of efficiency `eta`, with its (exact) error probability.
///
/// Loss commutes with displacement, so the detector sees a lossless
/// alphabet at `eta·alpha_sq` displaced by `sqrt(eta)·beta`.
pub fn analytic_beta(m: usize, alpha_sq: f64, eta: f64, tol: f64) -> Result<(f64, f64)> {
    if !(eta > 0.0) {
        return Err(CliError::Argument("analytic displacement needs eta > 0".into()));
    }
    let seen = PskAlphabet::from_mean_photons(m, eta * alpha_sq)?;
    let r = optimize_beta_analytic(&seen, DEFAULT_BRACKET, tol)?;
    Ok((r.beta_opt / eta.sqrt(), r.p_err_at_opt))
}

fn mc_beta(
    alphabet: &PskAlphabet,
    strategy: Strategy,
    imperfections: ImperfectionModel,
    trials: u64,
    points: usize,
    seed: u64,
    workers: usize,
) -> Result<(f64, f64, f64)> {
    let (center, _) = analytic_beta(alphabet.m(), alphabet.mean_photons(), imperfections.eta.max(1e-12), ANALYTIC_TOL)?;
    let grid = mc_beta_grid(center, MC_GRID_FLOOR, points);
    let r = optimize_beta_mc(alphabet, strategy, imperfections, trials, seed, &grid, workers)?;
    Ok((r.beta_opt, r.p_err_at_opt, r.std_err.unwrap_or(f64::NAN)))
}

pub fn sweep(a: &SweepArgs) -> Result<Table> {
    let seed = require_seed(a.run.seed);
    let imperfections = a.imperfections.model()?;
    let strategy: Strategy = a.strategy.into();
    if a.beta_policy == BetaPolicy::Fixed && a.beta_sq.is_none() {
        return Err(CliError::Argument("--beta-policy fixed needs --beta-sq".into()));
    }
    if a.trials == 0 {
        return Err(CliError::Argument("--trials must be positive".into()));
    }
    let mut table = Table::new(SWEEP_HEADER);
    for &alpha_sq in &a.grid.powers {
        let alphabet = PskAlphabet::from_mean_photons(a.m, alpha_sq)?;
        let beta = match a.beta_policy {
            BetaPolicy::Zero => 0.0,
            BetaPolicy::Fixed => {
                let b2 = a.beta_sq.unwrap_or_default();
                if !(b2 >= 0.0) {
                    return Err(CliError::Argument("--beta-sq must be >= 0".into()));
                }
                b2.sqrt()
            }
            BetaPolicy::Analytic => analytic_beta(a.m, alpha_sq, imperfections.eta, ANALYTIC_TOL)?.0,
            BetaPolicy::Mc => {
                // A separate seed keeps the selection noise out of the reported estimate.
                let opt_seed = seed.wrapping_add(1);
                mc_beta(&alphabet, strategy, imperfections, a.opt_trials, a.opt_points, opt_seed, a.run.workers)?.0
            }
        };
        let cfg = ReceiverConfig::new(beta, strategy).with_imperfections(imperfections);
        let est = estimate_error(&alphabet, &cfg, a.trials, seed, a.run.workers)?;
        let sql = sql_heterodyne_noisy(alphabet.alpha(), a.m, imperfections.n_th)?;
        let helstrom = helstrom_mpsk(alphabet.alpha(), a.m)?;
        table.push(vec![
            alpha_sq.into(),
            (beta * beta).into(),
            est.p_err.into(),
            est.std_err.into(),
            sql.into(),
            helstrom.into(),
            est.trials.into(),
            seed.into(),
        ]);
    }
    Ok(table)
}

pub fn trace(a: &TraceArgs) -> Result<Table> {
    if !(a.beta_sq >= 0.0) {
        return Err(CliError::Argument("--beta-sq must be >= 0".into()));
    }
    if a.clicks.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(CliError::Argument("click times must lie in (0, 1)".into()));
    }
    if a.clicks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Argument("click times must be strictly increasing".into()));
    }
    trace_table(a.m, a.alpha_sq, a.beta_sq, &a.clicks)
}

/// Posterior after every click and at the end of the pulse.
///
/// `interval_probe` is the hypothesis nulled during the interval that the
/// row closes; `decision` is the probe chosen afterwards (the final guess
/// on the `end` row).
pub fn trace_table(m: usize, alpha_sq: f64, beta_sq: f64, clicks: &[f64]) -> Result<Table> {
    let alphabet = PskAlphabet::from_mean_photons(m, alpha_sq)?;
    let beta = beta_sq.sqrt();
    let mut header = vec!["t".to_string(), "event".into(), "interval_probe".into(), "decision".into()];
    header.extend((1..=m).map(|k| format!("p_{k}")));
    let mut table = Table::new(header);
    let mut post = PosteriorState::uniform(m);
    let row = |t: f64, event: &str, probe: usize, decision: usize, probs: &[f64]| {
        let mut r: Vec<Cell> = vec![t.into(), event.into(), probe.into(), decision.into()];
        r.extend(probs.iter().map(|&p| Cell::from(p)));
        r
    };
    for &t in clicks {
        let probe = post.probe();
        post.click_update(t, &displaced_rates(&alphabet, probe, beta)?)?;
        table.push(row(t, "click", probe, post.probe(), post.probs()));
    }
    let probe = post.probe();
    let h = post.finalize(&displaced_rates(&alphabet, probe, beta)?)?;
    table.push(row(1.0, "end", probe, h.state, post.probs()));
    Ok(table)
}

pub fn bench(a: &BenchArgs) -> Result<Table> {
    let mut table = Table::new(["alpha_sq", "sql", "helstrom"]);
    for &alpha_sq in &a.grid.powers {
        let alpha = alpha_sq.sqrt();
        table.push(vec![
            alpha_sq.into(),
            adrx_core::bounds::sql_heterodyne(alpha, a.m)?.into(),
            helstrom_mpsk(alpha, a.m)?.into(),
        ]);
    }
    Ok(table)
}

/// True when `optimize --method auto` resolves to the analytic objective.
pub fn optimize_is_analytic(a: &OptimizeArgs) -> bool {
    match a.method {
        OptimizeMethod::Analytic => true,
        OptimizeMethod::Mc => false,
        OptimizeMethod::Auto => {
            let i = &a.imperfections;
            a.strategy == crate::args::StrategyArg::Cyclic && i.n_th == 0.0 && i.dead_time == 0.0 && i.dark_rate == 0.0
        }
    }
}

pub fn optimize(a: &OptimizeArgs) -> Result<Table> {
    let imperfections = a.imperfections.model()?;
    let analytic = optimize_is_analytic(a);
    if analytic {
        let i = &imperfections;
        if a.strategy != crate::args::StrategyArg::Cyclic || i.n_th > 0.0 || i.dead_time > 0.0 || i.dark_rate > 0.0 {
            return Err(CliError::Argument(
                "the analytic objective covers cyclic probing with detector loss only".into(),
            ));
        }
    }
    let mut table = Table::new(["alpha_sq", "beta_opt", "beta_opt_sq", "p_err", "std_err"]);
    for &alpha_sq in &a.grid.powers {
        let (beta, p, se) = if analytic {
            let (b, p) = analytic_beta(a.m, alpha_sq, imperfections.eta, a.tol)?;
            (b, p, 0.0)
        } else {
            let alphabet = PskAlphabet::from_mean_photons(a.m, alpha_sq)?;
            mc_beta(&alphabet, a.strategy.into(), imperfections, a.trials, a.points, require_seed(a.run.seed), a.run.workers)?
        };
        table.push(vec![alpha_sq.into(), beta.into(), (beta * beta).into(), p.into(), se.into()]);
    }
    Ok(table)
}

pub fn simulate(a: &SimulateArgs) -> Result<Table> {
    if !(a.beta_sq >= 0.0) {
        return Err(CliError::Argument("--beta-sq must be >= 0".into()));
    }
    let seed = require_seed(a.run.seed);
    let alphabet = PskAlphabet::from_mean_photons(a.m, a.alpha_sq)?;
    let cfg = ReceiverConfig::new(a.beta_sq.sqrt(), a.strategy.into()).with_imperfections(a.imperfections.model()?);
    let mut table = Table::new([
        "trial",
        "true_state",
        "hypothesis",
        "confidence",
        "correct",
        "clicks",
        "click_times",
        "probe_sequence",
    ]);
    for i in 0..a.trials {
        let o = simulate_indexed_trial(&alphabet, &cfg, seed, i)?;
        let join = |v: Vec<String>| v.join(";");
        table.push(vec![
            i.into(),
            o.true_state.into(),
            o.hypothesis.state.into(),
            o.hypothesis.confidence.into(),
            u64::from(o.correct).into(),
            o.click_times.len().into(),
            join(o.click_times.iter().map(|&t| format_g17(t)).collect()).into(),
            join(o.probe_sequence.iter().map(|k| k.to_string()).collect()).into(),
        ]);
    }
    Ok(table)
}
