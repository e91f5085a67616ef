//! Choice of the displacement overshoot `β` that minimizes the average
//! error, for the exact cyclic objective and for Monte Carlo objectives.
//!
//! `β` is handled as an amplitude throughout; results also report `β²`.

use serde::{Deserialize, Serialize};

use crate::analytic::{cyclic_error_probability, DEFAULT_TAIL_TOL};
use crate::error::{invalid, Result};
use crate::mc::{estimate_error, ErrorEstimate, ImperfectionModel, ReceiverConfig};
use crate::signal::PskAlphabet;
use crate::strategy::Strategy;

/// Default search interval for `β` (amplitude).
pub const DEFAULT_BRACKET: (f64, f64) = (0.0, 2.0);
/// Largest amplitude the bracket is widened to.
pub const MAX_BETA: f64 = 10.0;
const SCAN_POINTS: usize = 41;
const GOLDEN: f64 = 0.381_966_011_250_105_1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    AnalyticCyclic,
    McCyclic,
    McBayes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub beta_opt: f64,
    pub p_err_at_opt: f64,
    /// Standard error of `p_err_at_opt` for Monte Carlo objectives.
    pub std_err: Option<f64>,
    pub objective_kind: ObjectiveKind,
    pub evaluations: usize,
    pub bracket: (f64, f64),
    /// The minimum sits on the edge of the widest bracket searched.
    pub boundary: bool,
    /// All Monte Carlo grid values lie within one standard error of the best.
    pub flat: bool,
    /// Central finite-difference `∂P/∂β` at the optimum (analytic only).
    pub stationarity: Option<f64>,
}

impl OptimizationResult {
    pub fn beta_opt_sq(&self) -> f64 {
        self.beta_opt * self.beta_opt
    }
}

/// Brent's parabolic/golden-section minimization on `[a, b]`.
/// Returns `(x, f(x), evaluations)`.
pub fn brent_minimize(
    mut f: impl FnMut(f64) -> f64,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64, usize) {
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut evals = 1;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let mid = 0.5 * (a + b);
        let tol1 = 1.5e-8 * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - mid).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            let mut q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(mid - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= mid { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        evals += 1;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    (x, fx, evals)
}

fn analytic_objective(alphabet: &PskAlphabet, beta: f64) -> f64 {
    cyclic_error_probability(alphabet, beta.max(0.0), DEFAULT_TAIL_TOL)
        .map(|e| e.p_err)
        .unwrap_or(f64::INFINITY)
}

/// Optimal `β` for cyclic probing using the exact error probability.
///
/// A grid scan locates the basin (widening the bracket while the best grid
/// point is on its upper edge), then Brent's method refines it to `tol`.
/// The zero-derivative condition is reported as `stationarity`.
pub fn optimize_beta_analytic(
    alphabet: &PskAlphabet,
    bracket: (f64, f64),
    tol: f64,
) -> Result<OptimizationResult> {
    let (lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return invalid(format!("bad bracket [{lo}, {hi}]"));
    }
    if !(tol > 0.0) {
        return invalid(format!("tolerance must be > 0, got {tol}"));
    }
    // Fails fast where the exact series cannot be certified at all.
    cyclic_error_probability(alphabet, lo, DEFAULT_TAIL_TOL)?;
    let f = |b: f64| analytic_objective(alphabet, b);
    let mut evaluations = 1;
    let (grid, values, best) = loop {
        let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| lo + step * i as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&b| f(b)).collect();
        evaluations += SCAN_POINTS;
        let best = argmin(&values);
        if best + 1 < SCAN_POINTS || hi >= MAX_BETA {
            break (grid, values, best);
        }
        hi = (hi * 1.5).min(MAX_BETA);
    };
    let last = grid.len() - 1;
    let boundary = best == last;
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(last)];
    let (mut x, mut fx, n) = brent_minimize(f, a, b, tol, 200);
    evaluations += n;
    if values[best] < fx {
        x = grid[best];
        fx = values[best];
    }
    if !fx.is_finite() {
        cyclic_error_probability(alphabet, x, DEFAULT_TAIL_TOL)?;
    }
    let h = 1e-4_f64.min(0.5 * x.max(1e-4));
    let stationarity = if x >= h {
        evaluations += 2;
        Some((f(x + h) - f(x - h)) / (2.0 * h))
    } else {
        None
    };
    Ok(OptimizationResult {
        beta_opt: x,
        p_err_at_opt: fx,
        std_err: None,
        objective_kind: ObjectiveKind::AnalyticCyclic,
        evaluations,
        bracket: (a, b),
        boundary,
        flat: false,
        stationarity,
    })
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Evenly spaced amplitudes on `[0, max(2·center, floor)]`.
pub fn mc_beta_grid(center: f64, floor: f64, points: usize) -> Vec<f64> {
    let top = (2.0 * center).max(floor);
    (0..points)
        .map(|i| top * i as f64 / (points - 1) as f64)
        .collect()
}

/// Optimal `β` from Monte Carlo estimates over `grid`.
///
/// Every grid point reuses the same seed, so the differences between
/// points are driven by `β` rather than by sampling noise. One parabolic
/// step through the best grid point and its neighbours refines the result;
/// the refined point is kept only if its estimate is lower.
#[allow(clippy::too_many_arguments)]
pub fn optimize_beta_mc(
    alphabet: &PskAlphabet,
    strategy: Strategy,
    imperfections: ImperfectionModel,
    trials: u64,
    seed: u64,
    grid: &[f64],
    workers: usize,
) -> Result<OptimizationResult> {
    if grid.len() < 8 {
        return invalid(format!("displacement grid needs at least 8 points, got {}", grid.len()));
    }
    if trials < 100_000 {
        return invalid(format!("at least 1e5 trials per grid point required, got {trials}"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid[0] < 0.0 {
        return invalid("displacement grid must be non-negative and strictly increasing");
    }
    let eval = |beta: f64| -> Result<ErrorEstimate> {
        let cfg = ReceiverConfig::new(beta, strategy).with_imperfections(imperfections);
        estimate_error(alphabet, &cfg, trials, seed, workers)
    };
    let estimates = grid.iter().map(|&b| eval(b)).collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = estimates.iter().map(|e| e.p_err).collect();
    let best = argmin(&values);
    let last = grid.len() - 1;
    let mut evaluations = grid.len();
    let flat = values
        .iter()
        .all(|v| v - values[best] <= estimates[best].std_err);
    let mut beta_opt = grid[best];
    let mut chosen = estimates[best];
    if !flat && best > 0 && best < last {
        let (x0, x1, x2) = (grid[best - 1], grid[best], grid[best + 1]);
        let (y0, y1, y2) = (values[best - 1], values[best], values[best + 1]);
        let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
        let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
        if den.abs() > 0.0 {
            let vertex = (x1 - 0.5 * num / den).clamp(x0, x2);
            if vertex != x1 {
                let refined = eval(vertex)?;
                evaluations += 1;
                if refined.p_err < chosen.p_err {
                    beta_opt = vertex;
                    chosen = refined;
                }
            }
        }
    }
    Ok(OptimizationResult {
        beta_opt,
        p_err_at_opt: chosen.p_err,
        std_err: Some(chosen.std_err),
        objective_kind: match strategy {
            Strategy::Cyclic => ObjectiveKind::McCyclic,
            Strategy::Bayesian => ObjectiveKind::McBayes,
        },
        evaluations,
        bracket: (grid[best.saturating_sub(1)], grid[(best + 1).min(last)]),
        boundary: best == last,
        flat,
        stationarity: None,
    })
}
