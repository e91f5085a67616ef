//! Feedback rules that pick the probed state after each click and the final
//! hypothesis at the end of the pulse.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{RateVector, StateIndex};

/// Relative slack under which two posterior values count as tied.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Probe `1 → 2 → … → M → 1` on successive clicks.
    Cyclic,
    /// Probe the maximum-a-posteriori state after each click.
    Bayesian,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Cyclic => "cyclic",
            Strategy::Bayesian => "bayesian",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cyclic" => Ok(Strategy::Cyclic),
            "bayesian" | "bayes" => Ok(Strategy::Bayesian),
            other => invalid(format!("unknown strategy '{other}' (expected cyclic or bayesian)")),
        }
    }
}

/// The receiver's decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub state: StateIndex,
    /// Posterior of the chosen state; 1.0 for cyclic probing.
    pub confidence: f64,
}

/// Cyclic probing state: only the click count matters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CyclicState {
    m: usize,
    probe: StateIndex,
    click_count: usize,
}

impl CyclicState {
    pub fn new(m: usize) -> Self {
        Self { m, probe: 1, click_count: 0 }
    }

    pub fn probe(&self) -> StateIndex {
        self.probe
    }

    pub fn click_count(&self) -> usize {
        self.click_count
    }

    pub fn on_click(&mut self) {
        self.click_count += 1;
        self.probe = 1 + self.click_count % self.m;
    }

    pub fn finalize(&self) -> Hypothesis {
        cyclic_finalize(self.click_count, self.m)
    }
}

/// The probed state after `click_count` clicks is also the decision.
pub fn cyclic_finalize(click_count: usize, m: usize) -> Hypothesis {
    Hypothesis { state: 1 + click_count % m, confidence: 1.0 }
}

/// Posterior over the `M` hypotheses for Bayesian probing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorState {
    probs: Vec<f64>,
    probe: StateIndex,
    last_event_time: f64,
    click_count: usize,
}

impl PosteriorState {
    /// Uniform prior, probing state 1 at `t = 0`.
    pub fn uniform(m: usize) -> Self {
        Self {
            probs: vec![1.0 / m as f64; m],
            probe: 1,
            last_event_time: 0.0,
            click_count: 0,
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn probe(&self) -> StateIndex {
        self.probe
    }

    pub fn last_event_time(&self) -> f64 {
        self.last_event_time
    }

    pub fn click_count(&self) -> usize {
        self.click_count
    }

    fn m(&self) -> usize {
        self.probs.len()
    }

    fn check_rates(&self, rates: &RateVector) -> Result<()> {
        if rates.len() != self.m() {
            return invalid(format!("expected {} rates, got {}", self.m(), rates.len()));
        }
        Ok(())
    }

    /// Multiplies by `w_k` and renormalizes. An all-zero likelihood carries
    /// no usable information and leaves the posterior unchanged.
    fn reweight(&mut self, weights: impl Iterator<Item = f64>) {
        let updated: Vec<f64> = self.probs.iter().zip(weights).map(|(p, w)| p * w).collect();
        let total: f64 = updated.iter().sum();
        if total > 0.0 && total.is_finite() {
            self.probs = updated.into_iter().map(|p| p / total).collect();
        }
    }

    /// No click on `[last_event_time, t_end]`: weights `e^{-n_k Δt}`.
    /// The probe does not change.
    pub fn silence_update(&mut self, t_end: f64, rates: &RateVector) -> Result<()> {
        self.check_rates(rates)?;
        if t_end < self.last_event_time {
            return invalid(format!(
                "silence end {t_end} precedes last event at {}",
                self.last_event_time
            ));
        }
        let dt = t_end - self.last_event_time;
        if dt > 0.0 {
            self.reweight(rates.as_slice().iter().map(|n| (-n * dt).exp()));
        }
        self.last_event_time = t_end;
        Ok(())
    }

    /// A click at time `t` under the current probe's `rates`: weights
    /// `n_k e^{-n_k Δt}`, then the probe moves to the most likely state.
    pub fn click_update(&mut self, t: f64, rates: &RateVector) -> Result<()> {
        if !(t >= self.last_event_time) || t > 1.0 {
            return invalid(format!(
                "click at {t} must lie in [{}, 1]",
                self.last_event_time
            ));
        }
        self.silence_update(t, rates)?;
        self.reweight(rates.as_slice().iter().copied());
        self.click_count += 1;
        self.probe = self.map_state(self.probe);
        Ok(())
    }

    /// The detector is blind until `t`: no likelihood accrues, the exposure
    /// clock jumps forward.
    pub fn suspend_until(&mut self, t: f64) {
        if t > self.last_event_time {
            self.last_event_time = t.min(1.0);
        }
    }

    /// Accounts for silence up to the end of the pulse and returns the
    /// maximum-a-posteriori state.
    pub fn finalize(&mut self, rates: &RateVector) -> Result<Hypothesis> {
        let end = self.last_event_time.max(1.0);
        self.silence_update(end, rates)?;
        let state = self.map_state(self.probe);
        Ok(Hypothesis { state, confidence: self.probs[state - 1] })
    }

    /// Argmax of the posterior. Ties go to the state reached from `from`
    /// with the fewest `2π/M` phase steps.
    pub fn map_state(&self, from: StateIndex) -> StateIndex {
        let m = self.m();
        let best = self.probs.iter().copied().fold(0.0, f64::max);
        (0..m)
            .map(|step| 1 + (from - 1 + step) % m)
            .find(|&k| self.probs[k - 1] >= best * (1.0 - TIE_TOL))
            .unwrap_or(from)
    }
}

/// Time at which a single first click stops favouring the far state with
/// rate `n_far` over a neighbour with rate `n_near`:
/// `n e^{-nt}` curves cross at `ln(n_far/n_near)/(n_far - n_near)`.
pub fn first_click_crossover(n_near: f64, n_far: f64) -> Option<f64> {
    if n_near <= 0.0 || n_far <= 0.0 || n_near == n_far {
        return None;
    }
    Some((n_far / n_near).ln() / (n_far - n_near))
}
