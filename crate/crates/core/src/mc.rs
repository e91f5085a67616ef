//! Monte Carlo simulation of the feedback receiver.
//!
//! Each trial owns a ChaCha8 substream selected by its index
//! (`set_stream(index)` on a generator keyed by the master seed), so results
//! depend only on `(seed, trials)` and not on how trials are scheduled.
//! Evaluating several displacements with the same seed reuses the same
//! random numbers: true states, noise offsets and the unit-rate exponential
//! waits are all drawn independently of `β`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::{
    displaced_rates, noisy_rate, probe_field, ComplexField, PskAlphabet, RateVector, StateIndex,
};
use crate::strategy::{CyclicState, Hypothesis, PosteriorState, Strategy};

/// Trials handed to one parallel work item.
const BATCH: u64 = 4096;

/// Detector and channel non-idealities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImperfectionModel {
    /// Quantum efficiency in `[0, 1]`.
    pub eta: f64,
    /// Mean thermal photons added per pulse.
    pub n_th: f64,
    /// Blind time after each click, as a fraction of the pulse.
    pub dead_time: f64,
    /// Mean dark counts per pulse.
    pub dark_rate: f64,
}

impl Default for ImperfectionModel {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl ImperfectionModel {
    pub const IDEAL: ImperfectionModel = ImperfectionModel {
        eta: 1.0,
        n_th: 0.0,
        dead_time: 0.0,
        dark_rate: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return invalid(format!("quantum efficiency must be in [0, 1], got {}", self.eta));
        }
        if !(self.n_th >= 0.0) || !self.n_th.is_finite() {
            return invalid(format!("thermal photon number must be >= 0, got {}", self.n_th));
        }
        if !(0.0..1.0).contains(&self.dead_time) {
            return invalid(format!("dead time must be in [0, 1), got {}", self.dead_time));
        }
        if !(self.dark_rate >= 0.0) || !self.dark_rate.is_finite() {
            return invalid(format!("dark rate must be >= 0, got {}", self.dark_rate));
        }
        Ok(())
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }

    pub fn with_thermal(self, n_th: f64) -> Self {
        Self { n_th, ..self }
    }

    pub fn with_dead_time(self, dead_time: f64) -> Self {
        Self { dead_time, ..self }
    }

    pub fn with_dark_rate(self, dark_rate: f64) -> Self {
        Self { dark_rate, ..self }
    }
}

/// One receiver instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    /// Displacement overshoot amplitude `β ≥ 0`.
    pub beta: f64,
    pub strategy: Strategy,
    pub imperfections: ImperfectionModel,
}

impl ReceiverConfig {
    pub fn new(beta: f64, strategy: Strategy) -> Self {
        Self { beta, strategy, imperfections: ImperfectionModel::IDEAL }
    }

    pub fn with_imperfections(self, imperfections: ImperfectionModel) -> Self {
        Self { imperfections, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub true_state: StateIndex,
    pub click_times: Vec<f64>,
    /// Probe active on each inter-click interval; one longer than `click_times`.
    pub probe_sequence: Vec<StateIndex>,
    pub hypothesis: Hypothesis,
    pub correct: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub p_err: f64,
    pub std_err: f64,
    pub trials: u64,
    pub errors: u64,
    pub seed: u64,
}

impl ErrorEstimate {
    fn from_counts(errors: u64, trials: u64, seed: u64) -> Self {
        let p = errors as f64 / trials as f64;
        Self {
            p_err: p,
            std_err: (p * (1.0 - p) / trials as f64).sqrt(),
            trials,
            errors,
            seed,
        }
    }
}

/// Generator for trial `index` of a run seeded with `master_seed`.
pub fn trial_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Gaussian amplitude offset with variance `n_th/2` per quadrature.
///
/// Always consumes two normal draws so that runs differing only in `n_th`
/// stay aligned on the same random stream.
pub fn sample_thermal_offset<R: Rng + ?Sized>(n_th: f64, rng: &mut R) -> ComplexField {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    if n_th <= 0.0 {
        return ComplexField::ZERO;
    }
    let sigma = (0.5 * n_th).sqrt();
    ComplexField::new(sigma * x, sigma * y)
}

/// Per-run tables shared by all trials.
struct TrialPlan {
    alphabet: PskAlphabet,
    strategy: Strategy,
    imp: ImperfectionModel,
    /// Receiver-side rates `η n + n_dc`, indexed by probe - 1.
    nominal: Vec<RateVector>,
    /// Receiver displacement field per probe.
    fields: Vec<ComplexField>,
}

impl TrialPlan {
    fn new(alphabet: &PskAlphabet, config: &ReceiverConfig) -> Result<Self> {
        config.imperfections.validate()?;
        let imp = config.imperfections;
        let m = alphabet.m();
        let nominal = (1..=m)
            .map(|p| Ok(displaced_rates(alphabet, p, config.beta)?.detected(imp.eta, imp.dark_rate)))
            .collect::<Result<Vec<_>>>()?;
        let fields = (1..=m).map(|p| probe_field(alphabet, p, config.beta)).collect();
        Ok(Self {
            alphabet: *alphabet,
            strategy: config.strategy,
            imp,
            nominal,
            fields,
        })
    }

    fn physical_rates(&self, true_state: StateIndex, offset: ComplexField) -> Vec<f64> {
        if offset == ComplexField::ZERO {
            return self.nominal.iter().map(|r| r.get(true_state)).collect();
        }
        self.fields
            .iter()
            .map(|&f| self.imp.eta * noisy_rate(&self.alphabet, true_state, f, offset) + self.imp.dark_rate)
            .collect()
    }

    fn run<R: Rng + ?Sized>(
        &self,
        true_state: StateIndex,
        rng: &mut R,
        mut trace: Option<(&mut Vec<f64>, &mut Vec<StateIndex>)>,
    ) -> Hypothesis {
        let offset = sample_thermal_offset(self.imp.n_th, rng);
        let physical = self.physical_rates(true_state, offset);
        let dead = self.imp.dead_time;

        let mut receiver = match self.strategy {
            Strategy::Cyclic => Receiver::Cyclic(CyclicState::new(self.alphabet.m())),
            Strategy::Bayesian => Receiver::Bayesian(PosteriorState::uniform(self.alphabet.m())),
        };
        if let Some((_, probes)) = trace.as_mut() {
            probes.push(receiver.probe());
        }
        let mut t = 0.0;
        loop {
            let probe = receiver.probe();
            let rate = physical[probe - 1];
            if rate <= 0.0 {
                break;
            }
            let wait: f64 = rng.sample(Exp1);
            t += wait / rate;
            if t >= 1.0 {
                break;
            }
            match &mut receiver {
                Receiver::Cyclic(s) => s.on_click(),
                Receiver::Bayesian(s) => {
                    s.click_update(t, &self.nominal[probe - 1])
                        .expect("click times are increasing");
                    if dead > 0.0 {
                        s.suspend_until(t + dead);
                    }
                }
            }
            if let Some((clicks, probes)) = trace.as_mut() {
                clicks.push(t);
                probes.push(receiver.probe());
            }
            t += dead;
            if t >= 1.0 {
                break;
            }
        }
        match receiver {
            Receiver::Cyclic(s) => s.finalize(),
            Receiver::Bayesian(mut s) => {
                let probe = s.probe();
                s.finalize(&self.nominal[probe - 1]).expect("pulse end follows last event")
            }
        }
    }
}

enum Receiver {
    Cyclic(CyclicState),
    Bayesian(PosteriorState),
}

impl Receiver {
    fn probe(&self) -> StateIndex {
        match self {
            Receiver::Cyclic(s) => s.probe(),
            Receiver::Bayesian(s) => s.probe(),
        }
    }
}

/// Simulates one pulse carrying `true_state` and records the click record.
pub fn simulate_trial<R: Rng + ?Sized>(
    true_state: StateIndex,
    alphabet: &PskAlphabet,
    config: &ReceiverConfig,
    rng: &mut R,
) -> Result<TrialOutcome> {
    alphabet.check_index(true_state)?;
    let plan = TrialPlan::new(alphabet, config)?;
    let mut click_times = Vec::new();
    let mut probe_sequence = Vec::new();
    let hypothesis = plan.run(true_state, rng, Some((&mut click_times, &mut probe_sequence)));
    Ok(TrialOutcome {
        true_state,
        click_times,
        probe_sequence,
        correct: hypothesis.state == true_state,
        hypothesis,
    })
}

/// Runs trial `index` of a seeded experiment: draws the true state
/// uniformly, then simulates it.
pub fn simulate_indexed_trial(
    alphabet: &PskAlphabet,
    config: &ReceiverConfig,
    master_seed: u64,
    index: u64,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(master_seed, index);
    let k = rng.random_range(1..=alphabet.m());
    simulate_trial(k, alphabet, config, &mut rng)
}

fn count_errors(plan: &TrialPlan, base: &ChaCha8Rng, range: std::ops::Range<u64>) -> u64 {
    let m = plan.alphabet.m();
    range
        .filter(|&i| {
            let mut rng = base.clone();
            rng.set_stream(i);
            let k = rng.random_range(1..=m);
            plan.run(k, &mut rng, None).state != k
        })
        .count() as u64
}

fn batches(trials: u64) -> impl Iterator<Item = std::ops::Range<u64>> + Clone {
    (0..trials.div_ceil(BATCH)).map(move |b| b * BATCH..((b + 1) * BATCH).min(trials))
}

#[cfg(feature = "parallel")]
fn run_batches(plan: &TrialPlan, base: &ChaCha8Rng, trials: u64, workers: usize) -> u64 {
    use rayon::prelude::*;
    if workers == 1 {
        return run_batches_serial(plan, base, trials);
    }
    let ranges: Vec<_> = batches(trials).collect();
    let job = || ranges.par_iter().map(|r| count_errors(plan, base, r.clone())).sum();
    if workers == 0 {
        return job();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(job),
        Err(_) => job(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_batches(plan: &TrialPlan, base: &ChaCha8Rng, trials: u64, _workers: usize) -> u64 {
    run_batches_serial(plan, base, trials)
}

fn run_batches_serial(plan: &TrialPlan, base: &ChaCha8Rng, trials: u64) -> u64 {
    batches(trials).map(|r| count_errors(plan, base, r)).sum()
}

/// Fraction of misidentified pulses over `trials` equiprobable inputs.
///
/// `workers = 0` uses the ambient thread pool; `1` runs on the calling
/// thread. The result is identical for every worker count.
pub fn estimate_error(
    alphabet: &PskAlphabet,
    config: &ReceiverConfig,
    trials: u64,
    master_seed: u64,
    workers: usize,
) -> Result<ErrorEstimate> {
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    let plan = TrialPlan::new(alphabet, config)?;
    let base = ChaCha8Rng::seed_from_u64(master_seed);
    let errors = run_batches(&plan, &base, trials, workers);
    Ok(ErrorEstimate::from_counts(errors, trials, master_seed))
}

/// Serial reference path, always compiled; used by benchmarks and tests.
pub fn estimate_error_serial(
    alphabet: &PskAlphabet,
    config: &ReceiverConfig,
    trials: u64,
    master_seed: u64,
) -> Result<ErrorEstimate> {
    if trials == 0 {
        return invalid("at least one trial is required");
    }
    let plan = TrialPlan::new(alphabet, config)?;
    let base = ChaCha8Rng::seed_from_u64(master_seed);
    let errors = run_batches_serial(&plan, &base, trials);
    Ok(ErrorEstimate::from_counts(errors, trials, master_seed))
}
