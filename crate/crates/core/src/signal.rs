//! PSK constellation geometry and the photon rates seen by the on-off
//! detector after the receiver's displacement.
//!
//! The receiver probes state `p` by rotating the alphabet and displacing so
//! that `α e^{iθ_p}` lands at amplitude `-β e^{iθ_p}`, i.e. past the vacuum by
//! `β`. The displacement field is therefore `d_p = -(α + β) e^{iθ_p}` and the
//! rate for true state `k` is `|α e^{iθ_k} + d_p|²`. For QPSK with probe 1
//! this gives
//!
//! ```text
//! n_1 = β²,  n_2 = n_4 = (α + β)² + α²,  n_3 = (2α + β)²
//! ```
//!
//! The opposite sign (`+β`, stopping short of the vacuum) would give
//! `n_2 = (α - β)² + α²`, so it is not used.
//!
//! Pulses have unit duration; every rate is a mean photon number per pulse.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Index of a signal state, 1-based to match the usual `|α_1⟩ … |α_M⟩` labels.
pub type StateIndex = usize;

/// A symmetric M-ary PSK alphabet `{|α e^{iθ_k}⟩}` with `θ_k = 2π(k-1)/M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PskAlphabet {
    m: usize,
    alpha: f64,
}

impl PskAlphabet {
    pub fn new(m: usize, alpha: f64) -> Result<Self> {
        if m < 2 {
            return invalid(format!("alphabet needs at least 2 states, got {m}"));
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return invalid(format!("signal amplitude must be finite and >= 0, got {alpha}"));
        }
        Ok(Self { m, alpha })
    }

    /// Builds the alphabet from the mean photon number `|α|²`.
    pub fn from_mean_photons(m: usize, alpha_sq: f64) -> Result<Self> {
        if !(alpha_sq >= 0.0) {
            return invalid(format!("mean photon number must be >= 0, got {alpha_sq}"));
        }
        Self::new(m, alpha_sq.sqrt())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mean_photons(&self) -> f64 {
        self.alpha * self.alpha
    }

    /// Phase of state `k` (1-based) in radians.
    pub fn phase(&self, k: StateIndex) -> f64 {
        2.0 * PI * (k - 1) as f64 / self.m as f64
    }

    pub fn phases(&self) -> Vec<f64> {
        (1..=self.m).map(|k| self.phase(k)).collect()
    }

    /// Complex amplitude `α e^{iθ_k}`.
    pub fn amplitude(&self, k: StateIndex) -> ComplexField {
        ComplexField::from(Complex64::from_polar(self.alpha, self.phase(k)))
    }

    pub fn check_index(&self, k: StateIndex) -> Result<()> {
        if k == 0 || k > self.m {
            return invalid(format!("state index {k} outside 1..={}", self.m));
        }
        Ok(())
    }

    /// Number of `2π/M` phase steps from `from` to `to`, in `0..M`.
    pub fn steps_between(&self, from: StateIndex, to: StateIndex) -> usize {
        (to + self.m - from) % self.m
    }
}

/// A point in optical phase space, in field-amplitude units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub re: f64,
    pub im: f64,
}

impl ComplexField {
    pub const ZERO: ComplexField = ComplexField { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Mean photon number of a coherent state with this amplitude.
    pub fn power(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

impl From<Complex64> for ComplexField {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexField> for Complex64 {
    fn from(z: ComplexField) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Per-state mean photon numbers under one probe configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateVector {
    rates: Vec<f64>,
}

impl RateVector {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return invalid("rate vector is empty");
        }
        if let Some(r) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return invalid(format!("rates must be finite and >= 0, got {r}"));
        }
        Ok(Self { rates })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    /// Rate of state `k` (1-based).
    pub fn get(&self, k: StateIndex) -> f64 {
        self.rates[k - 1]
    }

    pub fn max(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }

    /// Applies detector efficiency and adds a dark-count rate: `η·n + n_dc`.
    pub fn detected(&self, eta: f64, dark_rate: f64) -> RateVector {
        RateVector {
            rates: self.rates.iter().map(|n| eta * n + dark_rate).collect(),
        }
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.rates
    }
}

/// The receiver's displacement field while probing state `probe`.
pub fn probe_field(alphabet: &PskAlphabet, probe: StateIndex, beta: f64) -> ComplexField {
    ComplexField::from(-Complex64::from_polar(alphabet.alpha() + beta, alphabet.phase(probe)))
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return invalid(format!("displacement amplitude must be finite and >= 0, got {beta}"));
    }
    Ok(())
}

/// Mean photon numbers of all displaced signal states while `probe` is probed.
///
/// Computed from the relative phase `min(d, M-d)·2π/M` with `d = (k-probe) mod M`,
/// so mirror-image states get bit-identical rates.
pub fn displaced_rates(alphabet: &PskAlphabet, probe: StateIndex, beta: f64) -> Result<RateVector> {
    alphabet.check_index(probe)?;
    check_beta(beta)?;
    let m = alphabet.m();
    let a = alphabet.alpha();
    let rates = (1..=m)
        .map(|k| {
            let d = alphabet.steps_between(probe, k);
            let phi = 2.0 * PI * d.min(m - d) as f64 / m as f64;
            let re = a * phi.cos() - a - beta;
            let im = a * phi.sin();
            re * re + im * im
        })
        .collect();
    Ok(RateVector { rates })
}

/// Rates when every signal state is shifted by a common noise `offset`.
pub fn noisy_rates(
    alphabet: &PskAlphabet,
    probe: StateIndex,
    beta: f64,
    offset: ComplexField,
) -> Result<RateVector> {
    alphabet.check_index(probe)?;
    check_beta(beta)?;
    if offset == ComplexField::ZERO {
        return displaced_rates(alphabet, probe, beta);
    }
    let d = probe_field(alphabet, probe, beta);
    let rates = (1..=alphabet.m())
        .map(|k| noisy_rate(alphabet, k, d, offset))
        .collect();
    Ok(RateVector { rates })
}

/// Rate of a single true state given a probe field and noise offset.
#[inline]
pub(crate) fn noisy_rate(
    alphabet: &PskAlphabet,
    k: StateIndex,
    probe_field: ComplexField,
    offset: ComplexField,
) -> f64 {
    let s = alphabet.amplitude(k);
    ComplexField::new(s.re + offset.re + probe_field.re, s.im + offset.im + probe_field.im).power()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn brute_rate(m: usize, alpha: f64, beta: f64, probe: usize, k: usize, eps: Complex64) -> f64 {
        let th = |j: usize| 2.0 * PI * (j - 1) as f64 / m as f64;
        let z = Complex64::from_polar(alpha, th(k)) + eps - Complex64::from_polar(alpha + beta, th(probe));
        z.norm_sqr()
    }

    #[test]
    fn qpsk_rates_match_closed_forms() {
        let a = PskAlphabet::from_mean_photons(4, 0.5).unwrap();
        let beta = 0.23f64.sqrt();
        let r = displaced_rates(&a, 1, beta).unwrap();
        let al = 0.5f64.sqrt();
        let n2 = (al + beta).powi(2) + al * al;
        let n3 = (2.0 * al + beta).powi(2);
        assert_abs_diff_eq!(r.get(1), 0.23, epsilon = 1e-14);
        assert_abs_diff_eq!(r.get(2), n2, epsilon = 1e-13);
        assert_abs_diff_eq!(r.get(3), n3, epsilon = 1e-13);
        assert_eq!(r.get(2), r.get(4));
        // four-digit values quoted for this configuration
        for (got, want) in r.as_slice().iter().zip([0.23, 1.9082, 3.5865, 1.9082]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-4);
        }
    }

    #[test]
    fn exact_nulling_qpsk() {
        let a = PskAlphabet::from_mean_photons(4, 0.5).unwrap();
        let r = displaced_rates(&a, 1, 0.0).unwrap();
        for (got, want) in r.as_slice().iter().zip([0.0, 1.0, 2.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn vacuum_signal_gives_flat_rates() {
        for m in 2..9 {
            let a = PskAlphabet::new(m, 0.0).unwrap();
            for p in 1..=m {
                let r = displaced_rates(&a, p, 0.7).unwrap();
                assert!(r.as_slice().iter().all(|x| (x - 0.49).abs() < 1e-14));
            }
        }
    }

    #[test]
    fn noisy_rates_examples() {
        let a = PskAlphabet::from_mean_photons(4, 0.5).unwrap();
        assert_eq!(
            noisy_rates(&a, 2, 0.4, ComplexField::ZERO).unwrap(),
            displaced_rates(&a, 2, 0.4).unwrap()
        );
        let vac = PskAlphabet::new(4, 0.0).unwrap();
        let r = noisy_rates(&vac, 1, 0.0, ComplexField::new(1.0, 0.0)).unwrap();
        assert!(r.as_slice().iter().all(|x| (x - 1.0).abs() < 1e-15));
        let bpsk = PskAlphabet::new(2, 1.0).unwrap();
        let r = noisy_rates(&bpsk, 1, 0.0, ComplexField::new(0.1, 0.0)).unwrap();
        assert_abs_diff_eq!(r.get(1), 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(r.get(2), 3.61, epsilon = 1e-12);
    }

    #[test]
    fn argument_errors() {
        assert!(PskAlphabet::new(1, 1.0).is_err());
        assert!(PskAlphabet::new(4, -0.1).is_err());
        let a = PskAlphabet::new(4, 1.0).unwrap();
        assert!(displaced_rates(&a, 0, 0.1).is_err());
        assert!(displaced_rates(&a, 5, 0.1).is_err());
        assert!(displaced_rates(&a, 1, -0.1).is_err());
    }

    #[test]
    fn phases_are_increasing_from_zero() {
        let a = PskAlphabet::new(8, 1.0).unwrap();
        let ph = a.phases();
        assert_eq!(ph.len(), 8);
        assert_eq!(ph[0], 0.0);
        assert!(ph.windows(2).all(|w| w[0] < w[1]));
        assert!(*ph.last().unwrap() < 2.0 * PI);
    }

    proptest::proptest! {
        #[test]
        fn rate_geometry(m in 2usize..10, alpha in 0.0f64..3.0, beta in 0.0f64..2.0, probe_seed in 0usize..100) {
            let a = PskAlphabet::new(m, alpha).unwrap();
            let p = 1 + probe_seed % m;
            let r = displaced_rates(&a, p, beta).unwrap();
            proptest::prop_assert!((r.get(p) - beta * beta).abs() <= 1e-12 * (1.0 + beta * beta));
            for j in 0..m {
                let up = 1 + (p - 1 + j) % m;
                let down = 1 + (p - 1 + m - j) % m;
                proptest::prop_assert_eq!(r.get(up), r.get(down));
                let bf = brute_rate(m, alpha, beta, p, up, Complex64::new(0.0, 0.0));
                proptest::prop_assert!((r.get(up) - bf).abs() <= 1e-11 * (1.0 + bf));
                // rotation invariance
                let r1 = displaced_rates(&a, 1, beta).unwrap();
                proptest::prop_assert_eq!(r.get(up), r1.get(1 + j));
            }
            proptest::prop_assert!(r.max() <= (2.0 * alpha + beta).powi(2) * (1.0 + 1e-12) + 1e-15);
            if m % 2 == 0 {
                let opp = 1 + (p - 1 + m / 2) % m;
                proptest::prop_assert!((r.get(opp) - (2.0 * alpha + beta).powi(2)).abs() < 1e-11);
            }
        }
    }
}
