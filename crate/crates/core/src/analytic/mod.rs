//! Exact photon-counting statistics for a detector whose rate switches at
//! every click, and the closed-form error of cyclic probing.

mod exppoly;

pub use exppoly::{unit_moment, ExpPolyMix, ExpPolyTerm, CONFLUENCE_TOL, PRUNE_TOL};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::signal::{displaced_rates, PskAlphabet, RateVector};

/// Default truncation tolerance for the click-number series.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Largest click count the cyclic series will expand to.
pub const MAX_SERIES_CLICKS: usize = 20_000;

/// Largest tolerated cancellation `Σ|terms| / |Σ terms|` in the closed-form
/// integral before falling back to uniformization.
const MAX_CANCELLATION: f64 = 1e3;

/// Detection rates indexed by the number of clicks already registered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSequence {
    rates: Vec<f64>,
}

impl RateSequence {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return invalid("rate sequence is empty");
        }
        if let Some(r) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return invalid(format!("rates must be finite and >= 0, got {r}"));
        }
        Ok(Self { rates })
    }

    /// `len` copies of a single rate.
    pub fn constant(rate: f64, len: usize) -> Result<Self> {
        Self::new(vec![rate; len])
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
}

fn ln_factorial(m: u64) -> f64 {
    libm::lgamma(m as f64 + 1.0)
}

/// `n^m e^{-n} / m!`, evaluated in log space.
pub fn poisson_pmf(n: f64, m: u64) -> Result<f64> {
    if !(n >= 0.0) || !n.is_finite() {
        return invalid(format!("mean must be finite and >= 0, got {n}"));
    }
    Ok(pmf(n, m))
}

fn pmf(n: f64, m: u64) -> f64 {
    if n == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    (m as f64 * n.ln() - n - ln_factorial(m)).exp()
}

/// `P(N ≥ k)` for `N ~ Poisson(n)`.
pub fn poisson_upper_tail(n: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if n == 0.0 {
        return 0.0;
    }
    if (k as f64) > n {
        // terms decrease monotonically past the mode
        let mut term = pmf(n, k);
        let mut sum = 0.0;
        let mut j = k;
        while term > 0.0 {
            sum += term;
            j += 1;
            term *= n / j as f64;
            if term < sum * 1e-18 {
                break;
            }
        }
        sum
    } else {
        let head: f64 = (0..k).map(|j| pmf(n, j)).sum();
        (1.0 - head).max(0.0)
    }
}

/// Density `n e^{-nt}` of the first click time.
pub fn click_density(n: f64, t: f64) -> Result<f64> {
    if !(n >= 0.0) {
        return invalid(format!("rate must be >= 0, got {n}"));
    }
    if !(0.0..=1.0).contains(&t) {
        return invalid(format!("time {t} outside [0, 1]"));
    }
    Ok(n * (-n * t).exp())
}

/// Density of the time of the `m`-th click (`m ≥ 1`) as a closed form.
pub fn click_time_density(seq: &RateSequence, m: usize) -> Result<ExpPolyMix> {
    if m == 0 || seq.len() < m {
        return invalid(format!(
            "density of click {m} needs {m} rates, sequence has {}",
            seq.len()
        ));
    }
    let r = seq.as_slice();
    let mut f = ExpPolyMix::exponential_density(r[0]);
    for &mu in &r[1..m] {
        f = f.convolve_exponential(mu);
    }
    Ok(f)
}

/// Probability of exactly `m` clicks in the unit pulse when the rate is
/// `seq[j]` after `j` clicks.
///
/// Evaluated in closed form; when rates are nearly but not exactly
/// confluent the partial-fraction coefficients cancel badly, and the value
/// is taken from [`click_count_distribution`] instead.
pub fn m_click_probability(seq: &RateSequence, m: usize) -> Result<f64> {
    if seq.len() < m + 1 {
        return invalid(format!(
            "probability of {m} clicks needs {} rates, sequence has {}",
            m + 1,
            seq.len()
        ));
    }
    let r = seq.as_slice();
    if m == 0 {
        return Ok((-r[0]).exp());
    }
    let tail_rate = r[m];
    // ∫_0^1 f_m(t) e^{-r_m (1-t)} dt = e^{-r_m} ∫_0^1 f_m(t) e^{r_m t} dt
    let g = click_time_density(seq, m)?.mul_exp(-tail_rate);
    let scale = (-tail_rate).exp();
    let value = scale * g.integral_unit();
    let spread = scale * g.integral_unit_abs();
    if value.is_finite() && value >= 0.0 && spread <= MAX_CANCELLATION * value.max(f64::MIN_POSITIVE) {
        return Ok(value.min(1.0));
    }
    Ok(click_count_distribution(seq, m)?[m])
}

/// `P(N = j)` for `j = 0..=max_clicks`, by uniformization of the
/// pure-birth chain `j → j+1` at rate `seq[j]`.
///
/// Every step is a convex combination, so the result carries no
/// cancellation error regardless of how close the rates are.
pub fn click_count_distribution(seq: &RateSequence, max_clicks: usize) -> Result<Vec<f64>> {
    if seq.len() < max_clicks + 1 {
        return invalid(format!(
            "distribution up to {max_clicks} clicks needs {} rates, sequence has {}",
            max_clicks + 1,
            seq.len()
        ));
    }
    let r = &seq.as_slice()[..=max_clicks];
    let big = r.iter().copied().fold(0.0, f64::max);
    let mut v = vec![0.0; max_clicks + 1];
    v[0] = 1.0;
    if big == 0.0 {
        return Ok(v);
    }
    let keep: Vec<f64> = r.iter().map(|x| 1.0 - x / big).collect();
    let jump: Vec<f64> = r.iter().map(|x| x / big).collect();
    let mut out = vec![0.0; max_clicks + 1];
    let mut n = 0u64;
    loop {
        let w = pmf(big, n);
        for (o, x) in out.iter_mut().zip(&v) {
            *o += w * x;
        }
        if n as f64 > big && w < 1e-20 {
            break;
        }
        for j in (0..=max_clicks).rev() {
            let inflow = if j > 0 { v[j - 1] * jump[j - 1] } else { 0.0 };
            v[j] = v[j] * keep[j] + inflow;
        }
        n += 1;
    }
    Ok(out)
}

/// Average error probability of cyclic probing, with a bound on the mass
/// dropped by truncating the click-number series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CyclicError {
    pub p_err: f64,
    /// `p_err` overestimates the exact value by at most this much.
    pub truncation_bound: f64,
    /// Largest click number included in the sums.
    pub max_clicks: usize,
}

/// Rate sequence seen by true state `k` under cyclic probing, for click
/// counts `0..len`.
pub fn cyclic_rate_sequence(
    alphabet: &PskAlphabet,
    beta: f64,
    k: usize,
    len: usize,
) -> Result<RateSequence> {
    alphabet.check_index(k)?;
    let m = alphabet.m();
    let table = (1..=m)
        .map(|p| displaced_rates(alphabet, p, beta))
        .collect::<Result<Vec<RateVector>>>()?;
    RateSequence::new((0..len).map(|j| table[j % m].get(k)).collect())
}

/// `1 - (1/M) Σ_k Σ_j P_{(k-1)+Mj}(α_k, β)`.
///
/// Click counts are stochastically dominated by a Poisson variable at the
/// brightest rate `(2α+β)²`, so the series stops at the first `J` whose
/// Poisson tail beyond `M·J` clicks is below `tail_tol`.
pub fn cyclic_error_probability(alphabet: &PskAlphabet, beta: f64, tail_tol: f64) -> Result<CyclicError> {
    if !(tail_tol > 0.0 && tail_tol <= 1e-3) {
        return invalid(format!("tail tolerance must be in (0, 1e-3], got {tail_tol}"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return invalid(format!("displacement amplitude must be finite and >= 0, got {beta}"));
    }
    let m = alphabet.m();
    let n_max = (2.0 * alphabet.alpha() + beta).powi(2);
    if poisson_upper_tail(n_max, MAX_SERIES_CLICKS as u64) >= tail_tol {
        return Err(Error::Precision(format!(
            "click-count series exceeds {MAX_SERIES_CLICKS} terms at mean {n_max}"
        )));
    }
    // The tail past the mode is never below tol, so start the search there.
    let mut blocks = ((n_max / m as f64).floor() as usize).max(1);
    while poisson_upper_tail(n_max, (m * blocks) as u64) >= tail_tol {
        blocks += 1;
    }
    let max_clicks = m * blocks - 1;
    let mut correct = 0.0;
    for k in 1..=m {
        let seq = cyclic_rate_sequence(alphabet, beta, k, max_clicks + 1)?;
        let dist = click_count_distribution(&seq, max_clicks)?;
        correct += dist.iter().skip(k - 1).step_by(m).sum::<f64>();
    }
    Ok(CyclicError {
        p_err: (1.0 - correct / m as f64).clamp(0.0, 1.0),
        truncation_bound: poisson_upper_tail(n_max, (m * blocks) as u64),
        max_clicks,
    })
}

/// Binary on-off receiver: state 1 displaced `β` past the vacuum, state 2
/// to `2α + β`; a click votes for state 2.
///
/// `½[(1 - e^{-β²}) + e^{-(2α+β)²}]` for equal priors.
pub fn kennedy_error_probability(alpha: f64, beta: f64) -> f64 {
    debug_assert!(alpha >= 0.0 && beta >= 0.0);
    0.5 * ((-(-beta * beta).exp_m1()) + (-(2.0 * alpha + beta).powi(2)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pmf_examples() {
        assert_abs_diff_eq!(poisson_pmf(1.0, 1).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        assert_eq!(poisson_pmf(0.0, 0).unwrap(), 1.0);
        assert_eq!(poisson_pmf(0.0, 3).unwrap(), 0.0);
        assert_abs_diff_eq!(poisson_pmf(1.0, 2).unwrap(), 0.183940, epsilon = 1e-6);
        assert!(poisson_pmf(-1.0, 0).is_err());
        // stays finite far out
        let p = poisson_pmf(50.0, 100).unwrap();
        assert!(p > 0.0 && p < 1e-8);
    }

    #[test]
    fn upper_tail_consistency() {
        for n in [0.3, 2.0, 9.0] {
            for k in 0..30u64 {
                let direct = 1.0 - (0..k).map(|j| pmf(n, j)).sum::<f64>();
                assert!((poisson_upper_tail(n, k) - direct).abs() < 1e-13);
            }
        }
        assert_eq!(poisson_upper_tail(0.0, 1), 0.0);
    }

    #[test]
    fn click_density_examples() {
        assert_eq!(click_density(3.0, 0.0).unwrap(), 3.0);
        assert_eq!(click_density(0.0, 0.4).unwrap(), 0.0);
        assert_abs_diff_eq!(click_density(2.0, 0.5).unwrap(), 0.735759, epsilon = 1e-6);
        assert!(click_density(1.0, 1.5).is_err());
        assert!(click_density(1.0, -0.1).is_err());
    }

    #[test]
    fn m_click_examples() {
        let seq = RateSequence::new(vec![1.0, 2.0]).unwrap();
        let e = 1f64.exp();
        assert_abs_diff_eq!(m_click_probability(&seq, 1).unwrap(), (-2.0f64).exp() * (e - 1.0), epsilon = 1e-14);
        assert_abs_diff_eq!(m_click_probability(&seq, 0).unwrap(), (-1.0f64).exp(), epsilon = 1e-15);
        let rev = RateSequence::new(vec![2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(
            m_click_probability(&rev, 1).unwrap(),
            2.0 * (-1.0f64).exp() * (1.0 - (-1.0f64).exp()),
            epsilon = 1e-14
        );
        assert!(m_click_probability(&seq, 2).is_err());
    }

    #[test]
    fn near_confluent_rates_stay_accurate() {
        // rates differing by 1e-6 relative: partial fractions would cancel
        let seq = RateSequence::new((0..12).map(|j| 1.0 + 1e-6 * (j % 3) as f64).collect()).unwrap();
        let flat = RateSequence::constant(1.0, 12).unwrap();
        for m in 0..12 {
            let a = m_click_probability(&seq, m).unwrap();
            let b = m_click_probability(&flat, m).unwrap();
            assert!((a - b).abs() < 1e-5 * b + 1e-15, "m={m}: {a} vs {b}");
        }
    }

    #[test]
    fn uniformization_matches_closed_form() {
        let seq = RateSequence::new(vec![0.2, 3.1, 1.7, 0.2, 3.1, 1.7, 0.9]).unwrap();
        let dist = click_count_distribution(&seq, 6).unwrap();
        for (m, p) in dist.iter().enumerate() {
            assert_abs_diff_eq!(*p, m_click_probability(&seq, m).unwrap(), epsilon = 1e-13);
        }
    }

    #[test]
    fn cyclic_vacuum_is_guessing() {
        for m in [2, 4, 8] {
            let a = PskAlphabet::new(m, 0.0).unwrap();
            for beta in [0.0, 0.4, 1.1] {
                let e = cyclic_error_probability(&a, beta, DEFAULT_TAIL_TOL).unwrap();
                assert_abs_diff_eq!(e.p_err, 1.0 - 1.0 / m as f64, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cyclic_argument_checks() {
        let a = PskAlphabet::new(4, 1.0).unwrap();
        assert!(cyclic_error_probability(&a, 0.1, 0.0).is_err());
        assert!(cyclic_error_probability(&a, 0.1, 1e-2).is_err());
        assert!(cyclic_error_probability(&a, -0.1, 1e-12).is_err());
    }

    #[test]
    fn kennedy_examples() {
        for a2 in [0.05, 0.3, 1.0] {
            let a: f64 = f64::sqrt(a2);
            assert_abs_diff_eq!(kennedy_error_probability(a, 0.0), 0.5 * (-4.0 * a2).exp(), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(kennedy_error_probability(0.0, 0.8), 0.5, epsilon = 1e-15);
        let a = 0.1f64.sqrt();
        let best = (1..400)
            .map(|i| kennedy_error_probability(a, i as f64 * 0.005))
            .fold(f64::INFINITY, f64::min);
        assert!(best < kennedy_error_probability(a, 0.0) - 1e-3);
    }
}
