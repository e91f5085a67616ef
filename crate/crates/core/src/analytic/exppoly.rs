//! Finite sums `Σ c·t^p·e^{-λt}` on `t ∈ [0, 1]`.
//!
//! Click-time densities of a counter whose rate jumps at every click stay in
//! this family: convolving with an exponential waiting time and multiplying
//! by a survival factor both map sums of such terms to sums of such terms.

/// Rates closer than this (relative) are treated as one rate.
pub const CONFLUENCE_TOL: f64 = 1e-9;

/// Terms with `|c|·max(1, e^{-λ})` below this are dropped.
pub const PRUNE_TOL: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPolyTerm {
    pub coeff: f64,
    pub power: u32,
    pub rate: f64,
}

impl ExpPolyTerm {
    pub fn eval(&self, t: f64) -> f64 {
        self.coeff * t.powi(self.power as i32) * (-self.rate * t).exp()
    }

    /// `∫_0^1 c·t^p·e^{-λt} dt`.
    pub fn integral_unit(&self) -> f64 {
        self.coeff * unit_moment(self.power, self.rate)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpPolyMix {
    terms: Vec<ExpPolyTerm>,
}

pub(crate) fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= CONFLUENCE_TOL * a.abs().max(b.abs())
}

impl ExpPolyMix {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The exponential density `λ e^{-λt}`.
    pub fn exponential_density(rate: f64) -> Self {
        let mut mix = Self::zero();
        mix.push(ExpPolyTerm { coeff: rate, power: 0, rate });
        mix
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ExpPolyTerm>) -> Self {
        let mut mix = Self::zero();
        for t in terms {
            mix.push(t);
        }
        mix
    }

    pub fn terms(&self) -> &[ExpPolyTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds a term, folding it into an existing one with the same power and
    /// (confluent) rate.
    pub fn push(&mut self, term: ExpPolyTerm) {
        if term.coeff == 0.0 {
            return;
        }
        match self
            .terms
            .iter_mut()
            .find(|t| t.power == term.power && same_rate(t.rate, term.rate))
        {
            Some(t) => t.coeff += term.coeff,
            None => self.terms.push(term),
        }
    }

    fn prune(&mut self) {
        self.terms
            .retain(|t| t.coeff.abs() * (-t.rate).exp().max(1.0) >= PRUNE_TOL);
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    pub fn integral_unit(&self) -> f64 {
        self.terms.iter().map(ExpPolyTerm::integral_unit).sum()
    }

    /// `Σ |∫ term|`; compared against `|integral_unit()|` this measures
    /// cancellation in the integral.
    pub fn integral_unit_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.integral_unit().abs()).sum()
    }

    /// Multiplies by `e^{-λt}`.
    pub fn mul_exp(&self, rate: f64) -> Self {
        let mut out = Self::zero();
        for t in &self.terms {
            out.push(ExpPolyTerm { rate: t.rate + rate, ..*t });
        }
        out.prune();
        out
    }

    /// `(f * g)(t) = ∫_0^t f(s)·μ e^{-μ(t-s)} ds`.
    ///
    /// For `d = λ - μ ≠ 0`:
    /// `∫_0^t s^p e^{-λs} μ e^{-μ(t-s)} ds
    ///   = μ p!/d^{p+1} [e^{-μt} - e^{-λt} Σ_{i≤p} (dt)^i/i!]`;
    /// for confluent rates the kernel is `μ t^{p+1}/(p+1) e^{-μt}`.
    pub fn convolve_exponential(&self, mu: f64) -> Self {
        let mut out = Self::zero();
        for t in &self.terms {
            let p = t.power;
            if same_rate(t.rate, mu) {
                out.push(ExpPolyTerm {
                    coeff: t.coeff * mu / (p + 1) as f64,
                    power: p + 1,
                    rate: t.rate,
                });
                continue;
            }
            let d = t.rate - mu;
            // μ p! / d^{p+1}
            let mut lead = t.coeff * mu / d;
            for i in 1..=p {
                lead *= i as f64 / d;
            }
            out.push(ExpPolyTerm { coeff: lead, power: 0, rate: mu });
            // -lead · d^i / i!
            let mut c = -lead;
            for i in 0..=p {
                if i > 0 {
                    c *= d / i as f64;
                }
                out.push(ExpPolyTerm { coeff: c, power: i, rate: t.rate });
            }
        }
        out.prune();
        out
    }
}

/// `∫_0^1 t^p e^{-dt} dt` for any real `d`, summed with positive terms only.
pub fn unit_moment(p: u32, d: f64) -> f64 {
    let a = (p + 1) as f64;
    if d == 0.0 {
        return 1.0 / a;
    }
    let mut sum = 0.0;
    if d > 0.0 {
        // γ(a, d)/d^a = e^{-d} Σ_k d^k / (a (a+1) … (a+k))
        let mut term = 1.0 / a;
        let mut k = 0.0;
        loop {
            sum += term;
            k += 1.0;
            term *= d / (a + k);
            if term <= sum * 1e-17 {
                break;
            }
        }
        sum * (-d).exp()
    } else {
        // Σ_k |d|^k / (k! (p+k+1))
        let x = -d;
        let mut fact = 1.0;
        let mut k = 0.0;
        loop {
            let term = fact / (a + k);
            sum += term;
            k += 1.0;
            fact *= x / k;
            if fact / (a + k) <= sum * 1e-17 {
                break;
            }
        }
        sum
    }
}
