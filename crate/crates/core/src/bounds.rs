//! Reference error probabilities: the Helstrom bound for symmetric PSK and
//! the heterodyne standard quantum limit.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analytic::poisson_upper_tail;
use crate::error::{invalid, Error, Result};
use crate::quad;

/// Absolute accuracy of the heterodyne quadrature.
pub const SQL_TOL: f64 = 1e-10;

fn check(alpha: f64, m: usize) -> Result<()> {
    if m < 2 {
        return invalid(format!("alphabet needs at least 2 states, got {m}"));
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return invalid(format!("amplitude must be finite and >= 0, got {alpha}"));
    }
    Ok(())
}

/// Minimum error for `M` equiprobable coherent states `|α e^{2πik/M}⟩`.
///
/// The Gram matrix is circulant with first row
/// `γ_j = exp(-|α|²(1 - e^{2πij/M}))`, and the square-root measurement gives
/// `P = 1 - (Σ_k √λ_k)² / M²` over its eigenvalues `λ_k`.
pub fn helstrom_mpsk(alpha: f64, m: usize) -> Result<f64> {
    check(alpha, m)?;
    let mf = m as f64;
    let root_sum: f64 = circulant_eigenvalues(alpha, m).iter().map(|l| l.sqrt()).sum();
    Ok((1.0 - root_sum * root_sum / (mf * mf)).clamp(0.0, 1.0 - 1.0 / mf))
}

/// Eigenvalues of the PSK Gram matrix, i.e. the DFT of `γ`.
///
/// Expanding `γ_j` in powers of `|α|²` collapses the DFT to
/// `λ_k = M e^{-|α|²} Σ_{n ≡ k (mod M)} |α|^{2n}/n!`, a sum of positive
/// terms. Small eigenvalues keep full relative precision, which the
/// floating-point DFT does not (its absolute error ~1e-16 turns into
/// ~1e-8 after the square root).
pub fn circulant_eigenvalues(alpha: f64, m: usize) -> Vec<f64> {
    let a2 = alpha * alpha;
    let mut buckets = vec![0.0; m];
    if a2 == 0.0 {
        buckets[0] = m as f64;
        return buckets;
    }
    // Poisson weights relative to the mode, by ratio recurrence in both
    // directions; the common scale drops out on normalization.
    let mode = a2.floor() as usize;
    let cutoff = f64::EPSILON * 1e-3;
    buckets[mode % m] += 1.0;
    let mut w = 1.0;
    for n in (mode + 1).. {
        w *= a2 / n as f64;
        if w < cutoff {
            break;
        }
        buckets[n % m] += w;
    }
    w = 1.0;
    for n in (0..mode).rev() {
        w *= (n + 1) as f64 / a2;
        if w < cutoff {
            break;
        }
        buckets[n % m] += w;
    }
    let total: f64 = buckets.iter().sum();
    buckets.iter().map(|b| m as f64 * b / total).collect()
}

/// Eigenvalues of the circulant Gram matrix by direct DFT of its first row.
pub fn circulant_eigenvalues_dft(alpha: f64, m: usize) -> Vec<f64> {
    let a2 = alpha * alpha;
    let mf = m as f64;
    let gamma: Vec<Complex64> = (0..m)
        .map(|j| {
            let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / mf);
            (-(Complex64::new(1.0, 0.0) - w) * a2).exp()
        })
        .collect();
    (0..m)
        .map(|k| {
            let lambda: Complex64 = gamma
                .iter()
                .enumerate()
                .map(|(j, g)| g * Complex64::from_polar(1.0, -2.0 * PI * ((j * k) % m) as f64 / mf))
                .sum();
            // PSD up to rounding
            if lambda.re > -1e-12 { lambda.re.max(0.0) } else { lambda.re }
        })
        .collect()
}

/// Square-root-measurement error computed from explicit Fock-space state
/// vectors truncated at `dim` photons, independent of the circulant formula.
pub fn gram_srm_oracle(alpha: f64, m: usize, dim: usize) -> Result<f64> {
    check(alpha, m)?;
    let a2 = alpha * alpha;
    let tail = poisson_upper_tail(4.0 * a2, dim as u64);
    if tail >= 1e-12 {
        return Err(Error::Precision(format!(
            "Fock truncation at {dim} leaves {tail:e} of the photon distribution"
        )));
    }
    let states = DMatrix::<Complex64>::from_fn(dim, m, |n, k| {
        let z = Complex64::from_polar(alpha, 2.0 * PI * k as f64 / m as f64);
        // e^{-|α|²/2} z^n / √n!
        let log_norm = -0.5 * a2 - 0.5 * libm::lgamma(n as f64 + 1.0);
        z.powu(n as u32) * log_norm.exp()
    });
    let gram = states.adjoint() * &states;
    let eig = gram.symmetric_eigen();
    // eigenvalues at rounding level are zero; their square roots would not be
    let floor = 1e-13 * eig.eigenvalues.max();
    let roots = DMatrix::<Complex64>::from_diagonal(
        &eig.eigenvalues.map(|l| Complex64::new(if l > floor { l.sqrt() } else { 0.0 }, 0.0)),
    );
    let sqrt_gram = &eig.eigenvectors * roots * eig.eigenvectors.adjoint();
    let success: f64 = (0..m).map(|k| sqrt_gram[(k, k)].norm_sqr()).sum::<f64>() / m as f64;
    Ok((1.0 - success).max(0.0))
}

/// Error of ideal heterodyne detection with the phase-wedge decision.
///
/// The outcome density is `(1/π) e^{-|z-α|²}`. In polar coordinates the
/// radial integral over the wedge `|φ| < π/M` is closed-form, leaving
/// `P_c = e^{-|α|²}/M + (α/√π) ∫_0^{π/M} cos φ e^{-α² sin² φ}(1 + erf(α cos φ)) dφ`.
pub fn sql_heterodyne(alpha: f64, m: usize) -> Result<f64> {
    check(alpha, m)?;
    let mf = m as f64;
    if alpha == 0.0 {
        return Ok(1.0 - 1.0 / mf);
    }
    let a2 = alpha * alpha;
    let angular = quad::integrate(
        |phi| {
            let c = phi.cos();
            let s = phi.sin();
            c * (-a2 * s * s).exp() * (1.0 + libm::erf(alpha * c))
        },
        0.0,
        angular_limit(alpha, mf),
        SQL_TOL * 1e-2 / (alpha / PI.sqrt()).max(1.0),
    )?;
    let correct = (-a2).exp() / mf + alpha / PI.sqrt() * angular;
    Ok((1.0 - correct).clamp(0.0, 1.0 - 1.0 / mf))
}

/// Beyond `α sin φ = 40` the integrand is below `e^{-1600}`; cutting there
/// keeps the quadrature on the peak at large amplitudes.
fn angular_limit(alpha: f64, mf: f64) -> f64 {
    let wedge = PI / mf;
    if alpha * wedge.sin() > 40.0 {
        (40.0 / alpha).asin()
    } else {
        wedge
    }
}

/// Heterodyne error when the signal carries Gaussian excess noise of `n_th`
/// mean photons. The outcome stays Gaussian with variance `(1 + n_th)/2`
/// per quadrature, which is the noiseless case at amplitude `α/√(1+n_th)`.
pub fn sql_heterodyne_noisy(alpha: f64, m: usize, n_th: f64) -> Result<f64> {
    if !(n_th >= 0.0) {
        return invalid(format!("thermal photon number must be >= 0, got {n_th}"));
    }
    sql_heterodyne(alpha / (1.0 + n_th).sqrt(), m)
}

/// Sampling estimate of heterodyne error: draws outcomes for state 1 and
/// counts those outside the wedge `|arg z| < π/M`. Returns `(p, std_err)`.
pub fn sql_heterodyne_sampled<R: Rng + ?Sized>(
    alpha: f64,
    m: usize,
    n_th: f64,
    samples: u64,
    rng: &mut R,
) -> Result<(f64, f64)> {
    check(alpha, m)?;
    let sigma = (0.5 * (1.0 + n_th)).sqrt();
    let half = PI / m as f64;
    let mut wrong = 0u64;
    for _ in 0..samples {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        let z = Complex64::new(alpha + sigma * x, sigma * y);
        if z.arg().abs() >= half {
            wrong += 1;
        }
    }
    let p = wrong as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Helstrom,
    Sql,
}

/// A reference curve over a grid of mean photon numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCurve {
    pub kind: BoundKind,
    pub m: usize,
    /// `(|α|², P_err)` pairs.
    pub points: Vec<(f64, f64)>,
}

impl BenchmarkCurve {
    pub fn compute(kind: BoundKind, m: usize, powers: &[f64]) -> Result<Self> {
        let points = powers
            .iter()
            .map(|&n| {
                if !(n >= 0.0) {
                    return invalid(format!("mean photon number must be >= 0, got {n}"));
                }
                let a = n.sqrt();
                let p = match kind {
                    BoundKind::Helstrom => helstrom_mpsk(a, m)?,
                    BoundKind::Sql => sql_heterodyne(a, m)?,
                };
                Ok((n, p))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, m, points })
    }
}
