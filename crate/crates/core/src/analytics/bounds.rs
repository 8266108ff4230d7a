//! Closed-form quantities of the regret analysis for a fixed environment.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::mathcore::lambert_w0;

const BISECTION_MAX_ITER: usize = 200;
const BISECTION_TOL: f64 = 1e-12;

/// `C(τ₀)` and `D(τ₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cd {
    pub c: f64,
    pub d: f64,
}

/// `C = (2/τ₀)√(τ₀/2 + ln 2) + (2 ln 2 + 1)/τ₀ + 3`,
/// `D = (8/τ₀)(1 + √(τ₀(2C + ¼)/2))²`.
pub fn compute_cd(tau0: f64) -> Result<Cd> {
    if !(tau0 > 0.0) || !tau0.is_finite() {
        return Err(Error::Domain(format!("tau0 must be positive, got {tau0}")));
    }
    let c = 2.0 / tau0 * (0.5 * tau0 + LN_2).sqrt() + (2.0 * LN_2 + 1.0) / tau0 + 3.0;
    let d = 8.0 / tau0 * (1.0 + (0.5 * tau0 * (2.0 * c + 0.25)).sqrt()).powi(2);
    Ok(Cd { c, d })
}

/// `M_k = CΔ²` when `Δ > 1`, else `C`.
pub fn compute_mk(c: f64, delta: f64) -> Result<f64> {
    if !(c > 0.0) || !(delta > 0.0) {
        return Err(Error::Domain(format!("need C > 0 and delta > 0, got ({c}, {delta})")));
    }
    Ok(if delta > 1.0 { c * delta * delta } else { c })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoverningSolution {
    pub zeta: f64,
    pub eps: f64,
    pub rho: f64,
    /// `ln(1/ρ) = ½ ln(1 + ζ²/M)`, kept separately because `ρ` rounds to 1
    /// for small gaps.
    pub log_inv_rho: f64,
}

impl GoverningSolution {
    /// `ρ/(1 − ρ)` evaluated without cancellation.
    pub fn rho_odds(&self) -> f64 {
        1.0 / self.log_inv_rho.exp_m1()
    }

    pub fn inv_log_inv_rho(&self) -> f64 {
        1.0 / self.log_inv_rho
    }
}

fn governing_residual(zeta: f64, tau0: f64, m: f64, delta: f64) -> f64 {
    zeta + ((zeta * zeta / m).ln_1p() / tau0).sqrt() - 0.5 * delta
}

/// Root `ζ ∈ (0, Δ/2)` of `ζ + √(ln(1 + ζ²/M)/τ₀) = Δ/2`, by bisection.
pub fn solve_governing(tau0: f64, m: f64, delta: f64) -> Result<GoverningSolution> {
    for (name, v) in [("tau0", tau0), ("M", m), ("delta", delta)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    let (mut lo, mut hi) = (0.0, 0.5 * delta);
    let (g_lo, g_hi) = (governing_residual(lo, tau0, m, delta), governing_residual(hi, tau0, m, delta));
    if !(g_lo < 0.0 && g_hi > 0.0) {
        return Err(Error::Internal(format!("governing equation bracket failed: g(0)={g_lo}, g(Δ/2)={g_hi}")));
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if governing_residual(mid, tau0, m, delta) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECTION_TOL * f64::EPSILON.max(hi) && governing_residual(lo, tau0, m, delta).abs() <= BISECTION_TOL {
            break;
        }
    }
    let zeta = if governing_residual(lo, tau0, m, delta).abs() <= governing_residual(hi, tau0, m, delta).abs() {
        lo
    } else {
        hi
    };
    let log1p = (zeta * zeta / m).ln_1p();
    Ok(GoverningSolution {
        zeta,
        eps: 0.5 * delta - zeta,
        rho: (-0.5 * log1p).exp(),
        log_inv_rho: 0.5 * log1p,
    })
}

/// Upper bound on `E[n_k(T) | θ]·Δ_k`:
/// `(7D/2)(Δ + 1/Δ) + 2D(Δ ln D + (1/Δ) ln(D/Δ²)) + 9Δ`.
pub fn main_lemma_bound(d: f64, delta: f64) -> Result<f64> {
    if !(d > 1.0) {
        return Err(Error::Domain(format!("D must exceed 1, got {d}")));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("delta must be positive, got {delta}")));
    }
    let inv = 1.0 / delta;
    Ok(3.5 * d * (delta + inv) + 2.0 * d * (d.ln() * delta + inv * (d / (delta * delta)).ln()) + 9.0 * delta)
}

/// Upper bound on `E[n_k(T)]` in terms of `ρ_k`, valid for `T ≥ 2`.
pub fn countrho_bound(rho: f64, horizon: u64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("rho must lie in (0, 1), got {rho}")));
    }
    if horizon < 2 {
        return Err(Error::Domain(format!("horizon must be at least 2, got {horizon}")));
    }
    let log_rho = rho.ln();
    let tail = (horizon - 1) as f64 * log_rho;
    let rho_t = tail.exp(); // ρ^{T−1}
    let one_minus_rho_t = -tail.exp_m1();
    let one_minus_rho = 1.0 - rho;
    let head = rho * (2.0 / one_minus_rho - 1.0 / (2.0 - rho));
    let ratio = (2.0 - rho) * one_minus_rho_t * one_minus_rho_t / (one_minus_rho * one_minus_rho * (2.0 - rho_t));
    let middle = ratio.ln() / -log_rho;
    let geometric = 3.0 * rho * one_minus_rho_t / (2.0 * one_minus_rho);
    Ok(1.0 + head + middle + geometric)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremScaleInput {
    pub arms: usize,
    pub horizon: u64,
    pub epsilon: f64,
    pub alpha_star: f64,
}

impl TheoremScaleInput {
    pub fn validate(&self) -> Result<()> {
        if self.arms == 0 || self.horizon == 0 {
            return Err(Error::Domain("need K >= 1 and T >= 1".into()));
        }
        if !(self.alpha_star > 0.0) {
            return Err(Error::Domain(format!("alpha* must be positive, got {}", self.alpha_star)));
        }
        if !(1.0 / self.alpha_star < self.epsilon && self.epsilon < 0.4) {
            return Err(Error::Domain(format!(
                "epsilon {} outside (1/alpha*, 2/5) = ({}, 0.4)",
                self.epsilon,
                1.0 / self.alpha_star
            )));
        }
        Ok(())
    }

    /// `T / K^{1−2ε}`, the argument of W₀.
    pub fn lambert_argument(&self) -> f64 {
        self.horizon as f64 / (self.arms as f64).powf(1.0 - 2.0 * self.epsilon)
    }
}

/// `√(K·T·W₀(T/K^{1−2ε}))`.
pub fn theorem_scale(input: &TheoremScaleInput) -> Result<f64> {
    input.validate()?;
    let w = lambert_w0(input.lambert_argument())?;
    Ok((input.arms as f64 * input.horizon as f64 * w).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmBound {
    pub arm: usize,
    pub delta: f64,
    pub m: f64,
    pub governing: GoverningSolution,
    pub main_lemma_bound: f64,
    pub countrho_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvBoundReport {
    pub tau0: f64,
    pub c: f64,
    pub d: f64,
    pub horizon: u64,
    /// One entry per arm; `None` for arms with zero gap.
    pub arms: Vec<Option<ArmBound>>,
}

impl EnvBoundReport {
    /// Bounds for gaps `delta` and precisions `tau` at horizon `T ≥ 2`.
    pub fn new(delta: &[f64], tau: &[f64], horizon: u64) -> Result<Self> {
        if delta.is_empty() || delta.len() != tau.len() {
            return Err(Error::InvalidParameter(format!(
                "need matching non-empty gap and precision lists, got {} and {}",
                delta.len(),
                tau.len()
            )));
        }
        if let Some(d) = delta.iter().find(|d| !(**d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidParameter(format!("gaps must be finite and >= 0, got {d}")));
        }
        if let Some(t) = tau.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("precisions must be positive, got {t}")));
        }
        let tau0 = tau.iter().copied().fold(f64::INFINITY, f64::min);
        let Cd { c, d } = compute_cd(tau0)?;
        let arms = delta
            .iter()
            .enumerate()
            .map(|(arm, &gap)| {
                if gap == 0.0 {
                    return Ok(None);
                }
                let m = compute_mk(c, gap)?;
                let governing = solve_governing(tau0, m, gap)?;
                Ok(Some(ArmBound {
                    arm,
                    delta: gap,
                    m,
                    governing,
                    main_lemma_bound: main_lemma_bound(d, gap)?,
                    countrho_bound: countrho_bound(governing.rho, horizon)?,
                }))
            })
            .collect::<Result<_>>()?;
        Ok(Self { tau0, c, d, horizon, arms })
    }
}
