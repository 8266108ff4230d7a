//! Monte-Carlo checks of the distributional and concentration lemmas.
//!
//! Draws are split into fixed-size blocks; block `b` of a validator uses
//! `RngStream(seed, b)` re-mixed with the validator's tag, and blocks are
//! gathered in index order. Results therefore depend only on the seed.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use super::bounds::{compute_cd, compute_mk, solve_governing};
use super::ks::KsOutcome;
use crate::environment::{generate_contexts, sample_environment, BayesPriorSpec};
use crate::error::{Error, Result};
use crate::mathcore::{
    sample_gamma, standard_normal, verify_appendix_inequalities, verify_gaussian_tail_bound, InequalityCheck,
};
use crate::posterior::{closed_form, DEFAULT_BETA1};
use crate::rng::RngStream;

pub const KS_LEVEL: f64 = 0.01;
pub const SE_MARGIN: f64 = 5.0;

const BLOCK: usize = 1000;
const CONDDIST_TAG: u64 = 11;
const JOINT_TAG: u64 = 12;
const DELTA_TAG: u64 = 13;
const INVGAMMA_TAG: u64 = 14;
const CONDDIST_DIM: usize = 3;

fn blocked<T, F>(mc: usize, seed: u64, tag: u64, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream) -> Result<T> + Sync,
{
    let blocks = mc.div_ceil(BLOCK);
    let parts: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngStream::new(seed, b as u64).substream(tag);
            let len = BLOCK.min(mc - b * BLOCK);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn proportion_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    sxy / (sxx * syy).sqrt()
}

/// Mean and precision of a single arm's reward distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmModel {
    pub mu: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CondDistReport {
    pub arm: ArmModel,
    pub n: usize,
    pub mc: usize,
    /// `aᵀuₙ` against `N(μ, 1/(nτ))`.
    pub mean_ks: KsOutcome,
    /// `2τ(βₙ − β₁)` against `χ²ₙ₋₁`.
    pub scale_ks: KsOutcome,
    pub correlation: f64,
    pub correlation_limit: f64,
}

impl CondDistReport {
    pub fn passed(&self) -> bool {
        self.mean_ks.passes(KS_LEVEL)
            && self.scale_ks.passes(KS_LEVEL)
            && self.correlation.abs() < self.correlation_limit
    }
}

/// Samples `mc` independent streams of `n` rewards from `arm` at a random
/// unit context and tests the laws of the closed-form `aᵀuₙ` and `βₙ`.
pub fn validate_conddist(arm: ArmModel, n: usize, mc: usize, seed: u64) -> Result<CondDistReport> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("need n >= 2, got {n}")));
    }
    if mc < 2 {
        return Err(Error::InvalidParameter(format!("need mc >= 2, got {mc}")));
    }
    if !(arm.tau > 0.0 && arm.tau.is_finite()) || !arm.mu.is_finite() {
        return Err(Error::InvalidParameter(format!("bad arm ({}, {})", arm.mu, arm.tau)));
    }
    let context = generate_contexts(1, CONDDIST_DIM, &mut RngStream::new(seed, u64::MAX).substream(CONDDIST_TAG))?
        .pop()
        .ok_or_else(|| Error::Internal("no context generated".into()))?;
    let sd = 1.0 / arm.tau.sqrt();
    let pairs = blocked(mc, seed, CONDDIST_TAG, |rng| {
        let xs: Vec<f64> = (0..n).map(|_| arm.mu + sd * standard_normal(rng)).collect();
        let post = closed_form(&context, &xs, DEFAULT_BETA1)?;
        Ok((post.predicted_mean(&context), post.beta()))
    })?;
    let (mut means, betas): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let correlation = pearson(&means, &betas);
    let mut scaled: Vec<f64> = betas.iter().map(|b| 2.0 * arm.tau * (b - DEFAULT_BETA1)).collect();

    let normal = Normal::new(arm.mu, 1.0 / (n as f64 * arm.tau).sqrt())
        .map_err(|e| Error::Internal(format!("normal law: {e}")))?;
    let chi2 = ChiSquared::new((n - 1) as f64).map_err(|e| Error::Internal(format!("chi-square law: {e}")))?;
    Ok(CondDistReport {
        arm,
        n,
        mc,
        mean_ks: KsOutcome::run(&mut means, |x| normal.cdf(x)),
        scale_ks: KsOutcome::run(&mut scaled, |x| chi2.cdf(x)),
        correlation,
        correlation_limit: 4.0 / (mc as f64).sqrt(),
    })
}

/// An optimal arm with mean 0 and a suboptimal arm with mean `−Δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPair {
    pub tau_optimal: f64,
    pub tau_k: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointEventReport {
    pub pair: ArmPair,
    pub n: usize,
    pub mc: usize,
    pub m: f64,
    pub eps: f64,
    pub rho: f64,
    /// `P(μ̂₁ > μ₁ − ε, βₙ⁽¹⁾ ≤ nM/2)`, required `≥ 1 − ρⁿ`.
    pub p_optimal: f64,
    pub se_optimal: f64,
    pub bound_optimal: f64,
    /// `P(μ̂_k > μ_k + ε or βₙ⁽ᵏ⁾ > nM/2)`, required `≤ ρⁿ`.
    pub p_suboptimal: f64,
    pub se_suboptimal: f64,
    pub bound_suboptimal: f64,
}

impl JointEventReport {
    pub fn optimal_passed(&self) -> bool {
        self.p_optimal >= self.bound_optimal - SE_MARGIN * self.se_optimal
    }

    pub fn suboptimal_passed(&self) -> bool {
        self.p_suboptimal <= self.bound_suboptimal + SE_MARGIN * self.se_suboptimal
    }

    pub fn passed(&self) -> bool {
        self.optimal_passed() && self.suboptimal_passed()
    }
}

// Sample mean and `β₁ + ½Σ(x − x̄)²` of `n` rewards.
fn mean_and_beta(mu: f64, sd: f64, n: usize, rng: &mut RngStream) -> (f64, f64) {
    let xs: Vec<f64> = (0..n).map(|_| mu + sd * standard_normal(rng)).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, DEFAULT_BETA1 + 0.5 * ss)
}

pub fn validate_joint_events(pair: ArmPair, n: usize, mc: usize, seed: u64) -> Result<JointEventReport> {
    if !(pair.delta > 0.0) || !pair.delta.is_finite() {
        return Err(Error::InvalidParameter(format!("gap must be positive, got {}", pair.delta)));
    }
    for t in [pair.tau_optimal, pair.tau_k] {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("precision must be positive, got {t}")));
        }
    }
    if n == 0 || mc == 0 {
        return Err(Error::InvalidParameter("need n >= 1 and mc >= 1".into()));
    }
    let tau0 = pair.tau_optimal.min(pair.tau_k);
    let c = compute_cd(tau0)?.c;
    let m = compute_mk(c, pair.delta)?;
    let sol = solve_governing(tau0, m, pair.delta)?;
    let (mu1, muk) = (0.0, -pair.delta);
    let threshold = 0.5 * n as f64 * m;
    let (sd1, sdk) = (1.0 / pair.tau_optimal.sqrt(), 1.0 / pair.tau_k.sqrt());

    let hits = blocked(mc, seed, JOINT_TAG, |rng| {
        let (m1, b1) = mean_and_beta(mu1, sd1, n, rng);
        let (mk, bk) = mean_and_beta(muk, sdk, n, rng);
        Ok((m1 > mu1 - sol.eps && b1 <= threshold, mk > muk + sol.eps || bk > threshold))
    })?;
    let p_optimal = hits.iter().filter(|h| h.0).count() as f64 / mc as f64;
    let p_suboptimal = hits.iter().filter(|h| h.1).count() as f64 / mc as f64;
    let rho_n = (-(n as f64) * sol.log_inv_rho).exp();
    Ok(JointEventReport {
        pair,
        n,
        mc,
        m,
        eps: sol.eps,
        rho: sol.rho,
        p_optimal,
        se_optimal: proportion_se(p_optimal, mc),
        bound_optimal: -(-(n as f64) * sol.log_inv_rho).exp_m1(),
        p_suboptimal,
        se_suboptimal: proportion_se(p_suboptimal, mc),
        bound_suboptimal: rho_n,
    })
}

/// Prior for the Δ-moment check; contexts are redrawn for every instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaMomentSetup {
    pub arms: usize,
    pub dim: usize,
    pub alpha_star: f64,
    pub beta_star: f64,
}

impl Default for DeltaMomentSetup {
    fn default() -> Self {
        Self { arms: 10, dim: 5, alpha_star: 4.0, beta_star: 3.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMomentCheck {
    pub ell: u32,
    /// Estimate of `E[Δ_k/τ₀^ℓ]`, averaged over arms.
    pub lhs: f64,
    /// Estimate of `√(2 ln K/λ₀)·E[τ₀^{−ℓ−½}]`.
    pub rhs: f64,
    /// Mean and standard error of the per-instance difference `rhs − lhs`.
    pub gap: f64,
    pub gap_se: f64,
}

impl DeltaMomentCheck {
    pub fn passed(&self) -> bool {
        self.gap >= -SE_MARGIN * self.gap_se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMomentReport {
    pub setup: DeltaMomentSetup,
    pub mc: usize,
    pub checks: Vec<DeltaMomentCheck>,
}

impl DeltaMomentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(DeltaMomentCheck::passed)
    }
}

pub fn validate_delta_moments(setup: DeltaMomentSetup, mc: usize, seed: u64) -> Result<DeltaMomentReport> {
    if setup.arms < 2 {
        return Err(Error::InvalidParameter(format!("need at least two arms, got {}", setup.arms)));
    }
    if mc < 2 {
        return Err(Error::InvalidParameter(format!("need mc >= 2, got {mc}")));
    }
    let spec = BayesPriorSpec::isotropic(setup.arms, setup.dim, setup.alpha_star, setup.beta_star)?;
    let log_k = (setup.arms as f64).ln();
    let per_instance = blocked(mc, seed, DELTA_TAG, |rng| {
        let contexts = generate_contexts(setup.arms, setup.dim, rng)?;
        let env = sample_environment(&spec, &contexts, rng)?;
        let lambda0 = env.lambda_k_star.iter().copied().fold(f64::INFINITY, f64::min);
        let mean_delta = env.delta.iter().sum::<f64>() / setup.arms as f64;
        Ok((mean_delta, env.tau0, (2.0 * log_k / lambda0).sqrt()))
    })?;
    let checks = [0u32, 1]
        .iter()
        .map(|&ell| {
            let mut lhs = Vec::with_capacity(mc);
            let mut rhs = Vec::with_capacity(mc);
            for &(d, tau0, factor) in &per_instance {
                lhs.push(d / tau0.powi(ell as i32));
                rhs.push(factor * tau0.powf(-(ell as f64) - 0.5));
            }
            let gaps: Vec<f64> = rhs.iter().zip(&lhs).map(|(r, l)| r - l).collect();
            let (gap, gap_se) = mean_se(&gaps);
            DeltaMomentCheck { ell, lhs: mean_se(&lhs).0, rhs: mean_se(&rhs).0, gap, gap_se }
        })
        .collect();
    Ok(DeltaMomentReport { setup, mc, checks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvGammaMaxSetup {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    pub gamma: f64,
    pub arm_counts: Vec<usize>,
}

impl Default for InvGammaMaxSetup {
    fn default() -> Self {
        Self { alpha: 3.0, beta: 2.0, p: 1.0, gamma: 2.9, arm_counts: (1..=8).map(|i| 1usize << i).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvGammaMaxPoint {
    pub arms: usize,
    /// Estimate of `E[max_k X_k^p]`.
    pub mean: f64,
    pub se: f64,
    /// `(K β^γ Γ(α−γ)/Γ(α))^{p/γ}`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvGammaMaxReport {
    pub setup: InvGammaMaxSetup,
    pub mc: usize,
    pub points: Vec<InvGammaMaxPoint>,
    /// Least-squares slope of `ln E` against `ln K`; informational.
    pub fitted_slope: f64,
    /// `max_K E/K^{p/γ}`; informational.
    pub fitted_constant: f64,
}

impl InvGammaMaxReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.mean <= p.bound + SE_MARGIN * p.se)
    }
}

pub fn validate_invgamma_max(setup: InvGammaMaxSetup, mc: usize, seed: u64) -> Result<InvGammaMaxReport> {
    let InvGammaMaxSetup { alpha, beta, p, gamma, .. } = setup;
    if !(1.0 < gamma && gamma < alpha && p < gamma && p > 0.0 && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < p < gamma and 1 < gamma < alpha, got p={p} gamma={gamma} alpha={alpha}"
        )));
    }
    if mc < 2 || setup.arm_counts.is_empty() || setup.arm_counts.contains(&0) {
        return Err(Error::InvalidParameter("need mc >= 2 and positive arm counts".into()));
    }
    let log_moment = gamma * beta.ln() + ln_gamma(alpha - gamma) - ln_gamma(alpha);
    let points = setup
        .arm_counts
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let draws = blocked(mc, seed, INVGAMMA_TAG + 16 * i as u64, |rng| {
                let mut min_tau = f64::INFINITY;
                for _ in 0..k {
                    min_tau = min_tau.min(sample_gamma(alpha, beta, rng)?);
                }
                Ok(min_tau.powf(-p))
            })?;
            let (mean, se) = mean_se(&draws);
            let bound = (p / gamma * ((k as f64).ln() + log_moment)).exp();
            Ok(InvGammaMaxPoint { arms: k, mean, se, bound })
        })
        .collect::<Result<Vec<_>>>()?;

    let xs: Vec<f64> = points.iter().map(|q| (q.arms as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|q| q.mean.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let fitted_slope = if sxx > 0.0 { sxy / sxx } else { f64::NAN };
    let fitted_constant = points
        .iter()
        .map(|q| q.mean / (q.arms as f64).powf(p / gamma))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(InvGammaMaxReport { setup, mc, points, fitted_slope, fitted_constant })
}

/// Grid checks of the two logarithm inequalities and the Gaussian tail bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixSuiteReport {
    pub gaussian_tail: InequalityCheck,
    pub log_lower: InequalityCheck,
    pub reciprocal_log: InequalityCheck,
}

impl AppendixSuiteReport {
    pub fn checks(&self) -> [&InequalityCheck; 3] {
        [&self.gaussian_tail, &self.log_lower, &self.reciprocal_log]
    }

    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed())
    }
}

/// `c ∈ [0, 10]` in steps of 1e-3.
pub fn tail_grid() -> Vec<f64> {
    (0..=10_000).map(|i| i as f64 * 1e-3).collect()
}

/// Zero plus 10⁴ log-spaced points on `[1e-12, 1e6]`.
pub fn log_lower_grid() -> Vec<f64> {
    let n = 10_000;
    std::iter::once(0.0)
        .chain((0..=n).map(|i| 10f64.powf(-12.0 + 18.0 * i as f64 / n as f64)))
        .collect()
}

/// Uniform and log-spaced points in `(0, 1)`, denser near both ends.
pub fn unit_interval_grid() -> Vec<f64> {
    let n = 100_000;
    let mut grid: Vec<f64> = (1..n).map(|i| i as f64 / n as f64).collect();
    for i in 0..=1000 {
        let t = 10f64.powf(-15.0 + 14.0 * i as f64 / 1000.0);
        grid.push(t);
        grid.push(1.0 - t);
    }
    grid.retain(|x| *x > 0.0 && *x < 1.0);
    grid
}

pub fn validate_appendix() -> Result<AppendixSuiteReport> {
    let gaussian_tail = verify_gaussian_tail_bound(&tail_grid())?;
    let log_lower = verify_appendix_inequalities(&log_lower_grid())?.log_lower;
    let reciprocal_log = verify_appendix_inequalities(&unit_interval_grid())?.reciprocal_log;
    Ok(AppendixSuiteReport { gaussian_tail, log_lower, reciprocal_log })
}

/// Residual of `w·eʷ = x` and the `W₀(x) < ln x` property on a log grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LambertGridReport {
    pub points: usize,
    /// Largest `|W e^W − x| / max(1, x)`.
    pub max_scaled_residual: f64,
    pub log_bound_violations: usize,
}

impl LambertGridReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_scaled_residual <= tol && self.log_bound_violations == 0
    }
}

/// `points` log-spaced values on `[1e-6, 1e12]`.
pub fn validate_lambert(points: usize) -> Result<LambertGridReport> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!("need at least two grid points, got {points}")));
    }
    let mut max_scaled_residual: f64 = 0.0;
    let mut log_bound_violations = 0;
    for i in 0..points {
        let x = 10f64.powf(-6.0 + 18.0 * i as f64 / (points - 1) as f64);
        let w = crate::mathcore::lambert_w0(x)?;
        max_scaled_residual = max_scaled_residual.max((w * w.exp() - x).abs() / x.max(1.0));
        if x > std::f64::consts::E && !(w < x.ln()) {
            log_bound_violations += 1;
        }
    }
    Ok(LambertGridReport { points, max_scaled_residual, log_bound_violations })
}
