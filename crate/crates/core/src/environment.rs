//! Problem instances drawn from the normal-gamma Bayesian prior.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::mathcore::{sample_gamma, standard_normal, MultivariateNormal, SpdMatrix};

/// Precision draws below this are treated as underflow and redrawn.
pub const TAU_FLOOR: f64 = 1e-300;

const UNIT_NORM_TOL: f64 = 1e-12;

/// Hyperparameters of the per-arm prior `NG(θ*_k, Λ*_k, α*, β*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesPriorSpec {
    pub arms: usize,
    pub dim: usize,
    pub lambda_star: Vec<SpdMatrix>,
    pub alpha_star: f64,
    pub beta_star: f64,
    /// Prior mean of each `θ_k`; always zero at present.
    pub theta_star: Vec<DVector<f64>>,
}

impl BayesPriorSpec {
    /// `K` arms with `Λ*_k = I_d` and `θ*_k = 0`.
    pub fn isotropic(arms: usize, dim: usize, alpha_star: f64, beta_star: f64) -> Result<Self> {
        let spec = Self {
            arms,
            dim,
            lambda_star: vec![SpdMatrix::identity(dim); arms],
            alpha_star,
            beta_star,
            theta_star: vec![DVector::zeros(dim); arms],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms == 0 || self.dim == 0 {
            return Err(Error::InvalidParameter(format!(
                "need at least one arm and dimension, got K={} d={}",
                self.arms, self.dim
            )));
        }
        if !(self.alpha_star > 0.0 && self.alpha_star.is_finite())
            || !(self.beta_star > 0.0 && self.beta_star.is_finite())
        {
            return Err(Error::InvalidParameter(format!(
                "alpha* and beta* must be positive, got ({}, {})",
                self.alpha_star, self.beta_star
            )));
        }
        if self.lambda_star.len() != self.arms || self.theta_star.len() != self.arms {
            return Err(Error::DimensionMismatch { expected: self.arms, got: self.lambda_star.len() });
        }
        for (l, t) in self.lambda_star.iter().zip(&self.theta_star) {
            if l.dim() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: l.dim() });
            }
            if t.len() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, got: t.len() });
            }
        }
        Ok(())
    }

    /// Whether `α* > 5/2`, the shape regime the regret theorem assumes.
    /// Simulation works for any positive shape.
    pub fn supports_regret_theorem(&self) -> bool {
        self.alpha_star > 2.5
    }
}

/// A realized bandit: contexts, parameters and the derived regret quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentInstance {
    pub contexts: Vec<DVector<f64>>,
    pub theta: Vec<DVector<f64>>,
    pub tau: Vec<f64>,
    pub mu: Vec<f64>,
    pub mu_star: f64,
    pub optimal_index: usize,
    pub delta: Vec<f64>,
    pub tau0: f64,
    /// `λ*_k = (a_kᵀ(Λ*_k)⁻¹a_k)⁻¹`.
    pub lambda_k_star: Vec<f64>,
}

impl EnvironmentInstance {
    /// Builds an instance from explicit parameters and fills in the derived
    /// fields.
    pub fn from_parameters(
        contexts: Vec<DVector<f64>>,
        theta: Vec<DVector<f64>>,
        tau: Vec<f64>,
        lambda_k_star: Vec<f64>,
    ) -> Result<Self> {
        let k = contexts.len();
        if k == 0 {
            return Err(Error::InvalidParameter("environment needs at least one arm".into()));
        }
        if theta.len() != k || tau.len() != k || lambda_k_star.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: theta.len().min(tau.len()) });
        }
        for a in &contexts {
            let n = a.norm();
            if (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidParameter(format!("context norm {n} is not 1")));
            }
        }
        if let Some(t) = tau.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter(format!("precision {t} is not positive")));
        }
        let mu: Vec<f64> = contexts.iter().zip(&theta).map(|(a, th)| a.dot(th)).collect();
        let (optimal_index, mu_star) = argmax_lowest(&mu);
        let delta = mu.iter().map(|m| mu_star - m).collect();
        let tau0 = tau.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(Self { contexts, theta, tau, mu, mu_star, optimal_index, delta, tau0, lambda_k_star })
    }

    pub fn arms(&self) -> usize {
        self.contexts.len()
    }

    pub fn dim(&self) -> usize {
        self.contexts[0].len()
    }

    /// Reward draw `X ~ N(μ_k, 1/τ_k)`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<f64> {
        if k >= self.arms() {
            return Err(Error::InvalidArm { index: k, arms: self.arms() });
        }
        Ok(self.mu[k] + standard_normal(rng) / self.tau[k].sqrt())
    }
}

/// Index and value of the maximum, ties going to the lowest index.
pub fn argmax_lowest(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    (best, values[best])
}

/// `K` contexts drawn uniformly from `[−1/√d, 1/√d]^d` and scaled to unit norm.
pub fn generate_contexts<R: Rng + ?Sized>(arms: usize, dim: usize, rng: &mut R) -> Result<Vec<DVector<f64>>> {
    if arms == 0 || dim == 0 {
        return Err(Error::InvalidParameter(format!("need K >= 1 and d >= 1, got K={arms} d={dim}")));
    }
    let half_width = 1.0 / (dim as f64).sqrt();
    let mut out = Vec::with_capacity(arms);
    while out.len() < arms {
        let v = DVector::from_iterator(dim, (0..dim).map(|_| rng.random_range(-half_width..half_width)));
        let n = v.norm();
        if n > 0.0 {
            out.push(v / n);
        }
    }
    Ok(out)
}

/// Independently per arm: `τ_k ~ Gam(α*, β*)`, `θ_k | τ_k ~ N_d(θ*_k, (τ_kΛ*_k)⁻¹)`.
pub fn sample_environment<R: Rng + ?Sized>(
    spec: &BayesPriorSpec,
    contexts: &[DVector<f64>],
    rng: &mut R,
) -> Result<EnvironmentInstance> {
    spec.validate()?;
    if contexts.len() != spec.arms {
        return Err(Error::DimensionMismatch { expected: spec.arms, got: contexts.len() });
    }
    if let Some(a) = contexts.iter().find(|a| a.len() != spec.dim) {
        return Err(Error::DimensionMismatch { expected: spec.dim, got: a.len() });
    }
    let mut theta = Vec::with_capacity(spec.arms);
    let mut tau = Vec::with_capacity(spec.arms);
    let mut lambda_k_star = Vec::with_capacity(spec.arms);
    for k in 0..spec.arms {
        let cov = spec.lambda_star[k].inverse()?;
        lambda_k_star.push(1.0 / cov.quad_form(&contexts[k]));
        let t = loop {
            let t = sample_gamma(spec.alpha_star, spec.beta_star, rng)?;
            if t >= TAU_FLOOR {
                break t;
            }
        };
        let mvn = MultivariateNormal::new(spec.theta_star[k].clone(), &cov)?;
        theta.push(mvn.sample_scaled(1.0 / t.sqrt(), rng));
        tau.push(t);
    }
    EnvironmentInstance::from_parameters(contexts.to_vec(), theta, tau, lambda_k_star)
}
