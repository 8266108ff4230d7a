//! Per-arm normal-gamma posterior over `(θ, τ)`.
//!
//! `θ | τ ~ N_d(u, (τΛ)⁻¹)` and `τ ~ Gam(α, β)`. Observations `x` arrive with a
//! fixed context `a`, likelihood `N(aᵀθ, 1/τ)`. The recurrence update keeps
//! `Λ⁻¹` current with a rank-one (Sherman–Morrison) correction and rebuilds it
//! from `Λ` every [`REFACTOR_INTERVAL`] updates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::mathcore::{
    cholesky_lower, sample_gamma, spd_inverse, standard_normal, symmetrize, MultivariateNormal, SpdMatrix,
};

pub const REFACTOR_INTERVAL: u32 = 512;

/// Default `β₁` for arms initialized from a single observation.
pub const DEFAULT_BETA1: f64 = 1.0;

const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalGammaParams {
    u: DVector<f64>,
    lambda: DMatrix<f64>,
    lambda_inv: DMatrix<f64>,
    alpha: f64,
    beta: f64,
    n_obs: u64,
    since_refactor: u32,
}

/// One Thompson draw for an arm: the sampled precision and the Q-value `aᵀθ̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QDraw {
    pub q: f64,
    pub tau_tilde: f64,
}

impl NormalGammaParams {
    pub fn new(u: DVector<f64>, lambda: SpdMatrix, alpha: f64, beta: f64) -> Result<Self> {
        if u.len() != lambda.dim() {
            return Err(Error::DimensionMismatch { expected: lambda.dim(), got: u.len() });
        }
        if !(alpha > 0.0 && alpha.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha and beta must be positive, got ({alpha}, {beta})"
            )));
        }
        let lambda_inv = spd_inverse(lambda.matrix())?;
        Ok(Self {
            u,
            lambda: lambda.into_matrix(),
            lambda_inv,
            alpha,
            beta,
            n_obs: 0,
            since_refactor: 0,
        })
    }

    /// State after a first observation `x₁`: `(x₁a, I, ½, β₁)`.
    pub fn initial(context: &DVector<f64>, x1: f64, beta1: f64) -> Result<Self> {
        let d = context.len();
        let mut p = Self::new(context * x1, SpdMatrix::identity(d), 0.5, beta1)?;
        p.n_obs = 1;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &DVector<f64> {
        &self.u
    }

    pub fn lambda(&self) -> &DMatrix<f64> {
        &self.lambda
    }

    pub fn lambda_inv(&self) -> &DMatrix<f64> {
        &self.lambda_inv
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n_obs(&self) -> u64 {
        self.n_obs
    }

    /// `aᵀu`, the posterior mean reward for context `a`.
    pub fn predicted_mean(&self, context: &DVector<f64>) -> f64 {
        context.dot(&self.u)
    }

    /// Conjugate posterior after observing `x` at `context`.
    pub fn update(&self, context: &DVector<f64>, x: f64) -> Result<Self> {
        let mut next = self.clone();
        next.observe(context, x)?;
        Ok(next)
    }

    /// In-place form of [`update`](Self::update).
    ///
    /// `β′ = β + ½(x² + uᵀΛu − u′ᵀΛ′u′)` is evaluated as the equal
    /// `β + ½r²/(1 + aᵀΛ⁻¹a)` with `r = x − aᵀu`, which avoids subtracting
    /// two quadratic forms of size `nμ̂²`.
    pub fn observe(&mut self, context: &DVector<f64>, x: f64) -> Result<()> {
        let (residual, spread) = self.advance_location(context, x)?;
        let beta = self.beta + 0.5 * residual * residual / (1.0 + spread);
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::NumericalCorruption(format!(
                "beta became {beta} after observing {x}"
            )));
        }
        self.beta = beta;
        self.alpha += 0.5;
        Ok(())
    }

    /// Updates only `u`, `Λ` and `Λ⁻¹`; `α` and `β` are left untouched.
    ///
    /// This is the Gaussian (known-precision) TS update.
    pub fn update_location(&mut self, context: &DVector<f64>, x: f64) -> Result<()> {
        self.advance_location(context, x).map(|_| ())
    }

    /// `u′ = Λ′⁻¹(xa + Λu)` in its innovation form `u + Λ′⁻¹a·(x − aᵀu)`;
    /// returns `x − aᵀu` and `aᵀΛ⁻¹a` (both before the update).
    fn advance_location(&mut self, context: &DVector<f64>, x: f64) -> Result<(f64, f64)> {
        if context.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: context.len() });
        }
        if !x.is_finite() {
            return Err(Error::InvalidParameter(format!("observation must be finite, got {x}")));
        }
        let w = &self.lambda_inv * context;
        let spread = context.dot(&w);
        let residual = x - context.dot(&self.u);
        // Λ′⁻¹a = Λ⁻¹a / (1 + aᵀΛ⁻¹a)
        self.u.axpy(residual / (1.0 + spread), &w, 1.0);
        self.lambda.ger(1.0, context, context, 1.0);

        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_INTERVAL {
            self.lambda_inv = spd_inverse(&self.lambda)?;
            self.since_refactor = 0;
        } else {
            self.lambda_inv.ger(-1.0 / (1.0 + spread), &w, &w, 1.0);
            symmetrize(&mut self.lambda_inv);
        }
        self.n_obs += 1;
        Ok((residual, spread))
    }

    /// Draws `τ̃ ~ Gam(α, β)`, then `θ̃ ~ N_d(u, (τ̃Λ)⁻¹)`, and returns `aᵀθ̃`.
    pub fn sample_qvalue<R: Rng + ?Sized>(&self, context: &DVector<f64>, rng: &mut R) -> Result<QDraw> {
        let tau_tilde = sample_gamma(self.alpha, self.beta, rng)?;
        let q = self.sample_qvalue_given_precision(context, tau_tilde, rng)?;
        Ok(QDraw { q, tau_tilde })
    }

    /// `aᵀθ̃` with `θ̃ ~ N_d(u, (τΛ)⁻¹)` for a given precision `τ`.
    pub fn sample_qvalue_given_precision<R: Rng + ?Sized>(
        &self,
        context: &DVector<f64>,
        precision: f64,
        rng: &mut R,
    ) -> Result<f64> {
        if context.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: context.len() });
        }
        let mvn = MultivariateNormal::new(
            self.u.clone(),
            &SpdMatrix::from_trusted(self.lambda_inv.clone()),
        )?;
        let theta = mvn.sample_scaled(1.0 / precision.sqrt(), rng);
        Ok(context.dot(&theta))
    }
}

/// Posterior after `observations` at a unit-norm `context`, starting from
/// `(x₁a, I, ½, β₁)`:
/// `Λₙ = I + (n−1)aaᵀ`, `uₙ = nμ̂ₙΛₙ⁻¹a`, `αₙ = n/2`, `βₙ = β₁ + ½Σ(xᵢ−μ̂ₙ)²`.
pub fn closed_form(context: &DVector<f64>, observations: &[f64], beta1: f64) -> Result<NormalGammaParams> {
    let norm = context.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::InvalidParameter(format!("context must have unit norm, got {norm}")));
    }
    if observations.is_empty() {
        return Err(Error::InvalidParameter("closed form needs at least one observation".into()));
    }
    if !(beta1 > 0.0) {
        return Err(Error::InvalidParameter(format!("beta1 must be positive, got {beta1}")));
    }
    let n = observations.len();
    let nf = n as f64;
    let mean = observations.iter().sum::<f64>() / nf;
    let ss: f64 = observations.iter().map(|x| (x - mean).powi(2)).sum();

    let d = context.len();
    let mut lambda = DMatrix::identity(d, d);
    lambda.ger(nf - 1.0, context, context, 1.0);
    let lambda_inv = spd_inverse(&lambda)?;
    let u = &lambda_inv * context * (nf * mean);
    Ok(NormalGammaParams {
        u,
        lambda,
        lambda_inv,
        alpha: 0.5 * nf,
        beta: beta1 + 0.5 * ss,
        n_obs: n as u64,
        since_refactor: 0,
    })
}

/// Precision used when drawing a Q-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecisionDraw {
    /// `τ̃ ~ Gam(α, β)` from the posterior.
    Posterior,
    /// `τ̃` pinned to a known value (Gaussian TS).
    Fixed(f64),
}

/// Q-value sampler with `aᵀu` and `Lᵀa` (`LLᵀ = Λ⁻¹`) precomputed.
///
/// Consumes the same draws in the same order as
/// [`NormalGammaParams::sample_qvalue`]: one gamma variate (unless the
/// precision is fixed) followed by `d` standard normals.
#[derive(Debug, Clone)]
pub struct QValueSampler {
    mean: f64,
    weights: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl QValueSampler {
    pub fn new(params: &NormalGammaParams, context: &DVector<f64>) -> Result<Self> {
        if context.len() != params.dim() {
            return Err(Error::DimensionMismatch { expected: params.dim(), got: context.len() });
        }
        let factor = cholesky_lower(&params.lambda_inv)?;
        let weights = (factor.transpose() * context).iter().copied().collect();
        Ok(Self {
            mean: params.predicted_mean(context),
            weights,
            alpha: params.alpha,
            beta: params.beta,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample<R: Rng + ?Sized>(&self, precision: PrecisionDraw, rng: &mut R) -> QDraw {
        let tau_tilde = match precision {
            // alpha, beta > 0 is a NormalGammaParams invariant
            PrecisionDraw::Posterior => sample_gamma(self.alpha, self.beta, rng).unwrap_or(f64::NAN),
            PrecisionDraw::Fixed(tau) => tau,
        };
        let dot: f64 = self.weights.iter().map(|w| w * standard_normal(rng)).sum();
        QDraw { q: self.mean + dot / tau_tilde.sqrt(), tau_tilde }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::quad_form;
    use rand::Rng;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    // The recurrence exactly as written: u′ = (Λ + aaᵀ)⁻¹(xa + Λu),
    // β′ = β + ½(x² + uᵀΛu − u′ᵀΛ′u′), with a fresh LU solve.
    fn literal_update(p: &NormalGammaParams, a: &DVector<f64>, x: f64) -> (DVector<f64>, f64) {
        let lambda_next = p.lambda() + a * a.transpose();
        let u_next = lambda_next.clone().lu().solve(&(a * x + p.lambda() * p.u())).unwrap();
        let beta = p.beta() + 0.5 * (x * x + quad_form(p.lambda(), p.u()) - quad_form(&lambda_next, &u_next));
        (u_next, beta)
    }

    #[test]
    fn innovation_form_matches_literal_recurrence() {
        let mut rng = RngStream::new(12, 0);
        for _ in 0..200 {
            let d = rng.random_range(1..=6);
            let m = DMatrix::from_fn(d, d, |_, _| standard_normal(&mut rng));
            let lambda = SpdMatrix::new(&m * m.transpose() + DMatrix::identity(d, d)).unwrap();
            let u = DVector::from_fn(d, |_, _| standard_normal(&mut rng));
            // contexts need not be unit norm for the recurrence
            let a = DVector::from_fn(d, |_, _| 2.0 * standard_normal(&mut rng));
            let x = 3.0 * standard_normal(&mut rng);
            let p = NormalGammaParams::new(u, lambda, 1.5, 0.7).unwrap();
            let (u_lit, beta_lit) = literal_update(&p, &a, x);
            let next = p.update(&a, x).unwrap();
            assert!((next.u() - &u_lit).norm() <= 1e-10 * u_lit.norm().max(1.0));
            assert_relative_eq!(next.beta(), beta_lit, max_relative = 1e-10);
        }
    }

    fn scalar(u: f64, lambda: f64, alpha: f64, beta: f64) -> NormalGammaParams {
        NormalGammaParams::new(v(&[u]), SpdMatrix::new(DMatrix::from_element(1, 1, lambda)).unwrap(), alpha, beta)
            .unwrap()
    }

    #[test]
    fn scalar_update_by_hand() {
        let p = scalar(0.0, 1.0, 0.5, 1.0).update(&v(&[1.0]), 2.0).unwrap();
        assert_relative_eq!(p.u()[0], 1.0, max_relative = 1e-15);
        assert_relative_eq!(p.lambda()[(0, 0)], 2.0);
        assert_eq!(p.alpha(), 1.0);
        assert_relative_eq!(p.beta(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(p.lambda_inv()[(0, 0)], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn observing_the_predicted_mean_keeps_u() {
        let c = 1.7;
        let p = scalar(c, 3.0, 2.0, 1.5);
        let next = p.update(&v(&[1.0]), c).unwrap();
        assert_relative_eq!(next.u()[0], c, max_relative = 1e-15);
    }

    #[test]
    fn wrong_context_dimension() {
        let p = scalar(0.0, 1.0, 0.5, 1.0);
        assert_eq!(
            p.update(&v(&[1.0, 0.0]), 1.0).unwrap_err(),
            Error::DimensionMismatch { expected: 1, got: 2 }
        );
    }

    #[test]
    fn closed_form_two_observations_matches_chain() {
        let a = v(&[1.0]);
        let cf = closed_form(&a, &[2.0, 0.0], 1.0).unwrap();
        assert_relative_eq!(cf.lambda()[(0, 0)], 2.0);
        assert_relative_eq!(cf.u()[0], 1.0);
        assert_eq!(cf.alpha(), 1.0);
        assert_relative_eq!(cf.beta(), 2.0);

        let chained = NormalGammaParams::initial(&a, 2.0, 1.0).unwrap().update(&a, 0.0).unwrap();
        assert_relative_eq!(chained.u()[0], cf.u()[0], max_relative = 1e-15);
        assert_relative_eq!(chained.beta(), cf.beta(), max_relative = 1e-15);
        assert_eq!(chained.alpha(), cf.alpha());
    }

    #[test]
    fn closed_form_single_observation_is_initial_state() {
        let a = v(&[0.6, 0.8]);
        let cf = closed_form(&a, &[3.5], 1.25).unwrap();
        assert_eq!(cf.lambda(), &DMatrix::<f64>::identity(2, 2));
        assert_relative_eq!(cf.u()[0], 3.5 * 0.6, max_relative = 1e-15);
        assert_relative_eq!(cf.u()[1], 3.5 * 0.8, max_relative = 1e-15);
        assert_eq!(cf.alpha(), 0.5);
        assert_eq!(cf.beta(), 1.25);
    }

    #[test]
    fn closed_form_constant_observations_leave_beta() {
        let a = v(&[0.6, 0.8]);
        let cf = closed_form(&a, &[0.1; 7], 1.0).unwrap();
        assert_eq!(cf.beta(), 1.0);
    }

    #[test]
    fn closed_form_rejects_non_unit_context() {
        assert!(closed_form(&v(&[1.0, 1.0]), &[1.0], 1.0).is_err());
        assert!(closed_form(&v(&[1.0]), &[], 1.0).is_err());
    }

    #[test]
    fn predicted_mean_and_leverage_identities() {
        let a = v(&[0.6, 0.0, 0.8]);
        let xs: Vec<f64> = (0..57).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let cf = closed_form(&a, &xs, 1.0).unwrap();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert_relative_eq!(cf.predicted_mean(&a), mean, epsilon = 1e-12);
        assert_relative_eq!(quad_form(cf.lambda_inv(), &a), 1.0 / 57.0, epsilon = 1e-14);
    }

    #[test]
    fn long_chain_keeps_inverse_accurate() {
        let a = v(&[0.0, 0.6, 0.8]);
        let mut p = NormalGammaParams::initial(&a, 0.3, 1.0).unwrap();
        for i in 1..3000 {
            p.observe(&a, (i as f64).cos()).unwrap();
        }
        let prod = p.lambda() * p.lambda_inv();
        assert!((prod - DMatrix::<f64>::identity(3, 3)).amax() < 1e-9);
        assert!((quad_form(p.lambda_inv(), &a) - 1.0 / 3000.0).abs() < 1e-12);
    }

    #[test]
    fn sampler_matches_full_draw() {
        let a = v(&[0.6, 0.0, 0.8]);
        let p = closed_form(&a, &[1.0, -0.5, 2.0, 0.25], 1.0).unwrap();
        let sampler = QValueSampler::new(&p, &a).unwrap();
        for s in 0..50 {
            let mut r1 = RngStream::new(s, 1);
            let mut r2 = RngStream::new(s, 1);
            let full = p.sample_qvalue(&a, &mut r1).unwrap();
            let fast = sampler.sample(PrecisionDraw::Posterior, &mut r2);
            assert_eq!(full.tau_tilde.to_bits(), fast.tau_tilde.to_bits());
            assert_relative_eq!(full.q, fast.q, epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn q_given_precision_has_closed_form_moments() {
        let a = v(&[0.6, 0.8]);
        let xs = [0.3, 1.1, -0.4, 0.9, 0.2, 0.5];
        let n = xs.len() as f64;
        let p = closed_form(&a, &xs, 1.0).unwrap();
        let mut rng = RngStream::new(41, 0);
        let tau = p.sample_qvalue(&a, &mut rng).unwrap().tau_tilde;
        let sampler = QValueSampler::new(&p, &a).unwrap();
        let m = 100_000;
        let qs: Vec<f64> = (0..m).map(|_| sampler.sample(PrecisionDraw::Fixed(tau), &mut rng).q).collect();
        let mean = qs.iter().sum::<f64>() / m as f64;
        let var = qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
        let target_var = 1.0 / (n * tau);
        let mu_hat = xs.iter().sum::<f64>() / n;
        assert!((mean - mu_hat).abs() < 5.0 * (target_var / m as f64).sqrt());
        // Var of the sample variance for normals: 2σ⁴/(m−1)
        assert!((var - target_var).abs() < 5.0 * target_var * (2.0 / (m as f64 - 1.0)).sqrt());
    }

    #[test]
    fn larger_beta_spreads_q() {
        let a = v(&[1.0]);
        let mut rng = RngStream::new(42, 0);
        let spread = |beta: f64, rng: &mut RngStream| {
            let p = NormalGammaParams::new(v(&[0.0]), SpdMatrix::new(DMatrix::from_element(1, 1, 5.0)).unwrap(), 3.0, beta)
                .unwrap();
            let qs: Vec<f64> = (0..100_000).map(|_| p.sample_qvalue(&a, rng).unwrap().q).collect();
            let m = qs.iter().sum::<f64>() / qs.len() as f64;
            qs.iter().map(|q| (q - m).powi(2)).sum::<f64>() / qs.len() as f64
        };
        assert!(spread(1e4, &mut rng) > spread(1.0, &mut rng));
    }

    #[test]
    fn degenerate_posterior_concentrates() {
        let a = v(&[1.0]);
        let p = NormalGammaParams::new(v(&[2.5]), SpdMatrix::new(DMatrix::from_element(1, 1, 1e8)).unwrap(), 1e9, 1e9)
            .unwrap();
        let mut rng = RngStream::new(43, 0);
        for _ in 0..1000 {
            assert!((p.sample_qvalue(&a, &mut rng).unwrap().q - 2.5).abs() < 1e-3);
        }
    }

    fn unit_vector(raw: Vec<f64>) -> Option<DVector<f64>> {
        let v = DVector::from_vec(raw);
        let n = v.norm();
        (n > 1e-3).then(|| v / n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn beta_never_decreases(
            raw in proptest::collection::vec(-1.0f64..1.0, 1..6),
            xs in proptest::collection::vec(-50.0f64..50.0, 1..80),
        ) {
            let Some(a) = unit_vector(raw) else { return Ok(()) };
            let mut p = NormalGammaParams::initial(&a, xs[0], 1.0).unwrap();
            for &x in &xs[1..] {
                let before = p.beta();
                p.observe(&a, x).unwrap();
                prop_assert!(p.beta() >= before - 1e-12);
            }
            prop_assert_eq!(p.alpha(), 0.5 * xs.len() as f64);
        }

        #[test]
        fn chain_matches_closed_form(
            raw in proptest::collection::vec(-1.0f64..1.0, 1..9),
            xs in proptest::collection::vec(-10.0f64..10.0, 1..120),
        ) {
            let Some(a) = unit_vector(raw) else { return Ok(()) };
            let mut p = NormalGammaParams::initial(&a, xs[0], 1.0).unwrap();
            for &x in &xs[1..] {
                p.observe(&a, x).unwrap();
            }
            let cf = closed_form(&a, &xs, 1.0).unwrap();
            prop_assert!((p.u() - cf.u()).amax() <= 1e-9 * cf.u().amax().max(1.0));
            prop_assert!((p.lambda() - cf.lambda()).amax() <= 1e-9 * cf.lambda().amax());
            prop_assert!((p.beta() - cf.beta()).abs() <= 1e-9 * cf.beta());
            prop_assert_eq!(p.alpha(), cf.alpha());
        }
    }
}
