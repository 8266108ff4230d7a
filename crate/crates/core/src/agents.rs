//! Bandit policies behind one agent type.
//!
//! `ng_ts` is normal-gamma Thompson sampling; `gauss_ts` is Gaussian linear TS
//! with a known precision (only `u` and `Λ` are learned); `random` plays
//! uniformly; `oracle` always plays the optimal arm it was given.
//!
//! By default each arm's posterior starts from its first observation as
//! `(x₁a, I, ½, β₁)`, and [`select_action`](Agent::select_action) requires
//! every arm to have been observed once. With [`PosteriorInit::Prior`] every
//! arm instead starts at `NG(0, I, α, β)` and all observations, the first
//! included, go through the update recurrence.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;

use crate::environment::EnvironmentInstance;
use crate::error::{Error, Result};
use crate::mathcore::SpdMatrix;
use crate::posterior::{NormalGammaParams, PrecisionDraw, QValueSampler, DEFAULT_BETA1};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    NgTs,
    GaussTs,
    Random,
    Oracle,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [AgentKind::NgTs, AgentKind::GaussTs, AgentKind::Random, AgentKind::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::NgTs => "ng_ts",
            AgentKind::GaussTs => "gauss_ts",
            AgentKind::Random => "random",
            AgentKind::Oracle => "oracle",
        }
    }

    /// Tag for the per-agent policy substream.
    pub(crate) fn stream_tag(self) -> u64 {
        match self {
            AgentKind::NgTs => 1,
            AgentKind::GaussTs => 2,
            AgentKind::Random => 3,
            AgentKind::Oracle => 4,
        }
    }

    fn uses_posterior(self) -> bool {
        matches!(self, AgentKind::NgTs | AgentKind::GaussTs)
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown agent kind `{s}`")))
    }
}

/// Where an arm's posterior starts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PosteriorInit {
    /// `(x₁a, I, ½, β₁)` after the first observation.
    #[default]
    FirstObservation,
    /// `NG(0, I, α, β)` before any observation. `gauss_ts` uses only the
    /// location part `N(0, I)`.
    Prior { alpha: f64, beta: f64 },
}

impl PosteriorInit {
    pub fn name(self) -> &'static str {
        match self {
            PosteriorInit::FirstObservation => "first_observation",
            PosteriorInit::Prior { .. } => "prior",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentOptions {
    /// Precision `1/σ²` assumed by `gauss_ts`.
    pub fixed_precision: f64,
    /// `β₁` given to an arm's posterior at its first observation.
    pub beta1: f64,
    pub init: PosteriorInit,
}

impl Default for AgentOptions {
    fn default() -> Self {
        Self { fixed_precision: 1.0, beta1: DEFAULT_BETA1, init: PosteriorInit::FirstObservation }
    }
}

impl AgentOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.fixed_precision > 0.0) {
            return Err(Error::Config(format!("fixed precision must be positive, got {}", self.fixed_precision)));
        }
        if !(self.beta1 > 0.0 && self.beta1.is_finite()) {
            return Err(Error::Config(format!("beta1 must be positive, got {}", self.beta1)));
        }
        if let PosteriorInit::Prior { alpha, beta } = self.init {
            if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
                return Err(Error::Config(format!("prior shape and rate must be positive, got ({alpha}, {beta})")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct ArmState {
    posterior: NormalGammaParams,
    sampler: QValueSampler,
}

#[derive(Debug, Clone)]
pub struct Agent {
    kind: AgentKind,
    options: AgentOptions,
    contexts: Vec<DVector<f64>>,
    arms: Vec<Option<ArmState>>,
    counts: Vec<u64>,
    oracle_arm: Option<usize>,
}

impl Agent {
    pub fn new(kind: AgentKind, contexts: Vec<DVector<f64>>, options: AgentOptions) -> Result<Self> {
        options.validate()?;
        if contexts.is_empty() {
            return Err(Error::InvalidParameter("agent needs at least one arm".into()));
        }
        let k = contexts.len();
        let mut agent = Self { kind, options, contexts, arms: vec![None; k], counts: vec![0; k], oracle_arm: None };
        if let (PosteriorInit::Prior { alpha, beta }, true) = (options.init, kind.uses_posterior()) {
            let d = agent.contexts[0].len();
            for arm in 0..k {
                let prior = NormalGammaParams::new(DVector::zeros(d), SpdMatrix::identity(d), alpha, beta)?;
                agent.set_posterior(arm, prior)?;
            }
        }
        Ok(agent)
    }

    /// Agent for `env`'s contexts; an oracle is told the optimal arm.
    pub fn for_environment(kind: AgentKind, env: &EnvironmentInstance, options: AgentOptions) -> Result<Self> {
        let mut agent = Self::new(kind, env.contexts.clone(), options)?;
        if kind == AgentKind::Oracle {
            agent.oracle_arm = Some(env.optimal_index);
        }
        Ok(agent)
    }

    pub fn set_oracle_arm(&mut self, k: usize) -> Result<()> {
        self.check_arm(k)?;
        self.oracle_arm = Some(k);
        Ok(())
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn arm_count(&self) -> usize {
        self.contexts.len()
    }

    /// Pull counts `n_k`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn posterior(&self, k: usize) -> Option<&NormalGammaParams> {
        self.arms.get(k)?.as_ref().map(|s| &s.posterior)
    }

    /// Replaces arm `k`'s posterior outright (pull counts are not touched).
    pub fn set_posterior(&mut self, k: usize, posterior: NormalGammaParams) -> Result<()> {
        self.check_arm(k)?;
        let sampler = QValueSampler::new(&posterior, &self.contexts[k])?;
        self.arms[k] = Some(ArmState { posterior, sampler });
        Ok(())
    }

    fn check_arm(&self, k: usize) -> Result<()> {
        if k >= self.arm_count() {
            return Err(Error::InvalidArm { index: k, arms: self.arm_count() });
        }
        Ok(())
    }

    fn precision_draw(&self) -> PrecisionDraw {
        match self.kind {
            AgentKind::GaussTs => PrecisionDraw::Fixed(self.options.fixed_precision),
            _ => PrecisionDraw::Posterior,
        }
    }

    /// One Q-value per arm, drawn in ascending arm order.
    pub fn sample_qvalues<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let precision = self.precision_draw();
        self.arms
            .iter()
            .enumerate()
            .map(|(k, arm)| {
                arm.as_ref()
                    .map(|s| s.sampler.sample(precision, rng).q)
                    .ok_or(Error::UninitializedArm(k))
            })
            .collect()
    }

    pub fn select_action<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        match self.kind {
            AgentKind::Random => Ok(rng.random_range(0..self.arm_count())),
            AgentKind::Oracle => self
                .oracle_arm
                .ok_or_else(|| Error::Config("oracle agent was not given the optimal arm".into())),
            AgentKind::NgTs | AgentKind::GaussTs => {
                let precision = self.precision_draw();
                let mut best = (0, f64::NEG_INFINITY);
                for (k, arm) in self.arms.iter().enumerate() {
                    let state = arm.as_ref().ok_or(Error::UninitializedArm(k))?;
                    let q = state.sampler.sample(precision, rng).q;
                    if k == 0 || q > best.1 {
                        best = (k, q);
                    }
                }
                Ok(best.0)
            }
        }
    }

    /// Feeds reward `x` from arm `k` to the agent.
    pub fn observe(&mut self, k: usize, x: f64) -> Result<()> {
        self.check_arm(k)?;
        if self.kind.uses_posterior() {
            let context = &self.contexts[k];
            let posterior = match self.arms[k].take() {
                None => NormalGammaParams::initial(context, x, self.options.beta1)?,
                Some(ArmState { mut posterior, .. }) => {
                    if self.kind == AgentKind::NgTs {
                        posterior.observe(context, x)?;
                    } else {
                        posterior.update_location(context, x)?;
                    }
                    posterior
                }
            };
            let sampler = QValueSampler::new(&posterior, context)?;
            self.arms[k] = Some(ArmState { posterior, sampler });
        }
        self.counts[k] += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posterior::closed_form;
    use crate::rng::RngStream;

    fn unit(xs: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(xs);
        let n = v.norm();
        v / n
    }

    fn initialized(kind: AgentKind, contexts: Vec<DVector<f64>>) -> Agent {
        let mut agent = Agent::new(kind, contexts, AgentOptions::default()).unwrap();
        agent.set_oracle_arm(0).unwrap();
        for k in 0..agent.arm_count() {
            agent.observe(k, 0.1 * k as f64).unwrap();
        }
        agent
    }

    #[test]
    fn parse_kinds() {
        for kind in AgentKind::ALL {
            assert_eq!(kind.name().parse::<AgentKind>().unwrap(), kind);
        }
        assert!("ucb".parse::<AgentKind>().is_err());
    }

    #[test]
    fn single_arm_always_zero() {
        let mut rng = RngStream::new(1, 0);
        for kind in AgentKind::ALL {
            let agent = initialized(kind, vec![unit(&[1.0, 2.0])]);
            for _ in 0..20 {
                assert_eq!(agent.select_action(&mut rng).unwrap(), 0);
            }
        }
    }

    #[test]
    fn uninitialized_arm_is_an_error() {
        let mut agent = Agent::new(AgentKind::NgTs, vec![unit(&[1.0]), unit(&[-1.0])], AgentOptions::default()).unwrap();
        agent.observe(0, 1.0).unwrap();
        let mut rng = RngStream::new(2, 0);
        assert_eq!(agent.select_action(&mut rng).unwrap_err(), Error::UninitializedArm(1));
    }

    #[test]
    fn concentrated_posterior_wins() {
        let a1 = unit(&[1.0, 0.0]);
        let a2 = unit(&[0.0, 1.0]);
        let mut agent = Agent::new(AgentKind::NgTs, vec![a1.clone(), a2.clone()], AgentOptions::default()).unwrap();
        let mut rng = RngStream::new(3, 0);
        let xs1: Vec<f64> = (0..1_000_000).map(|_| 10.0 + crate::mathcore::standard_normal(&mut rng)).collect();
        let xs2: Vec<f64> = (0..1_000_000).map(|_| crate::mathcore::standard_normal(&mut rng)).collect();
        agent.set_posterior(0, closed_form(&a1, &xs1, 1.0).unwrap()).unwrap();
        agent.set_posterior(1, closed_form(&a2, &xs2, 1.0).unwrap()).unwrap();
        let wins = (0..1000).filter(|_| agent.select_action(&mut rng).unwrap() == 0).count();
        assert!(wins >= 999);
    }

    #[test]
    fn equal_q_values_pick_lowest_index() {
        // Infinite assumed precision turns each draw into the posterior mean.
        let opts = AgentOptions { fixed_precision: f64::INFINITY, ..AgentOptions::default() };
        let a = unit(&[1.0]);
        let mut agent = Agent::new(AgentKind::GaussTs, vec![a.clone(); 4], opts).unwrap();
        for k in 0..4 {
            agent.observe(k, 2.0).unwrap();
        }
        let mut rng = RngStream::new(4, 0);
        assert_eq!(agent.sample_qvalues(&mut rng).unwrap(), vec![2.0; 4]);
        assert_eq!(agent.select_action(&mut rng).unwrap(), 0);
    }

    #[test]
    fn ng_observe_moves_alpha_by_half() {
        let mut agent = initialized(AgentKind::NgTs, vec![unit(&[1.0, 1.0]), unit(&[1.0, -1.0])]);
        let before = agent.posterior(1).unwrap().alpha();
        agent.observe(1, 0.4).unwrap();
        assert_eq!(agent.posterior(1).unwrap().alpha(), before + 0.5);
    }

    #[test]
    fn gauss_observe_keeps_alpha_beta() {
        let mut agent = initialized(AgentKind::GaussTs, vec![unit(&[1.0, 1.0]), unit(&[1.0, -1.0])]);
        let before = agent.posterior(1).unwrap().clone();
        agent.observe(1, 5.0).unwrap();
        let after = agent.posterior(1).unwrap();
        assert_eq!(after.alpha(), before.alpha());
        assert_eq!(after.beta(), before.beta());
        assert_ne!(after.u(), before.u());
    }

    #[test]
    fn observe_leaves_other_arms_alone() {
        for kind in [AgentKind::NgTs, AgentKind::GaussTs] {
            let mut agent = initialized(kind, vec![unit(&[1.0, 0.2]), unit(&[0.3, -1.0]), unit(&[1.0, 1.0])]);
            let others: Vec<_> = [0, 2].iter().map(|&k| agent.posterior(k).unwrap().clone()).collect();
            agent.observe(1, -3.0).unwrap();
            assert_eq!(agent.posterior(0).unwrap(), &others[0]);
            assert_eq!(agent.posterior(2).unwrap(), &others[1]);
        }
    }

    #[test]
    fn invalid_arm() {
        let mut agent = initialized(AgentKind::Random, vec![unit(&[1.0])]);
        assert_eq!(agent.observe(3, 1.0).unwrap_err(), Error::InvalidArm { index: 3, arms: 1 });
    }

    #[test]
    fn ng_agent_state_equals_closed_form() {
        let a = unit(&[0.3, -0.2, 0.9]);
        let mut agent = Agent::new(AgentKind::NgTs, vec![a.clone()], AgentOptions::default()).unwrap();
        let xs: Vec<f64> = (0..300).map(|i| (i as f64 * 0.71).sin() + 0.5).collect();
        for &x in &xs {
            agent.observe(0, x).unwrap();
        }
        let cf = closed_form(&a, &xs, 1.0).unwrap();
        let p = agent.posterior(0).unwrap();
        assert!((p.u() - cf.u()).amax() < 1e-9);
        assert!((p.beta() - cf.beta()).abs() < 1e-9 * cf.beta());
        assert_eq!(p.alpha(), cf.alpha());
        assert_eq!(agent.counts(), &[300]);
    }

    #[test]
    fn draws_consumed_in_fixed_order() {
        let agent = initialized(AgentKind::NgTs, vec![unit(&[1.0, 0.0]), unit(&[0.0, 1.0]), unit(&[1.0, 1.0])]);
        let mut r1 = RngStream::new(5, 0);
        let mut r2 = RngStream::new(5, 0);
        let qs = agent.sample_qvalues(&mut r1).unwrap();
        let k = agent.select_action(&mut r2).unwrap();
        assert_eq!(k, crate::environment::argmax_lowest(&qs).0);
        // both generators advanced identically
        assert_eq!(rand::RngCore::next_u64(&mut r1), rand::RngCore::next_u64(&mut r2));
    }
}
