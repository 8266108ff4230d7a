//! Episode runner and Bayesian-regret estimation.
//!
//! Replication `r` owns `RngStream(seed, r)`. Its environment comes from a
//! fixed substream, so every agent kind run with the same seed faces the same
//! environments; the policy and reward draws come from a per-agent substream.
//! Replications run in parallel and are reduced in index order, so results do
//! not depend on the worker count.

use rayon::prelude::*;

use crate::agents::{Agent, AgentKind, AgentOptions};
use crate::environment::{generate_contexts, sample_environment, BayesPriorSpec, EnvironmentInstance};
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const DEFAULT_RECORD_STRIDE: usize = 10;

const ENVIRONMENT_TAG: u64 = 0;
const CONTEXT_TAG: u64 = 1;
const POLICY_TAG_BASE: u64 = 100;
/// Stream id for the context set shared by all replications.
const SHARED_CONTEXT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: BayesPriorSpec,
    pub horizon: usize,
    pub replications: usize,
    pub agent: AgentKind,
    pub options: AgentOptions,
    pub seed: u64,
    pub record_stride: usize,
    /// One context set for every replication instead of a fresh one each.
    pub shared_contexts: bool,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.options.validate()?;
        if self.horizon < self.spec.arms {
            return Err(Error::Config(format!(
                "horizon {} is shorter than the {} forced initial pulls",
                self.horizon, self.spec.arms
            )));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    /// Cumulative regret at each round of [`snapshot_rounds`].
    pub cumulative: Vec<f64>,
    /// Final pull counts `n_k(T)`.
    pub pulls: Vec<u64>,
    pub env_id: u64,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BayesRegretCurve {
    pub rounds: Vec<usize>,
    pub mean: Vec<f64>,
    /// Sample standard deviation over `√replications`; `None` for a single
    /// replication.
    pub stderr: Option<Vec<f64>>,
    pub replications: usize,
}

impl BayesRegretCurve {
    /// Mean and standard error at `round`, if it was recorded.
    pub fn at_round(&self, round: usize) -> Option<(f64, Option<f64>)> {
        let i = self.rounds.iter().position(|&r| r == round)?;
        Some((self.mean[i], self.stderr.as_ref().map(|s| s[i])))
    }

    pub fn final_point(&self) -> (f64, Option<f64>) {
        let i = self.mean.len() - 1;
        (self.mean[i], self.stderr.as_ref().map(|s| s[i]))
    }
}

/// Rounds `stride, 2·stride, …` up to `horizon`, always ending at `horizon`.
pub fn snapshot_rounds(horizon: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    let mut rounds: Vec<usize> = (stride..=horizon).step_by(stride).collect();
    if rounds.last() != Some(&horizon) && horizon > 0 {
        rounds.push(horizon);
    }
    rounds
}

/// Plays one episode of `horizon` rounds: arm `k` is pulled at round `k + 1`
/// for the first `K` rounds, then the agent chooses. Each round adds the true
/// gap `Δ_{A_t}` to the cumulative regret.
pub fn run_episode(
    env: &EnvironmentInstance,
    kind: AgentKind,
    options: &AgentOptions,
    horizon: usize,
    record_stride: usize,
    rng: &mut RngStream,
) -> Result<RegretTrace> {
    let k = env.arms();
    if horizon < k {
        return Err(Error::Config(format!("horizon {horizon} is shorter than the {k} forced initial pulls")));
    }
    let stride = record_stride.max(1);
    let mut agent = Agent::for_environment(kind, env, *options)?;
    let mut cumulative = Vec::with_capacity(horizon / stride + 1);
    let mut regret = 0.0;
    for t in 1..=horizon {
        let arm = if t <= k { t - 1 } else { agent.select_action(rng)? };
        let x = env.sample_reward(arm, rng)?;
        agent.observe(arm, x)?;
        regret += env.delta[arm];
        if t % stride == 0 || t == horizon {
            cumulative.push(regret);
        }
    }
    Ok(RegretTrace { cumulative, pulls: agent.counts().to_vec(), env_id: rng.stream_id() })
}

/// Contexts and environment of replication `replication`.
pub fn replication_environment(config: &RunConfig, replication: u64) -> Result<EnvironmentInstance> {
    let contexts = replication_contexts(config, replication)?;
    let root = RngStream::new(config.seed, replication);
    sample_environment(&config.spec, &contexts, &mut root.substream(ENVIRONMENT_TAG))
}

fn replication_contexts(config: &RunConfig, replication: u64) -> Result<Vec<nalgebra::DVector<f64>>> {
    let mut rng = if config.shared_contexts {
        RngStream::new(config.seed, SHARED_CONTEXT_STREAM)
    } else {
        RngStream::new(config.seed, replication).substream(CONTEXT_TAG)
    };
    generate_contexts(config.spec.arms, config.spec.dim, &mut rng)
}

fn run_replication(config: &RunConfig, replication: u64) -> Result<RegretTrace> {
    let env = replication_environment(config, replication)?;
    let mut rng = RngStream::new(config.seed, replication).substream(POLICY_TAG_BASE + config.agent.stream_tag());
    let mut trace = run_episode(&env, config.agent, &config.options, config.horizon, config.record_stride, &mut rng)?;
    trace.env_id = replication;
    Ok(trace)
}

/// One trace per replication, in replication order.
pub fn collect_traces(config: &RunConfig) -> Result<Vec<RegretTrace>> {
    config.validate()?;
    (0..config.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect()
}

/// Averages cumulative regret over `config.replications` sampled environments.
pub fn estimate_bayes_regret(config: &RunConfig) -> Result<BayesRegretCurve> {
    let traces = collect_traces(config)?;
    Ok(aggregate(&traces, snapshot_rounds(config.horizon, config.record_stride)))
}

/// Per-snapshot mean and standard error, summed in trace order.
pub fn aggregate(traces: &[RegretTrace], rounds: Vec<usize>) -> BayesRegretCurve {
    let n = traces.len();
    let points = rounds.len();
    let mut mean = vec![0.0; points];
    for trace in traces {
        for (m, v) in mean.iter_mut().zip(&trace.cumulative) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let stderr = (n > 1).then(|| {
        let mut ss = vec![0.0; points];
        for trace in traces {
            for ((s, v), m) in ss.iter_mut().zip(&trace.cumulative).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        ss.into_iter().map(|s| (s / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt()).collect()
    });
    BayesRegretCurve { rounds, mean, stderr, replications: n }
}

/// `episodes` independent episodes on one fixed environment; episode `e`
/// uses `RngStream(seed, e)`.
pub fn run_episodes(
    env: &EnvironmentInstance,
    kind: AgentKind,
    options: &AgentOptions,
    horizon: usize,
    episodes: usize,
    seed: u64,
) -> Result<Vec<RegretTrace>> {
    (0..episodes as u64)
        .into_par_iter()
        .map(|e| run_episode(env, kind, options, horizon, horizon, &mut RngStream::new(seed, e)))
        .collect()
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}
