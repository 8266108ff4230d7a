use std::fmt::Write as _;

use ngbandit::agents::AgentKind;
use ngbandit::simulator::{estimate_bayes_regret, BayesRegretCurve};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::emit;

pub const CSV_HEADER: &str = "round,agent,alpha_star,beta_star,replications,mean_cum_regret,stderr";

/// One row per (agent, snapshot). A single replication has no standard
/// error and prints `NaN`.
pub fn render_csv(config: &ExperimentConfig, curves: &[(AgentKind, BayesRegretCurve)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (agent, curve) in curves {
        for (i, round) in curve.rounds.iter().enumerate() {
            let se = curve.stderr.as_ref().map_or(f64::NAN, |s| s[i]);
            let _ = writeln!(
                out,
                "{round},{agent},{},{},{},{},{se}",
                config.alpha_star, config.beta_star, curve.replications, curve.mean[i]
            );
        }
    }
    out
}

/// Every agent sees the same environment sequence: replication `r` draws
/// its environment from a stream that depends only on `(seed, r)`.
pub fn run(config: &ExperimentConfig) -> Result<(), CliError> {
    if !config.spec()?.supports_regret_theorem() {
        eprintln!(
            "warning: alpha_star = {} <= 2.5; the regret theorem does not cover this prior (simulation proceeds)",
            config.alpha_star
        );
    }
    let mut curves = Vec::with_capacity(config.agents.len());
    for &agent in &config.agents {
        curves.push((agent, estimate_bayes_regret(&config.run_config(agent)?)?));
    }
    emit(config.out.as_deref(), &render_csv(config, &curves))
}
