//! Flat `key = value` experiment configuration.
//!
//! Values are resolved in the order defaults, preset, config file, command
//! line; later sources win.

use std::path::{Path, PathBuf};

use ngbandit::agents::{AgentKind, AgentOptions, PosteriorInit};
use ngbandit::environment::BayesPriorSpec;
use ngbandit::simulator::{RunConfig, DEFAULT_RECORD_STRIDE};

use crate::error::{io_error, CliError};

pub const PRESETS: [&str; 3] = ["fig2a", "fig2b", "fig2c"];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Option<String>,
    pub arms: usize,
    pub dim: usize,
    pub alpha_star: f64,
    pub beta_star: f64,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub stride: usize,
    pub shared_contexts: bool,
    pub agents: Vec<AgentKind>,
    pub fixed_precision: f64,
    pub beta1: f64,
    /// Start each arm at the environment prior instead of at its first
    /// observation.
    pub prior_init: bool,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let options = AgentOptions::default();
        Self {
            preset: None,
            arms: 10,
            dim: 5,
            alpha_star: 3.0,
            beta_star: 2.0,
            horizon: 1000,
            replications: 100,
            seed: 0,
            stride: DEFAULT_RECORD_STRIDE,
            shared_contexts: false,
            agents: vec![AgentKind::NgTs, AgentKind::GaussTs],
            fixed_precision: options.fixed_precision,
            beta1: options.beta1,
            prior_init: false,
            out: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| CliError::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("invalid value {value:?} for {key}, expected true or false"))),
    }
}

pub fn parse_agents(value: &str) -> Result<Vec<AgentKind>, CliError> {
    let agents = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<AgentKind>().map_err(CliError::from))
        .collect::<Result<Vec<_>, _>>()?;
    if agents.is_empty() {
        return Err(CliError::Config("agent list is empty".into()));
    }
    Ok(agents)
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "preset" => self.apply_preset(value)?,
            "arms" => self.arms = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "alpha_star" => self.alpha_star = parse(key, value)?,
            "beta_star" => self.beta_star = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "replications" => self.replications = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "stride" => self.stride = parse(key, value)?,
            "shared_contexts" => self.shared_contexts = parse_bool(key, value)?,
            "agents" => self.agents = parse_agents(value)?,
            "fixed_precision" => self.fixed_precision = parse(key, value)?,
            "beta1" => self.beta1 = parse(key, value)?,
            "init" => {
                self.prior_init = match value {
                    "first_observation" => false,
                    "prior" => true,
                    _ => {
                        return Err(CliError::Config(format!(
                            "invalid value {value:?} for init, expected first_observation or prior"
                        )))
                    }
                }
            }
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(CliError::Config(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    pub fn apply_preset(&mut self, name: &str) -> Result<(), CliError> {
        let beta_star = match name {
            "fig2a" => 2.0,
            "fig2b" => 1.0,
            "fig2c" => 3.0,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown preset {name:?}, expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        self.preset = Some(name.to_string());
        self.arms = 30;
        self.dim = 5;
        self.alpha_star = 3.0;
        self.beta_star = beta_star;
        self.horizon = 5000;
        self.replications = 10_000;
        self.shared_contexts = true;
        self.prior_init = true;
        self.agents = vec![AgentKind::NgTs, AgentKind::GaussTs];
        Ok(())
    }

    /// Defaults, then the preset (from the command line, else the file),
    /// then the file's other keys, then `overrides`.
    pub fn resolve(
        file: Option<&Path>,
        cli_preset: Option<&str>,
        overrides: &[(String, String)],
    ) -> Result<Self, CliError> {
        let entries = match file {
            Some(path) => parse_kv(&std::fs::read_to_string(path).map_err(|e| io_error(path, e))?)?,
            None => Vec::new(),
        };
        let mut config = Self::default();
        let file_preset = entries.iter().rev().find(|(k, _)| k == "preset").map(|(_, v)| v.as_str());
        if let Some(p) = cli_preset.or(file_preset) {
            config.apply_preset(p)?;
        }
        for (k, v) in entries.iter().filter(|(k, _)| k != "preset") {
            config.set(k, v)?;
        }
        for (k, v) in overrides {
            config.set(k, v)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.agents.is_empty() {
            return Err(CliError::Config("agent list is empty".into()));
        }
        for agent in &self.agents {
            self.run_config(*agent)?.validate()?;
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<BayesPriorSpec, CliError> {
        Ok(BayesPriorSpec::isotropic(self.arms, self.dim, self.alpha_star, self.beta_star)?)
    }

    pub fn init(&self) -> PosteriorInit {
        if self.prior_init {
            PosteriorInit::Prior { alpha: self.alpha_star, beta: self.beta_star }
        } else {
            PosteriorInit::FirstObservation
        }
    }

    pub fn run_config(&self, agent: AgentKind) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            spec: self.spec()?,
            horizon: self.horizon,
            replications: self.replications,
            agent,
            options: AgentOptions { fixed_precision: self.fixed_precision, beta1: self.beta1, init: self.init() },
            seed: self.seed,
            record_stride: self.stride,
            shared_contexts: self.shared_contexts,
        })
    }
}
