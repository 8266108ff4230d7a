use std::fmt::Write as _;
use std::path::PathBuf;

use ngbandit::analytics::{theorem_scale, EnvBoundReport, TheoremScaleInput};
use ngbandit::environment::{generate_contexts, sample_environment, BayesPriorSpec};
use ngbandit::RngStream;

use crate::error::CliError;
use crate::output::emit;

#[derive(Debug, Clone, Default)]
pub struct BoundsRequest {
    pub deltas: Option<Vec<f64>>,
    pub taus: Option<Vec<f64>>,
    /// Sample the environment from the prior with this seed instead.
    pub env_seed: Option<u64>,
    pub arms: Option<usize>,
    pub dim: usize,
    pub alpha_star: Option<f64>,
    pub beta_star: f64,
    pub horizon: u64,
    pub epsilon: Option<f64>,
    pub csv: Option<PathBuf>,
}

fn environment(req: &BoundsRequest) -> Result<Option<(Vec<f64>, Vec<f64>)>, CliError> {
    match (&req.deltas, &req.taus, req.env_seed) {
        (Some(d), Some(t), None) => Ok(Some((d.clone(), t.clone()))),
        (None, None, Some(seed)) => {
            let arms = req.arms.ok_or_else(|| CliError::Config("--env-seed needs --arms".into()))?;
            let spec = BayesPriorSpec::isotropic(arms, req.dim, req.alpha_star.unwrap_or(3.0), req.beta_star)?;
            let mut rng = RngStream::new(seed, 0);
            let contexts = generate_contexts(arms, req.dim, &mut rng)?;
            let env = sample_environment(&spec, &contexts, &mut rng)?;
            Ok(Some((env.delta, env.tau)))
        }
        (None, None, None) => Ok(None),
        (Some(_), None, _) | (None, Some(_), _) => {
            Err(CliError::Config("--deltas and --taus must be given together".into()))
        }
        _ => Err(CliError::Config("give either --deltas/--taus or --env-seed, not both".into())),
    }
}

/// Key-value report lines and, when asked, a per-arm CSV. Arms are
/// numbered from 1.
pub fn render(req: &BoundsRequest) -> Result<(String, Option<String>), CliError> {
    let mut text = String::new();
    let mut csv = None;
    let env = environment(req)?;
    if let Some((deltas, taus)) = &env {
        let report = EnvBoundReport::new(deltas, taus, req.horizon)?;
        let _ = writeln!(text, "arms={}", deltas.len());
        let _ = writeln!(text, "horizon={}", report.horizon);
        let _ = writeln!(text, "tau0={}", report.tau0);
        let _ = writeln!(text, "C={}", report.c);
        let _ = writeln!(text, "D={}", report.d);
        let mut table = String::from("arm,delta,tau,optimal,M,zeta,eps,rho,main_lemma_bound,countrho_bound\n");
        for (i, arm) in report.arms.iter().enumerate() {
            let k = i + 1;
            let _ = writeln!(text, "arm.{k}.delta={}", deltas[i]);
            let _ = writeln!(text, "arm.{k}.tau={}", taus[i]);
            match arm {
                None => {
                    let _ = writeln!(text, "arm.{k}.optimal=true");
                    let _ = writeln!(table, "{k},{},{},true,,,,,,", deltas[i], taus[i]);
                }
                Some(b) => {
                    let g = &b.governing;
                    let _ = writeln!(text, "arm.{k}.M={}", b.m);
                    let _ = writeln!(text, "arm.{k}.zeta={}", g.zeta);
                    let _ = writeln!(text, "arm.{k}.eps={}", g.eps);
                    let _ = writeln!(text, "arm.{k}.rho={}", g.rho);
                    let _ = writeln!(text, "arm.{k}.main_lemma_bound={}", b.main_lemma_bound);
                    let _ = writeln!(text, "arm.{k}.countrho_bound={}", b.countrho_bound);
                    let _ = writeln!(
                        table,
                        "{k},{},{},false,{},{},{},{},{},{}",
                        b.delta, taus[i], b.m, g.zeta, g.eps, g.rho, b.main_lemma_bound, b.countrho_bound
                    );
                }
            }
        }
        csv = Some(table);
    } else if req.csv.is_some() {
        return Err(CliError::Config("--csv needs an environment (--deltas/--taus or --env-seed)".into()));
    }

    if let Some(epsilon) = req.epsilon {
        let alpha_star =
            req.alpha_star.ok_or_else(|| CliError::Config("theorem scale needs --alpha-star".into()))?;
        let arms = env
            .as_ref()
            .map(|(d, _)| d.len())
            .or(req.arms)
            .ok_or_else(|| CliError::Config("theorem scale needs --arms or an environment".into()))?;
        let input = TheoremScaleInput { arms, horizon: req.horizon, epsilon, alpha_star };
        let scale = theorem_scale(&input)?;
        if env.is_none() {
            let _ = writeln!(text, "arms={arms}");
            let _ = writeln!(text, "horizon={}", req.horizon);
        }
        let _ = writeln!(text, "epsilon={epsilon}");
        let _ = writeln!(text, "alpha_star={alpha_star}");
        let _ = writeln!(text, "theorem_scale={scale}");
    }
    if text.is_empty() {
        return Err(CliError::Config("nothing to report: give --deltas/--taus, --env-seed or --epsilon".into()));
    }
    Ok((text, csv))
}

pub fn run(req: &BoundsRequest) -> Result<(), CliError> {
    let (text, csv) = render(req)?;
    emit(None, &text)?;
    if let (Some(path), Some(table)) = (&req.csv, csv) {
        emit(Some(path), &table)?;
    }
    Ok(())
}
