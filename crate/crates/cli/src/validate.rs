use std::fmt::Write as _;

use clap::ValueEnum;
use ngbandit::analytics::{
    validate_appendix, validate_conddist, validate_delta_moments, validate_invgamma_max, validate_joint_events,
    validate_lambert, ArmModel, ArmPair, DeltaMomentSetup, InvGammaMaxSetup,
};

use crate::error::CliError;
use crate::output::emit;

const LAMBERT_POINTS: usize = 10_000;
const LAMBERT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Suite {
    Conddist,
    JointEvents,
    DeltaMoments,
    Appendix,
    All,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

#[derive(Debug, Default)]
struct Summary {
    text: String,
    checks: usize,
    failed: usize,
}

impl Summary {
    fn record(&mut self, passed: bool, line: String) {
        self.checks += 1;
        if !passed {
            self.failed += 1;
        }
        let _ = writeln!(self.text, "{} {line}", if passed { "PASS" } else { "FAIL" });
    }
}

fn run_suites(suite: Suite, mc: usize, seed: u64) -> Result<Summary, CliError> {
    let mut s = Summary::default();
    if suite.includes(Suite::Conddist) {
        for tau in [0.5, 1.0, 4.0] {
            for n in [2, 10, 50] {
                let r = validate_conddist(ArmModel { mu: 0.0, tau }, n, mc, seed)?;
                s.record(
                    r.passed(),
                    format!(
                        "conddist tau={tau} n={n} mc={mc} mean_ks_p={} scale_ks_p={} corr={} corr_limit={}",
                        r.mean_ks.pvalue, r.scale_ks.pvalue, r.correlation, r.correlation_limit
                    ),
                );
            }
        }
    }
    if suite.includes(Suite::JointEvents) {
        for delta in [0.5, 1.0, 2.0] {
            for n in [1, 5, 20] {
                let r = validate_joint_events(ArmPair { tau_optimal: 1.0, tau_k: 1.0, delta }, n, mc, seed)?;
                s.record(
                    r.passed(),
                    format!(
                        "joint_events delta={delta} n={n} mc={mc} rho={} p_optimal={} bound_optimal={} p_suboptimal={} bound_suboptimal={}",
                        r.rho, r.p_optimal, r.bound_optimal, r.p_suboptimal, r.bound_suboptimal
                    ),
                );
            }
        }
    }
    if suite.includes(Suite::DeltaMoments) {
        let setup = DeltaMomentSetup::default();
        let r = validate_delta_moments(setup, mc, seed)?;
        for c in &r.checks {
            s.record(
                c.passed(),
                format!(
                    "delta_moments ell={} arms={} alpha_star={} beta_star={} mc={mc} lhs={} rhs={} gap={} gap_se={}",
                    c.ell, setup.arms, setup.alpha_star, setup.beta_star, c.lhs, c.rhs, c.gap, c.gap_se
                ),
            );
        }
        let r = validate_invgamma_max(InvGammaMaxSetup::default(), mc, seed)?;
        for p in &r.points {
            s.record(
                p.mean <= p.bound + ngbandit::analytics::validate::SE_MARGIN * p.se,
                format!("invgamma_max arms={} mc={mc} mean={} se={} bound={}", p.arms, p.mean, p.se, p.bound),
            );
        }
    }
    if suite.includes(Suite::Appendix) {
        let r = validate_appendix()?;
        for c in r.checks() {
            s.record(
                c.passed(),
                format!("appendix check={:?} points={} violations={} min_slack={}", c.name, c.points, c.violations, c.min_slack),
            );
        }
        let w = validate_lambert(LAMBERT_POINTS)?;
        s.record(
            w.passed(LAMBERT_TOL),
            format!(
                "appendix check=\"lambert_w0\" points={} max_scaled_residual={} log_bound_violations={}",
                w.points, w.max_scaled_residual, w.log_bound_violations
            ),
        );
    }
    Ok(s)
}

/// Prints one line per check and a summary; any failed check is an error.
pub fn run(suite: Suite, mc: usize, seed: u64) -> Result<(), CliError> {
    if mc < 2 {
        return Err(CliError::Config(format!("--mc must be at least 2, got {mc}")));
    }
    let mut s = run_suites(suite, mc, seed)?;
    let _ = writeln!(s.text, "summary checks={} failed={}", s.checks, s.failed);
    emit(None, &s.text)?;
    if s.failed > 0 {
        return Err(CliError::Config(format!("{} of {} checks failed", s.failed, s.checks)));
    }
    Ok(())
}
