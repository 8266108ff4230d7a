//! Regret-bound evaluators and Monte-Carlo validators.

pub mod bounds;
pub mod ks;
pub mod validate;

pub use bounds::{
    compute_cd, compute_mk, countrho_bound, main_lemma_bound, solve_governing, theorem_scale, ArmBound, Cd,
    EnvBoundReport, GoverningSolution, TheoremScaleInput,
};
pub use ks::{kolmogorov_pvalue, ks_statistic, KsOutcome};
pub use validate::{
    validate_appendix, validate_conddist, validate_delta_moments, validate_invgamma_max, validate_joint_events,
    validate_lambert, AppendixSuiteReport, ArmModel, ArmPair, CondDistReport, DeltaMomentReport, DeltaMomentSetup,
    InvGammaMaxReport, InvGammaMaxSetup, JointEventReport, LambertGridReport,
};
