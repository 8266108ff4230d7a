//! Samplers, special functions and small dense linear algebra.

mod inequalities;
mod linalg;
mod sampling;
mod special;

pub use inequalities::{
    verify_appendix_inequalities, verify_gaussian_tail_bound, AppendixReport, InequalityCheck,
};
pub use linalg::SpdMatrix;
pub(crate) use linalg::{cholesky_lower, spd_inverse, symmetrize};
#[cfg(test)]
pub(crate) use linalg::quad_form;
pub use sampling::{
    open_unit, sample_chi_square, sample_gamma, sample_mvnormal, standard_normal,
    MultivariateNormal,
};
pub use special::{chi_square_threshold, gaussian_q, lambert_w0};
