//! Pointwise checks of the logarithm and Gaussian-tail inequalities used by
//! the regret analysis.

use super::special::gaussian_q;
use crate::error::{Error, Result};

/// Outcome of checking one inequality `lhs ≥ rhs` over a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub points: usize,
    pub violations: usize,
    /// Smallest `lhs − rhs` seen (negative means a violation).
    pub min_slack: f64,
    pub max_slack: f64,
    pub worst_point: f64,
}

impl InequalityCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            points: 0,
            violations: 0,
            min_slack: f64::INFINITY,
            max_slack: f64::NEG_INFINITY,
            worst_point: f64::NAN,
        }
    }

    fn record(&mut self, x: f64, lhs: f64, rhs: f64) {
        self.record_slack(x, lhs - rhs);
    }

    fn record_slack(&mut self, x: f64, slack: f64) {
        self.points += 1;
        if !(slack >= 0.0) {
            self.violations += 1;
        }
        if slack < self.min_slack || self.worst_point.is_nan() {
            self.min_slack = slack;
            self.worst_point = x;
        }
        self.max_slack = self.max_slack.max(slack);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppendixReport {
    /// `ln(1 + x) ≥ 2x / (2 + x)` for every grid point.
    pub log_lower: InequalityCheck,
    /// `1 / ln(1/x) ≥ x / (1 − x)` for the grid points inside (0, 1).
    pub reciprocal_log: InequalityCheck,
}

impl AppendixReport {
    pub fn passed(&self) -> bool {
        self.log_lower.passed() && self.reciprocal_log.passed()
    }
}

/// Checks both logarithm inequalities on `grid`.
///
/// Every point must satisfy `x ≥ 0`; the reciprocal inequality is checked on
/// the subset with `0 < x < 1`.
pub fn verify_appendix_inequalities(grid: &[f64]) -> Result<AppendixReport> {
    if let Some(&bad) = grid.iter().find(|x| !(**x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain(format!("log inequalities need finite x >= 0, got {bad}")));
    }
    let mut log_lower = InequalityCheck::new("ln(1+x) >= 2x/(2+x)");
    let mut reciprocal_log = InequalityCheck::new("1/ln(1/x) >= x/(1-x)");
    for &x in grid {
        log_lower.record_slack(x, log_lower_slack(x));
        if x > 0.0 && x < 1.0 {
            // ln(1/x) = -ln(x); near 1 use ln_1p on the exact difference.
            let log_inv = if x > 0.5 { -(x - 1.0).ln_1p() } else { -x.ln() };
            reciprocal_log.record(x, 1.0 / log_inv, x / (1.0 - x));
        }
    }
    Ok(AppendixReport { log_lower, reciprocal_log })
}

/// `ln(1 + x) − 2x/(2 + x)`.
///
/// The difference is about `x³/12`, far below the rounding error of either
/// term for small `x`. With `t = x/(2 + x)`, `ln(1 + x) = 2 atanh t`, so the
/// difference is `2(t³/3 + t⁵/5 + …)`, summed directly when `t` is small.
fn log_lower_slack(x: f64) -> f64 {
    let t = x / (2.0 + x);
    if t > 1e-2 {
        return x.ln_1p() - 2.0 * t;
    }
    let t2 = t * t;
    let mut power = t * t2;
    let mut sum = 0.0;
    let mut k = 3.0;
    while power > 0.0 && power / k > sum * 1e-17 {
        sum += power / k;
        power *= t2;
        k += 2.0;
    }
    2.0 * sum
}

/// Checks `Q(c) ≤ ½·exp(−c²/2)` for every `c ≥ 0` in `grid`.
pub fn verify_gaussian_tail_bound(grid: &[f64]) -> Result<InequalityCheck> {
    let mut check = InequalityCheck::new("Q(c) <= exp(-c^2/2)/2");
    for &c in grid {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!("tail bound needs finite c >= 0, got {c}")));
        }
        check.record(c, 0.5 * (-0.5 * c * c).exp(), gaussian_q(c));
    }
    Ok(check)
}
