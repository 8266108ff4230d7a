//! One-sample Kolmogorov–Smirnov test with asymptotic p-values.

use std::f64::consts::PI;

/// `sup |F_n − F|`; sorts `samples` in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_unstable_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// Survival function of the Kolmogorov distribution, `P(K > x)`.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.0 {
        // Jacobi-transformed series for the CDF converges fast for small x.
        let mut cdf = 0.0;
        for k in 1..=50 {
            let m = (2 * k - 1) as f64;
            let term = (-(m * m) * PI * PI / (8.0 * x * x)).exp();
            cdf += term;
            if term < 1e-17 * cdf {
                break;
            }
        }
        return 1.0 - (2.0 * PI).sqrt() / x * cdf;
    }
    let mut sf = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * x * x).exp();
        sf += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sf).clamp(0.0, 1.0)
}

/// Asymptotic p-value for statistic `d` from `n` samples.
pub fn kolmogorov_pvalue(d: f64, n: usize) -> f64 {
    kolmogorov_sf(d * (n as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub pvalue: f64,
    pub samples: usize,
}

impl KsOutcome {
    pub fn run<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> Self {
        let statistic = ks_statistic(samples, cdf);
        Self { statistic, pvalue: kolmogorov_pvalue(statistic, samples.len()), samples: samples.len() }
    }

    pub fn passes(&self, level: f64) -> bool {
        self.pvalue >= level
    }
}
