//! Random variate generation.
//!
//! Gamma variates use the Marsaglia–Tsang squeeze for shape >= 1 and the
//! `G(a) = G(a + 1) * U^(1/a)` boost for shape < 1. Standard normals come from
//! the ziggurat in `rand_distr`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::linalg::SpdMatrix;
use crate::error::{Error, Result};

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Draw from Gamma(shape, rate); the mean is `shape / rate`.
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma shape must be positive, got {shape}")));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidParameter(format!("gamma rate must be positive, got {rate}")));
    }
    Ok(gamma_unit_rate(shape, rng) / rate)
}

/// Gamma(shape, 1) for a shape already known to be positive.
pub(crate) fn gamma_unit_rate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape < 1.0 {
        let boosted = marsaglia_tsang(shape + 1.0, rng);
        return boosted * open_unit(rng).powf(1.0 / shape);
    }
    marsaglia_tsang(shape, rng)
}

fn marsaglia_tsang<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = open_unit(rng);
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Chi-square with `dof` degrees of freedom, as `2 * Gamma(dof / 2, 1)`.
pub fn sample_chi_square<R: Rng + ?Sized>(dof: f64, rng: &mut R) -> Result<f64> {
    if !(dof > 0.0) {
        return Err(Error::InvalidParameter(format!("chi-square dof must be positive, got {dof}")));
    }
    Ok(2.0 * gamma_unit_rate(0.5 * dof, rng))
}

/// `N_d(mean, covariance)` with the covariance factor computed once.
#[derive(Debug, Clone)]
pub struct MultivariateNormal {
    mean: DVector<f64>,
    factor: DMatrix<f64>,
}

impl MultivariateNormal {
    pub fn new(mean: DVector<f64>, covariance: &SpdMatrix) -> Result<Self> {
        if mean.len() != covariance.dim() {
            return Err(Error::DimensionMismatch { expected: covariance.dim(), got: mean.len() });
        }
        Ok(Self { mean, factor: covariance.cholesky_lower()? })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        self.sample_scaled(1.0, rng)
    }

    /// Draw from `N(mean, scale² · covariance)`; consumes `d` normals.
    pub fn sample_scaled<R: Rng + ?Sized>(&self, scale: f64, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_iterator(self.dim(), (0..self.dim()).map(|_| standard_normal(rng)));
        &self.mean + (&self.factor * z) * scale
    }
}

pub fn sample_mvnormal<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    covariance: &SpdMatrix,
    rng: &mut R,
) -> Result<DVector<f64>> {
    Ok(MultivariateNormal::new(mean.clone(), covariance)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn gamma_mean_shape3_rate2() {
        let mut rng = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_gamma(3.0, 2.0, &mut rng).unwrap()).collect();
        let (m, _) = moments(&xs);
        assert!((m - 1.5).abs() < 0.01, "mean {m}");
    }

    #[test]
    fn gamma_variance_shape3_rate1() {
        let mut rng = RngStream::new(12, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| sample_gamma(3.0, 1.0, &mut rng).unwrap()).collect();
        let (_, v) = moments(&xs);
        assert!((v - 3.0).abs() < 0.05, "variance {v}");
    }

    #[test]
    fn gamma_means_within_five_standard_errors() {
        for (i, &(shape, rate)) in [(0.5, 1.0), (3.0, 2.0), (10.0, 10.0)].iter().enumerate() {
            let mut rng = RngStream::new(13, i as u64);
            let n = 1_000_000;
            let xs: Vec<f64> = (0..n).map(|_| sample_gamma(shape, rate, &mut rng).unwrap()).collect();
            let (m, _) = moments(&xs);
            let se = (shape / (rate * rate) / n as f64).sqrt();
            assert!((m - shape / rate).abs() < 5.0 * se, "({shape},{rate}): mean {m}");
        }
    }

    #[test]
    fn gamma_rejects_bad_parameters() {
        let mut rng = RngStream::new(0, 0);
        assert!(matches!(sample_gamma(0.0, 1.0, &mut rng), Err(Error::InvalidParameter(_))));
        assert!(sample_gamma(1.0, 0.0, &mut rng).is_err());
        assert!(sample_gamma(-1.0, 1.0, &mut rng).is_err());
        assert!(sample_gamma(f64::NAN, 1.0, &mut rng).is_err());
    }

    #[test]
    fn mvnormal_standard_2d() {
        let mut rng = RngStream::new(21, 0);
        let mvn = MultivariateNormal::new(DVector::zeros(2), &SpdMatrix::identity(2)).unwrap();
        let n = 1_000_000;
        let mut sum = DVector::<f64>::zeros(2);
        let mut outer = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let x = mvn.sample(&mut rng);
            sum += &x;
            outer += &x * x.transpose();
        }
        let mean = sum / n as f64;
        let cov = outer / n as f64 - &mean * mean.transpose();
        assert!(mean.amax() < 0.005, "mean {mean}");
        assert!((cov - DMatrix::identity(2, 2)).amax() < 0.01);
    }

    #[test]
    fn mvnormal_scalar_case() {
        let mut rng = RngStream::new(22, 0);
        let cov = SpdMatrix::new(DMatrix::from_element(1, 1, 4.0)).unwrap();
        let mvn = MultivariateNormal::new(DVector::from_element(1, 5.0), &cov).unwrap();
        let xs: Vec<f64> = (0..1_000_000).map(|_| mvn.sample(&mut rng)[0]).collect();
        let (m, v) = moments(&xs);
        assert!((m - 5.0).abs() < 0.01);
        assert!((v - 4.0).abs() < 0.05);
    }

    #[test]
    fn mvnormal_rejects_indefinite_covariance() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(SpdMatrix::new(m).is_err());
    }

    #[test]
    fn replay_is_bit_identical() {
        let draw = |seed| {
            let mut rng = RngStream::new(seed, 9);
            let g = sample_gamma(0.7, 1.3, &mut rng).unwrap();
            let c = sample_chi_square(3.0, &mut rng).unwrap();
            let v = sample_mvnormal(&DVector::zeros(3), &SpdMatrix::identity(3), &mut rng).unwrap();
            (g.to_bits(), c.to_bits(), v.iter().map(|x| x.to_bits()).collect::<Vec<_>>())
        };
        assert_eq!(draw(5), draw(5));
    }
}
