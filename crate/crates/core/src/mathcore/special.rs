//! Special functions: Lambert W₀, the Gaussian tail `Q`, and the chi-square
//! deviation threshold.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const HALLEY_MAX_ITER: usize = 50;
const HALLEY_TOL: f64 = 1e-14;

/// Principal branch of the Lambert W function on `[0, ∞)`.
///
/// Halley iteration on `f(w) = w·eʷ − x` started from `ln(1 + x)`, which lies
/// above the root for every `x > 0`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("lambert_w0 requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = x.ln_1p();
    for _ in 0..HALLEY_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        if (next - w).abs() <= HALLEY_TOL * next.abs() {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

/// Gaussian upper tail `Q(c) = 1 − Φ(c)`.
pub fn gaussian_q(c: f64) -> f64 {
    if c.is_nan() {
        return f64::NAN;
    }
    if c < 0.0 {
        return 1.0 - gaussian_q(-c);
    }
    0.5 * erfc_nonneg(c / std::f64::consts::SQRT_2)
}

/// `erfc(x)` for `x ≥ 0`.
///
/// Below `x² = 3/2` the positive-term series for `erf` is used (no
/// cancellation, and `erf(x) < 0.92` keeps `1 − erf` well conditioned); above
/// it, the Legendre continued fraction for `Γ(½, x²)` evaluated by modified
/// Lentz, which converges quickly once `x² > a + 1`.
fn erfc_nonneg(x: f64) -> f64 {
    let x2 = x * x;
    if x2 < 1.5 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

fn erf_series(x: f64) -> f64 {
    // erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (2n+1)!!
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let a = 0.5;
    let z = x * x;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-z).exp() * x / PI.sqrt() * h
}

/// Threshold `dof + 2√(dof·x) + 2x` exceeded by a χ²_dof variate with
/// probability at most `e^{-x}`.
pub fn chi_square_threshold(dof: u32, x: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidParameter("chi-square dof must be >= 1".into()));
    }
    if !(x > 0.0) {
        return Err(Error::InvalidParameter(format!("deviation x must be positive, got {x}")));
    }
    let k = f64::from(dof);
    Ok(k + 2.0 * (k * x).sqrt() + 2.0 * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::sampling::sample_chi_square;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;

    // Newton on w·eʷ − x, used only as an independent oracle.
    fn newton_w(x: f64) -> f64 {
        let mut w = if x < 1.0 { x } else { x.ln() };
        for _ in 0..200 {
            let ew = w.exp();
            let next = w - (w * ew - x) / (ew * (w + 1.0));
            if (next - w).abs() < 1e-15 * next.abs().max(1e-300) {
                return next;
            }
            w = next;
        }
        w
    }

    #[test]
    fn w0_fixed_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert_relative_eq!(lambert_w0(std::f64::consts::E).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn w0_at_one_matches_newton_oracle() {
        let w = lambert_w0(1.0).unwrap();
        assert_relative_eq!(w, newton_w(1.0), max_relative = 1e-14);
        assert_relative_eq!(w, 0.567_143_290_409_783_8, max_relative = 1e-14);
    }

    #[test]
    fn w0_rejects_negative() {
        assert!(matches!(lambert_w0(-0.1), Err(Error::Domain(_))));
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn w0_residual_on_log_grid() {
        for i in 0..=180 {
            let x = 10f64.powf(-6.0 + 18.0 * i as f64 / 180.0);
            let w = lambert_w0(x).unwrap();
            assert!((w * w.exp() - x).abs() <= 1e-10 * x.max(1.0), "x = {x}");
            assert_relative_eq!(w, newton_w(x), max_relative = 1e-12);
            if x > std::f64::consts::E {
                assert!(w < x.ln());
            }
        }
    }

    #[test]
    fn q_reference_values() {
        assert_eq!(gaussian_q(0.0), 0.5);
        // mpmath, 30 digits
        let cases = [
            (0.3, 0.382_088_577_811_047_36),
            (1.0, 0.158_655_253_931_457_05),
            (1.5, 0.066_807_201_268_858_066),
            (1.96, 0.024_997_895_148_220_434),
            (2.0, 0.022_750_131_948_179_207),
            (3.0, 0.001_349_898_031_630_094_5),
            (5.0, 2.866_515_718_791_939e-7),
            (10.0, 7.619_853_024_160_526e-24),
            (20.0, 2.753_624_118_606_233_7e-89),
            (-0.5, 0.691_462_461_274_013_1),
            (-1.7, 0.955_434_537_241_456_96),
            (-2.015, 0.978_047_675_462_341_8),
            (-2.82, 0.997_598_817_525_810_75),
            (-4.0, 0.999_968_328_758_166_88),
        ];
        for (c, expect) in cases {
            assert_relative_eq!(gaussian_q(c), expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn q_on_half_step_grid() {
        // mpmath, 40 digits
        let cases = [
            (-5.0, 9.9999971334842812e-1),
            (-4.5, 9.9999660232687527e-1),
            (-4.0, 9.9996832875816688e-1),
            (-3.5, 9.9976737092096447e-1),
            (-3.0, 9.9865010196836991e-1),
            (-2.5, 9.9379033467422386e-1),
            (-2.0, 9.7724986805182079e-1),
            (-1.5, 9.3319279873114193e-1),
            (-1.0, 8.4134474606854295e-1),
            (-0.5, 6.914624612740131e-1),
            (0.0, 5.0e-1),
            (0.5, 3.085375387259869e-1),
            (1.0, 1.5865525393145705e-1),
            (1.5, 6.6807201268858066e-2),
            (2.0, 2.2750131948179207e-2),
            (2.5, 6.2096653257761352e-3),
            (3.0, 1.3498980316300945e-3),
            (3.5, 2.3262907903552504e-4),
            (4.0, 3.1671241833119921e-5),
            (4.5, 3.3976731247300604e-6),
            (5.0, 2.8665157187919391e-7),
            (5.5, 1.8989562465887719e-8),
            (6.0, 9.8658764503769814e-10),
            (6.5, 4.0160005838591178e-11),
            (7.0, 1.279812543885835e-12),
            (7.5, 3.1908916729108962e-14),
            (8.0, 6.2209605742717841e-16),
            (8.5, 9.4795348222033184e-18),
            (9.0, 1.1285884059538406e-19),
            (9.5, 1.0494515075362607e-21),
            (10.0, 7.6198530241605261e-24),
            (10.5, 4.3190063178092303e-26),
            (11.0, 1.9106595744986757e-28),
            (11.5, 6.5957714461136751e-31),
            (12.0, 1.776482112077679e-33),
            (12.5, 3.7325642988777134e-36),
            (13.0, 6.1171643995498797e-39),
            (13.5, 7.8188073056578912e-42),
            (14.0, 7.7935368191928003e-45),
            (14.5, 6.0574947644152208e-48),
            (15.0, 3.6709661993127509e-51),
        ];
        for (c, expect) in cases {
            assert_relative_eq!(gaussian_q(c), expect, max_relative = 2e-14);
        }
    }

    #[test]
    fn q_near_statrs_erfc() {
        // statrs erfc is only accurate to ~1e-10, so this is a coarse sweep
        for i in 0..=4000 {
            let c = -5.0 + i as f64 * 0.005;
            let oracle = 0.5 * statrs::function::erf::erfc(c / std::f64::consts::SQRT_2);
            assert_relative_eq!(gaussian_q(c), oracle, max_relative = 1e-9);
        }
    }

    #[test]
    fn q_three_below_chernoff() {
        let bound = 0.5 * (-4.5f64).exp();
        assert!(gaussian_q(3.0) <= bound);
        assert!((bound - 0.005_554).abs() < 1e-6);
    }

    #[test]
    fn chi_square_threshold_values() {
        let ln2 = std::f64::consts::LN_2;
        assert_relative_eq!(
            chi_square_threshold(1, ln2).unwrap(),
            4.051_403_583_435_286,
            max_relative = 1e-14
        );
        assert_eq!(chi_square_threshold(4, 1.0).unwrap(), 10.0);
        assert!(chi_square_threshold(0, 1.0).is_err());
        assert!(chi_square_threshold(3, 0.0).is_err());
    }

    #[test]
    fn chi_square_tail_respects_threshold() {
        let t = chi_square_threshold(9, 2.0).unwrap();
        let mut rng = RngStream::new(31, 0);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| sample_chi_square(9.0, &mut rng).unwrap() >= t).count();
        assert!((hits as f64 / n as f64) <= (-2.0f64).exp());
    }
}
