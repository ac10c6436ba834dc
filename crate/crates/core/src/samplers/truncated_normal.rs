//! Truncated normal draws on an interval `(lo, hi)`.

use rand::Rng;

use super::{open_unit, std_exp, std_normal};
use crate::error::{domain_err, Result};
use crate::scalar::Real;

/// Standard-normal mass above which plain rejection from the untruncated law is used.
const NAIVE_MASS: f64 = 0.2;
const MAX_TRIES: usize = 10_000;

fn upper_tail(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

/// `Φ(beta) - Φ(alpha)` computed on the side of zero that avoids cancellation.
fn std_mass(alpha: f64, beta: f64) -> f64 {
    if alpha >= 0.0 {
        upper_tail(alpha) - upper_tail(beta)
    } else if beta <= 0.0 {
        upper_tail(-beta) - upper_tail(-alpha)
    } else {
        1.0 - upper_tail(beta) - upper_tail(-alpha)
    }
}

/// Standard normal restricted to `(alpha, beta)` with `0 <= alpha < beta`.
fn positive_tail<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> Option<f64> {
    let lambda = 0.5 * (alpha + (alpha * alpha + 4.0).sqrt());
    let width = beta - alpha;
    for _ in 0..MAX_TRIES {
        if width * lambda < 1.0 {
            let z = alpha + width * open_unit(rng);
            if open_unit(rng).ln() <= 0.5 * (alpha * alpha - z * z) {
                return Some(z);
            }
        } else {
            let z = alpha + std_exp(rng) / lambda;
            if z < beta && open_unit(rng).ln() <= -0.5 * (z - lambda) * (z - lambda) {
                return Some(z);
            }
        }
    }
    None
}

/// Standard normal restricted to `(alpha, beta)` by inverting the CDF.
fn inverse_cdf<R: Rng + ?Sized>(rng: &mut R, alpha: f64, beta: f64) -> f64 {
    use statrs::function::erf::erfc_inv;
    let u = open_unit(rng);
    let sqrt2 = std::f64::consts::SQRT_2;
    // work in the upper tail of whichever side the interval sits on
    let (lo, hi, sign) = if alpha >= 0.0 || (alpha.abs() > beta.abs() && beta > 0.0) {
        (alpha, beta, 1.0)
    } else {
        (-beta, -alpha, -1.0)
    };
    let qlo = upper_tail(lo);
    let qhi = upper_tail(hi);
    let q = qlo - u * (qlo - qhi);
    let z = if q > 0.0 { sqrt2 * erfc_inv(2.0 * q) } else { lo };
    sign * z.clamp(lo, hi)
}

/// One draw from `N(mean, variance)` restricted to `(lo, hi)`.
///
/// Infinite bounds are allowed. Intervals holding more than 20% of the
/// mass use plain rejection; narrower or tail intervals use uniform or
/// exponentially tilted proposals, and a bounded number of failed proposals
/// falls back to CDF inversion.
pub fn draw_truncated_normal<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    mean: T,
    variance: T,
    lo: T,
    hi: T,
) -> Result<T> {
    let (m, v, lo, hi) = (mean.as_f64(), variance.as_f64(), lo.as_f64(), hi.as_f64());
    if !(v > 0.0 && v.is_finite() && m.is_finite()) {
        return Err(domain_err!("truncated normal needs finite mean and positive variance, got ({m}, {v})"));
    }
    if !(lo < hi) {
        return Err(domain_err!("truncated normal needs lo < hi, got ({lo}, {hi})"));
    }
    let sd = v.sqrt();
    let alpha = (lo - m) / sd;
    let beta = (hi - m) / sd;
    let mass = std_mass(alpha, beta);

    let z = if mass > NAIVE_MASS {
        let mut found = None;
        for _ in 0..MAX_TRIES {
            let z = std_normal(rng);
            if z > alpha && z < beta {
                found = Some(z);
                break;
            }
        }
        found
    } else if alpha >= 0.0 {
        positive_tail(rng, alpha, beta)
    } else if beta <= 0.0 {
        positive_tail(rng, -beta, -alpha).map(|z| -z)
    } else {
        // narrow interval straddling zero
        let width = beta - alpha;
        let mut found = None;
        for _ in 0..MAX_TRIES {
            let z = alpha + width * open_unit(rng);
            if open_unit(rng).ln() <= -0.5 * z * z {
                found = Some(z);
                break;
            }
        }
        found
    };
    let z = z.unwrap_or_else(|| inverse_cdf(rng, alpha, beta));
    let x = (m + sd * z).clamp(lo, hi);
    Ok(T::lit(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RngStream;

    #[test]
    fn support_is_respected() {
        let mut rng = RngStream::new(11, 0);
        for &(m, v, lo, hi) in &[
            (0.8, 0.04, -1.0, 1.0),
            (5.0, 0.01, -1.0, 1.0),
            (-5.0, 0.01, -1.0, 1.0),
            (0.0, 1.0, -0.01, 0.02),
            (0.999, 1e-6, -1.0, 1.0),
            (0.0, 1.0, 8.0, 8.001),
        ] {
            for _ in 0..2000 {
                let x: f64 = draw_truncated_normal(&mut rng, m, v, lo, hi).unwrap();
                assert!(x >= lo && x <= hi, "{x} outside ({lo}, {hi})");
            }
        }
    }

    #[test]
    fn far_tail_terminates() {
        let mut rng = RngStream::new(12, 0);
        let x: f64 = draw_truncated_normal(&mut rng, 0.0, 1.0, 40.0, 41.0).unwrap();
        assert!((40.0..=41.0).contains(&x));
        let y: f64 = draw_truncated_normal(&mut rng, 1e6, 1.0, -1.0, 1.0).unwrap();
        assert!((-1.0..=1.0).contains(&y));
    }

    #[test]
    fn inverse_cdf_fallback_respects_interval() {
        let mut rng = RngStream::new(13, 0);
        for &(a, b) in &[(0.5, 0.6), (-3.0, -2.5), (-0.1, 0.3), (6.0, 7.0)] {
            for _ in 0..200 {
                let z = inverse_cdf(&mut rng, a, b);
                assert!(z >= a && z <= b);
            }
        }
    }

    #[test]
    fn rejects_empty_interval() {
        let mut rng = RngStream::new(14, 0);
        assert!(draw_truncated_normal(&mut rng, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(draw_truncated_normal(&mut rng, 0.0, 0.0, -1.0, 1.0).is_err());
    }
}
