//! Pólya-Gamma variates.
//!
//! `PG(1, c)` uses the exact alternating-series rejection sampler of Polson,
//! Scott and Windle (2013): a draw of `J*(1, |c|/2)` scaled by 1/4. Integer
//! shapes up to [`PG_EXACT_MAX_SHAPE`] are summed exactly; larger shapes use a
//! Gaussian with the exact mean and variance.

use std::f64::consts::PI;

use rand::Rng;

use super::{log_std_normal_cdf, open_unit, std_exp, std_normal};
use crate::error::{domain_err, Error, Result};
use crate::scalar::Real;

/// Largest shape drawn as an exact sum of `PG(1, c)` variates.
pub const PG_EXACT_MAX_SHAPE: u64 = 170;

/// Truncation point between the two envelope pieces.
const TRUNC: f64 = 0.64;

/// Coefficient `a_n(x)` of the alternating series for the `J*(1, 0)` density.
fn series_coefficient(n: u32, x: f64) -> f64 {
    let k = (f64::from(n) + 0.5) * PI;
    if x > TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else if x > 0.0 {
        let h = f64::from(n) + 0.5;
        (-1.5 * (0.5 * PI * x).ln() + k.ln() - 2.0 * h * h / x).exp()
    } else {
        0.0
    }
}

/// Probability of proposing from the exponential piece (right of `TRUNC`).
fn exponential_piece_mass(z: f64) -> f64 {
    let t = TRUNC;
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let root = (1.0 / t).sqrt();
    let b = root * (t * z - 1.0);
    let a = -root * (t * z + 1.0);
    let x0 = fz.ln() + fz * t;
    let xb = x0 - z + log_std_normal_cdf(b);
    let xa = x0 + z + log_std_normal_cdf(a);
    let q_over_p = 4.0 / PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_over_p)
}

/// Inverse Gaussian `IG(1/z, 1)` truncated to `(0, TRUNC]`.
fn truncated_inverse_gaussian<R: Rng + ?Sized>(rng: &mut R, z: f64) -> f64 {
    let t = TRUNC;
    if z < 1.0 / t {
        // mean beyond the truncation point: propose from the z = 0 case and tilt
        loop {
            let x = loop {
                let e1 = std_exp(rng);
                let e2 = std_exp(rng);
                if e1 * e1 <= 2.0 * e2 / t {
                    let r = 1.0 + e1 * t;
                    break t / (r * r);
                }
            };
            if open_unit(rng) <= (-0.5 * z * z * x).exp() {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let y = std_normal(rng);
            let mu_y = mu * y * y;
            let mut x = mu + 0.5 * mu * mu_y - 0.5 * mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if open_unit(rng) > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x <= t {
                return x;
            }
        }
    }
}

/// One exact `PG(1, c)` draw.
fn draw_pg1<R: Rng + ?Sized>(rng: &mut R, c: f64) -> f64 {
    let z = 0.5 * c.abs();
    let fz = 0.125 * PI * PI + 0.5 * z * z;
    let p_exp = exponential_piece_mass(z);
    loop {
        let x = if open_unit(rng) < p_exp {
            TRUNC + std_exp(rng) / fz
        } else {
            truncated_inverse_gaussian(rng, z)
        };
        let mut s = series_coefficient(0, x);
        let y = open_unit(rng) * s;
        let mut n = 0u32;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coefficient(n, x);
                if y <= s {
                    return 0.25 * x;
                }
            } else {
                s += series_coefficient(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
}

/// `E[PG(b, c)] = b tanh(c/2) / (2c)`, with the `c -> 0` limit `b/4`.
pub fn polya_gamma_mean(b: f64, c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-4 {
        b * (0.25 - c * c / 48.0)
    } else {
        b * (0.5 * c).tanh() / (2.0 * c)
    }
}

/// Even Taylor coefficients of `Var[PG(1, c)]` about zero, in powers of `c²`.
const VARIANCE_SERIES: [f64; 10] = [
    0.041_666_666_666_666_666_667,
    -0.008_333_333_333_333_333_333_3,
    0.001_264_880_952_380_952_381,
    -0.000_170_855_379_188_712_522_05,
    0.000_021_638_758_617_925_284_592,
    -2.630_953_151_786_485_119_8e-6,
    3.109_997_775_073_006_554_5e-7,
    -3.601_241_704_990_148_812_1e-8,
    4.104_923_302_062_935_511_3e-9,
    -4.621_285_417_999_959_147_3e-10,
];

/// `Var[PG(b, c)] = b (sinh c - c) sech²(c/2) / (4 c³)`, with the limit `b/24`.
pub fn polya_gamma_variance(b: f64, c: f64) -> f64 {
    let c = c.abs();
    if c < 0.25 {
        let c2 = c * c;
        return b * VARIANCE_SERIES.iter().rev().fold(0.0, |acc, &k| acc * c2 + k);
    }
    // (sinh c - c) sech²(c/2), rewritten in e^{-c} so large c cannot overflow
    let e = (-c).exp();
    let core = (2.0 - 2.0 * e * e - 4.0 * c * e) / ((1.0 + e) * (1.0 + e));
    b * core / (4.0 * c * c * c)
}

/// One `PG(b, c)` draw for a positive integer shape `b`.
pub fn draw_polya_gamma<T: Real, R: Rng + ?Sized>(rng: &mut R, b: u64, c: T) -> Result<T> {
    if b == 0 {
        return Err(domain_err!("Pólya-Gamma shape must be a positive integer"));
    }
    let c = c.as_f64();
    if !c.is_finite() {
        return Err(domain_err!("Pólya-Gamma tilt must be finite, got {c}"));
    }
    if b <= PG_EXACT_MAX_SHAPE {
        let total: f64 = (0..b).map(|_| draw_pg1(rng, c)).sum();
        return Ok(T::lit(total));
    }
    let bf = b as f64;
    let mean = polya_gamma_mean(bf, c);
    let sd = polya_gamma_variance(bf, c).sqrt();
    for _ in 0..1000 {
        let x = mean + sd * std_normal(rng);
        if x > 0.0 {
            return Ok(T::lit(x));
        }
    }
    Err(Error::Numerical(format!(
        "Gaussian approximation to PG({b}, {c}) kept producing nonpositive values"
    )))
}
