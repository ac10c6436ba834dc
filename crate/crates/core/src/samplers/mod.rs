//! Seeded random-variate generation for every distribution the samplers draw from.
//!
//! All draws flow through an [`RngStream`]: a ChaCha generator keyed by a
//! 64-bit seed and positioned on one of 2^64 independent streams. Equal
//! `(seed, stream_id)` pairs reproduce the same sequence bit for bit.

mod polya_gamma;
mod truncated_normal;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson, StandardNormal};

use crate::error::{domain_err, Error, Result};
use crate::scalar::Real;

pub use polya_gamma::{draw_polya_gamma, polya_gamma_mean, polya_gamma_variance, PG_EXACT_MAX_SHAPE};
pub use truncated_normal::draw_truncated_normal;

/// Counter-based random stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha12Rng,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// A fresh stream on the same `stream_id` whose key mixes `keys` into the seed.
    ///
    /// Used to give every (iteration, block) pair of a chain its own
    /// reproducible sequence independent of how many draws earlier blocks took.
    pub fn substream(&self, keys: &[u64]) -> RngStream {
        let mut h = splitmix64(self.seed);
        for &k in keys {
            h = splitmix64(h ^ splitmix64(k));
        }
        RngStream::new(h, self.stream_id)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Uniform on the open interval (0, 1).
#[inline]
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[inline]
pub(crate) fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[inline]
pub(crate) fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// One `N(mean, variance)` variate.
pub fn draw_normal<T: Real, R: Rng + ?Sized>(rng: &mut R, mean: T, variance: T) -> Result<T> {
    let (m, v) = (mean.as_f64(), variance.as_f64());
    if !(v > 0.0 && v.is_finite()) || !m.is_finite() {
        return Err(domain_err!("normal draw needs finite mean and positive variance, got ({m}, {v})"));
    }
    Ok(T::lit(m + v.sqrt() * std_normal(rng)))
}

/// `ln Gamma(shape, 1)` draw, stable for very small shapes.
fn log_gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> Result<f64> {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0)
            .map_err(|e| domain_err!("gamma shape {shape}: {e}"))?
            .sample(rng);
        return Ok(g.ln());
    }
    // Gamma(a) = Gamma(a + 1) U^{1/a}
    let g = Gamma::new(shape + 1.0, 1.0)
        .map_err(|e| domain_err!("gamma shape {shape}: {e}"))?
        .sample(rng);
    Ok(g.ln() + open_unit(rng).ln() / shape)
}

/// One inverse-gamma variate with the given shape and rate (`rate / Gamma(shape, 1)`).
pub fn draw_inverse_gamma<T: Real, R: Rng + ?Sized>(rng: &mut R, shape: T, rate: T) -> Result<T> {
    let (a, b) = (shape.as_f64(), rate.as_f64());
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(domain_err!("inverse gamma needs positive shape and rate, got ({a}, {b})"));
    }
    let x = (b.ln() - log_gamma_variate(rng, a)?).exp();
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Numerical(format!(
            "inverse gamma draw left the representable range (shape {a}, rate {b})"
        )));
    }
    Ok(T::lit(x))
}

/// Log of an inverse-gamma variate; stays finite when the variate itself
/// would overflow, as happens for vague priors with tiny shape.
pub fn draw_log_inverse_gamma<T: Real, R: Rng + ?Sized>(rng: &mut R, shape: T, rate: T) -> Result<T> {
    let (a, b) = (shape.as_f64(), rate.as_f64());
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(domain_err!("inverse gamma needs positive shape and rate, got ({a}, {b})"));
    }
    Ok(T::lit(b.ln() - log_gamma_variate(rng, a)?))
}

/// One Poisson variate; a zero rate returns zero.
pub fn draw_poisson<T: Real, R: Rng + ?Sized>(rng: &mut R, rate: T) -> Result<u64> {
    let lambda = rate.as_f64();
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(domain_err!("poisson rate must be finite and nonnegative, got {lambda}"));
    }
    if lambda == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(lambda).map_err(|e| domain_err!("poisson rate {lambda}: {e}"))?;
    Ok(dist.sample(rng) as u64)
}

/// `ln Φ(x)` for the standard normal CDF, accurate deep in the lower tail.
pub(crate) fn log_std_normal_cdf(x: f64) -> f64 {
    if x > -20.0 {
        return (0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)).ln();
    }
    // asymptotic expansion of the Mills ratio
    let x2 = x * x;
    let mut term = 1.0;
    let mut series = 1.0;
    for k in 1..12 {
        term *= -((2 * k - 1) as f64) / x2;
        series += term;
    }
    -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + series.ln()
}
