//! Poisson and Pólya-Gamma augmentation that turns each weight path into a
//! Gaussian dynamic linear model.
//!
//! Conditionally on the other components, the likelihood of `u_{tℓ}` is
//! `exp{−(v, s) B (v, s)ᵀ / (v + s)²}`. Expanding
//! `exp{max(b, d) − (v, s) B (v, s)ᵀ / (v + s)²}` as a product of two Poisson
//! series leaves a logistic-type kernel in `u` that a Pólya-Gamma variable
//! makes Gaussian.

use ndarray::Array2;
use rand::Rng;

use crate::error::{domain_err, Error, Result};
use crate::model::{quad_parts, AugmentationVars, LatentState, QuadParts};
use crate::samplers::{draw_poisson, draw_polya_gamma};
use crate::scalar::{lit, Real};

/// Relative size of a negative rate still attributed to cancellation; larger
/// negatives mean `B` is not positive semidefinite.
pub const RATE_CLAMP: f64 = 1e-12;

/// A fictitious observation `ỹ ~ N(u, 1/ω)`; `ω = 0` means missing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PseudoObservation<T> {
    pub value: T,
    pub precision: T,
}

impl<T: Real> PseudoObservation<T> {
    pub fn missing() -> Self {
        Self { value: T::zero(), precision: T::zero() }
    }

    pub fn observed(value: T, precision: T) -> Result<Self> {
        if !(precision > T::zero() && precision.is_finite() && value.is_finite()) {
            return Err(Error::Numerical(format!(
                "pseudo-observation {value} with precision {precision} is not usable"
            )));
        }
        Ok(Self { value, precision })
    }

    pub fn is_missing(&self) -> bool {
        self.precision == T::zero()
    }
}

/// `ln σ(x) = −ln(1 + e^{−x})`.
fn log_logistic<T: Real>(x: T) -> T {
    if x >= T::zero() {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Poisson rates `(λ₁, λ₂)` given `u = ln v` and `ln s`, clamped at zero.
///
/// `λ₁ = |b − d| r²` if `b < d`, else `|b − d| (1 − r)²`; `λ₂ = 2(max(b,d) − c) r (1 − r)`,
/// where `r = v/(v + s)`.
pub fn poisson_rates<T: Real>(b: T, c: T, d: T, u: T, log_s: T) -> Result<(T, T)> {
    let x = u - log_s;
    let ln_r = log_logistic(x);
    let ln_1mr = log_logistic(-x);
    let two: T = lit(2.0);
    let gap = (b - d).abs();
    let lambda1 = if b < d {
        gap * (two * ln_r).exp()
    } else {
        gap * (two * ln_1mr).exp()
    };
    let lambda2 = two * (b.max(d) - c) * (ln_r + ln_1mr).exp();
    let floor = -lit::<T>(RATE_CLAMP) * (T::one() + b.abs() + d.abs());
    for (name, rate) in [("z1", lambda1), ("z2", lambda2)] {
        if !rate.is_finite() {
            return Err(Error::Numerical(format!(
                "{name} rate {rate} is not finite (b={b}, c={c}, d={d}, u={u}, ln s={log_s})"
            )));
        }
        if rate < floor {
            return Err(Error::Invariant(format!(
                "{name} rate {rate} is negative (b={b}, c={c}, d={d})"
            )));
        }
    }
    Ok((lambda1.max(T::zero()), lambda2.max(T::zero())))
}

/// Draws `(z1, z2)` from their independent Poisson conditionals.
pub fn sample_z<T: Real, R: Rng + ?Sized>(rng: &mut R, b: T, c: T, d: T, v: T, s: T) -> Result<(u64, u64)> {
    if !(v > T::zero() && s > T::zero()) {
        return Err(domain_err!("v and s must be positive, got ({v}, {s})"));
    }
    sample_z_log(rng, b, c, d, v.ln(), s.ln())
}

/// [`sample_z`] on the log scale.
pub fn sample_z_log<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    b: T,
    c: T,
    d: T,
    u: T,
    log_s: T,
) -> Result<(u64, u64)> {
    let (l1, l2) = poisson_rates(b, c, d, u, log_s)?;
    Ok((draw_poisson(rng, l1)?, draw_poisson(rng, l2)?))
}

/// `ω ~ PG(2(z1 + z2), u − ln s)`, exactly zero when both counts vanish.
pub fn sample_omega<T: Real, R: Rng + ?Sized>(rng: &mut R, z1: u64, z2: u64, u: T, log_s: T) -> Result<T> {
    let n = z1 + z2;
    if n == 0 {
        return Ok(T::zero());
    }
    draw_polya_gamma(rng, 2 * n, u - log_s)
}

/// `ỹ = ln s + z1 (2·1[b<d] − 1)/ω` with precision `ω`.
pub fn make_pseudo_obs<T: Real>(z1: u64, omega: T, log_s: T, b_lt_d: bool) -> Result<PseudoObservation<T>> {
    if omega == T::zero() {
        if z1 > 0 {
            return Err(Error::Invariant(format!("omega is zero while z1 = {z1}")));
        }
        return Ok(PseudoObservation::missing());
    }
    let sign = if b_lt_d { T::one() } else { -T::one() };
    let z: T = lit(z1 as f64);
    PseudoObservation::observed(log_s + sign * z / omega, omega)
}

/// `exp{max(b,d) − (v,s) B (v,s)ᵀ/(v+s)²}` evaluated directly.
pub fn series_target<T: Real>(b: T, c: T, d: T, v: T, s: T) -> T {
    let two: T = lit(2.0);
    let quad = b * v * v + two * c * v * s + d * s * s;
    (b.max(d) - quad / ((v + s) * (v + s))).exp()
}

/// Truncated double Poisson series `Σ_{z1,z2 ≤ N} λ₁^{z1}/z1! · λ₂^{z2}/z2!`
/// whose limit is [`series_target`].
pub fn series_identity_check<T: Real>(b: T, c: T, d: T, v: T, s: T, truncation: usize) -> Result<T> {
    if truncation == 0 {
        return Err(domain_err!("series truncation must be at least 1"));
    }
    if !(v > T::zero() && s > T::zero()) {
        return Err(domain_err!("v and s must be positive, got ({v}, {s})"));
    }
    let (l1, l2) = poisson_rates(b, c, d, v.ln(), s.ln())?;
    let partial = |lambda: f64| {
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..=truncation {
            term *= lambda / n as f64;
            sum += term;
        }
        sum
    };
    let total = partial(l1.as_f64()) * partial(l2.as_f64());
    if !total.is_finite() {
        return Err(Error::Accuracy {
            message: "Poisson series overflowed".into(),
            estimate: total,
            error_bound: f64::INFINITY,
        });
    }
    Ok(T::lit(total))
}

/// Draws `(z1, z2, ω)` for every `t` of component `ell` (1-based column of
/// `A`) and returns the pseudo-observations for `t = 1..=T`.
///
/// `a_mats[t-1]` is `A_t`. Results are also written into `aug`.
pub fn augment_component<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    a_mats: &[Array2<T>],
    latent: &LatentState<T>,
    ell: usize,
    aug: &mut AugmentationVars<T>,
) -> Result<Vec<PseudoObservation<T>>> {
    let n_times = latent.n_times();
    let mut out = Vec::with_capacity(n_times);
    for t in 1..=n_times {
        let log_v = latent.log_v_row(t);
        let QuadParts { b, c, d, log_s } = quad_parts(a_mats[t - 1].view(), &log_v, ell)?;
        let u = log_v[ell];
        let with_context = |e: Error| match e {
            Error::Numerical(m) => Error::Numerical(format!("{m} at t={t}, component {ell}")),
            Error::Invariant(m) => Error::Invariant(format!("{m} at t={t}, component {ell}")),
            other => other,
        };
        let (z1, z2) = sample_z_log(rng, b, c, d, u, log_s).map_err(with_context)?;
        let omega = sample_omega(rng, z1, z2, u, log_s).map_err(with_context)?;
        aug.z1[[t - 1, ell - 1]] = z1;
        aug.z2[[t - 1, ell - 1]] = z2;
        aug.omega[[t - 1, ell - 1]] = omega;
        out.push(make_pseudo_obs(z1, omega, log_s, b < d).map_err(with_context)?);
    }
    Ok(out)
}
