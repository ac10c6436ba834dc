//! Forward filtering, backward sampling for a univariate stationary AR(1)
//! state observed through heteroskedastic, possibly missing Gaussian data.
//!
//! State: `u_t = (1 − φ) μ + φ u_{t−1} + e_t`, `e_t ~ N(0, σ²)`, with
//! `u_0 ~ N(μ, σ²/(1 − φ²))`. Observation: `ỹ_t ~ N(u_t, 1/ω_t)`, `t = 1..=T`.

use rand::Rng;

use crate::augment::PseudoObservation;
use crate::error::{domain_err, Error, Result};
use crate::samplers::std_normal;
use crate::scalar::{lit, Real};

/// Variances more negative than this abort the recursion.
const NEGATIVE_VARIANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Spec<T> {
    pub phi: T,
    pub mu: T,
    pub sigma2: T,
}

impl<T: Real> Ar1Spec<T> {
    pub fn new(phi: T, mu: T, sigma2: T) -> Result<Self> {
        let spec = Self { phi, mu, sigma2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.abs() < T::one()) {
            return Err(domain_err!("AR coefficient {} is not stationary", self.phi));
        }
        if !(self.sigma2 > T::zero() && self.sigma2.is_finite()) || !self.mu.is_finite() {
            return Err(domain_err!(
                "AR(1) needs finite mean and positive innovation variance, got ({}, {})",
                self.mu,
                self.sigma2
            ));
        }
        Ok(())
    }

    pub fn stationary_variance(&self) -> T {
        self.sigma2 / (T::one() - self.phi * self.phi)
    }
}

/// Filtered moments for `t = 0..=T` plus one-step predictions for `t = 1..=T`
/// (`pred_mean[0]`, `pred_var[0]` are unused and equal the initial law).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub pred_mean: Vec<T>,
    pub pred_var: Vec<T>,
}

fn clamp_variance<T: Real>(p: T, t: usize) -> Result<T> {
    if p.is_nan() || p < -lit::<T>(NEGATIVE_VARIANCE_TOL) {
        return Err(Error::Numerical(format!("filtered variance {p} at t={t}")));
    }
    Ok(p.max(T::zero()))
}

/// Kalman filter in information form: a missing observation is a no-op update.
pub fn forward_filter<T: Real>(spec: &Ar1Spec<T>, pseudo: &[PseudoObservation<T>]) -> Result<FilterState<T>> {
    spec.validate()?;
    let n = pseudo.len();
    let (phi, sigma2) = (spec.phi, spec.sigma2);
    let drift = (T::one() - phi) * spec.mu;
    let mut mean = Vec::with_capacity(n + 1);
    let mut var = Vec::with_capacity(n + 1);
    let mut pred_mean = Vec::with_capacity(n + 1);
    let mut pred_var = Vec::with_capacity(n + 1);
    let p0 = spec.stationary_variance();
    mean.push(spec.mu);
    var.push(p0);
    pred_mean.push(spec.mu);
    pred_var.push(p0);
    for (i, obs) in pseudo.iter().enumerate() {
        let (m_prev, p_prev) = (mean[i], var[i]);
        let a = drift + phi * m_prev;
        let r = phi * phi * p_prev + sigma2;
        pred_mean.push(a);
        pred_var.push(r);
        let w = obs.precision;
        if !(w >= T::zero()) || !w.is_finite() {
            return Err(Error::Numerical(format!("observation precision {w} at t={}", i + 1)));
        }
        if w == T::zero() {
            mean.push(a);
            var.push(r);
            continue;
        }
        let denom = T::one() + r * w;
        let gain = r * w / denom;
        mean.push(a + gain * (obs.value - a));
        var.push(clamp_variance(r / denom, i + 1)?);
    }
    Ok(FilterState { mean, var, pred_mean, pred_var })
}

/// Backward pass over a completed filter: one joint draw of `u_0..=u_T`.
pub fn backward_sample<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    spec: &Ar1Spec<T>,
    filter: &FilterState<T>,
) -> Result<Vec<T>> {
    let n = filter.mean.len() - 1;
    let mut path = vec![T::zero(); n + 1];
    let normal = |rng: &mut R, m: T, v: T| -> T { m + v.sqrt() * lit::<T>(std_normal(rng)) };
    path[n] = normal(rng, filter.mean[n], filter.var[n]);
    for t in (0..n).rev() {
        let (m, p) = (filter.mean[t], filter.var[t]);
        let (a_next, r_next) = (filter.pred_mean[t + 1], filter.pred_var[t + 1]);
        let j = p * spec.phi / r_next;
        let mean = m + j * (path[t + 1] - a_next);
        let var = clamp_variance(p * spec.sigma2 / r_next, t)?;
        path[t] = normal(rng, mean, var);
    }
    if let Some((t, x)) = path.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::Numerical(format!("smoothed draw {x} at t={t}")));
    }
    Ok(path)
}

/// Exact joint draw of `u_0..=u_T` given the pseudo-observations at `t = 1..=T`.
pub fn ffbs_draw<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    spec: &Ar1Spec<T>,
    pseudo: &[PseudoObservation<T>],
) -> Result<Vec<T>> {
    let filter = forward_filter(spec, pseudo)?;
    backward_sample(rng, spec, &filter)
}
