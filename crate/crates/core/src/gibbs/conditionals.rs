//! Full conditionals of the AR(1) parameters and the observation variance.
//!
//! All functions take one component's path `u_0..=u_T` as a slice. The moment
//! helpers are exposed separately so tests can check them without sampling.

use ndarray::ArrayView2;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{mean_curve, FunctionalPanel, PriorHyperparams};
use crate::samplers::{draw_inverse_gamma, draw_normal, draw_truncated_normal};
use crate::scalar::{lit, Real};

/// Prior hyperparameters of one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentPrior<T> {
    pub mu_mean: T,
    pub mu_var: T,
    pub phi_mean: T,
    pub phi_var: T,
    pub sigma2_n0: T,
    pub sigma2_d0: T,
}

impl<T: Real> PriorHyperparams<T> {
    /// Hyperparameters of component `l` (0-based).
    pub fn component(&self, l: usize) -> ComponentPrior<T> {
        ComponentPrior {
            mu_mean: self.mu_mean[l],
            mu_var: self.mu_var[l],
            phi_mean: self.phi_mean[l],
            phi_var: self.phi_var[l],
            sigma2_n0: self.sigma2_n0[l],
            sigma2_d0: self.sigma2_d0[l],
        }
    }
}

/// Mean and variance of the truncated-normal proposal for `φ`.
///
/// The cross-product sum runs over `t = 1..=T` and the squared sum over
/// `t = 2..=T`: the `t = 1` square cancels against the stationary prior of
/// `u_0`, which leaves only the `√(1 − φ²)` factor for the acceptance step.
pub fn phi_proposal<T: Real>(u: &[T], mu: T, sigma2: T, prior: &ComponentPrior<T>) -> Result<(T, T)> {
    let n = u.len() - 1;
    let e: Vec<T> = u.iter().map(|&x| x - mu).collect();
    let cross: T = (1..=n).map(|t| e[t] * e[t - 1]).sum();
    let square: T = (2..=n).map(|t| e[t - 1] * e[t - 1]).sum();
    let precision = square / sigma2 + prior.phi_var.recip();
    let var = precision.recip();
    if !(var > T::zero() && var.is_finite()) {
        return Err(Error::Numerical(format!("phi proposal variance {var} is degenerate")));
    }
    let mean = var * (cross / sigma2 + prior.phi_mean / prior.phi_var);
    Ok((mean, var))
}

/// `min{1, √((1 − φ_new²)/(1 − φ_old²))}`.
pub fn phi_acceptance<T: Real>(phi_old: T, phi_new: T) -> T {
    let ratio = (T::one() - phi_new * phi_new) / (T::one() - phi_old * phi_old);
    ratio.sqrt().min(T::one())
}

/// Metropolis-within-Gibbs step for `φ`; returns the new value and whether
/// the proposal was accepted.
pub fn update_phi<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    u: &[T],
    mu: T,
    sigma2: T,
    phi_old: T,
    prior: &ComponentPrior<T>,
) -> Result<(T, bool)> {
    let (mean, var) = phi_proposal(u, mu, sigma2, prior)?;
    let proposal = draw_truncated_normal(rng, mean, var, -T::one(), T::one())?;
    if !(proposal.abs() < T::one()) {
        return Ok((phi_old, false));
    }
    let p = phi_acceptance(phi_old, proposal);
    let draw: f64 = rng.random();
    if draw < p.as_f64() {
        Ok((proposal, true))
    } else {
        Ok((phi_old, false))
    }
}

/// `(shape, rate)` of the inverse-gamma conditional of `σ²`.
///
/// Deviations are taken about `μ`: `Σ_t (e_t − φ e_{t−1})² + (1 − φ²) e_0²`
/// with `e_t = u_t − μ`.
pub fn sigma2_posterior<T: Real>(u: &[T], mu: T, phi: T, prior: &ComponentPrior<T>) -> (T, T) {
    let n = u.len() - 1;
    let e: Vec<T> = u.iter().map(|&x| x - mu).collect();
    let innovations: T = (1..=n).map(|t| (e[t] - phi * e[t - 1]).powi(2)).sum();
    let d1 = innovations + prior.sigma2_d0 + (T::one() - phi * phi) * e[0] * e[0];
    let n1 = lit::<T>(n as f64) + prior.sigma2_n0 + T::one();
    let half: T = lit(0.5);
    (half * n1, half * d1)
}

pub fn update_sigma2<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    u: &[T],
    mu: T,
    phi: T,
    prior: &ComponentPrior<T>,
) -> Result<T> {
    let (shape, rate) = sigma2_posterior(u, mu, phi, prior);
    draw_inverse_gamma(rng, shape, rate)
}

/// `(mean, variance)` of the Gaussian conditional of `μ`.
pub fn mu_posterior<T: Real>(u: &[T], phi: T, sigma2: T, prior: &ComponentPrior<T>) -> (T, T) {
    let n = u.len() - 1;
    let one = T::one();
    let nf: T = lit(n as f64);
    let stationary = one - phi * phi;
    let precision = (stationary + nf * (one - phi) * (one - phi)) / sigma2 + prior.mu_var.recip();
    let var = precision.recip();
    let drift: T = (1..=n).map(|t| u[t] - phi * u[t - 1]).sum();
    let mean = var * ((one - phi) / sigma2 * drift + stationary * u[0] / sigma2 + prior.mu_mean / prior.mu_var);
    (mean, var)
}

pub fn update_mu<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    u: &[T],
    phi: T,
    sigma2: T,
    prior: &ComponentPrior<T>,
) -> Result<T> {
    let (mean, var) = mu_posterior(u, phi, sigma2, prior);
    draw_normal(rng, mean, var)
}

/// `(shape, rate)` of the inverse-gamma conditional of the tied `ν²`.
///
/// `pi` holds weight rows `t = 0..=T`; row 0 carries no observation.
pub fn nu2_posterior<T: Real>(
    panel: &FunctionalPanel<T>,
    h: ArrayView2<'_, T>,
    pi: ArrayView2<'_, T>,
    n0: T,
    d0: T,
) -> Result<(T, T)> {
    let n_times = panel.n_times();
    if pi.nrows() != n_times + 1 {
        return Err(Error::Shape(format!(
            "weights have {} rows, expected {}",
            pi.nrows(),
            n_times + 1
        )));
    }
    let mut ss = T::zero();
    for t in 1..=n_times {
        let row = pi.row(t);
        let mean = mean_curve(row.as_slice().expect("row-major"), h)?;
        for (&y, m) in panel.row(t).iter().zip(mean) {
            ss = ss + (y - m) * (y - m);
        }
    }
    let count: T = lit((n_times * panel.n_args()) as f64);
    let half: T = lit(0.5);
    Ok((half * (count + n0), half * (ss + d0)))
}

pub fn update_nu2<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    panel: &FunctionalPanel<T>,
    h: ArrayView2<'_, T>,
    pi: ArrayView2<'_, T>,
    n0: T,
    d0: T,
) -> Result<T> {
    let (shape, rate) = nu2_posterior(panel, h, pi, n0, d0)?;
    draw_inverse_gamma(rng, shape, rate)
}
