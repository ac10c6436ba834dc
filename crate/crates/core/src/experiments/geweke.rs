//! Joint-distribution (Geweke) checks for the samplers.
//!
//! The marginal-conditional simulator draws parameters, paths and data from
//! the prior. The successive-conditional simulator alternates one posterior
//! sweep with a fresh data draw given the current state. Both target the
//! same joint law, so every test quantity must agree in mean and variance.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::synthetic::{simulate_observations, simulate_states};
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::gibbs::{FssmSampler, ModelKind, Sampler};
use crate::mixture::MixtureSampler;
use crate::model::{FunctionalPanel, LatentState, ModelParams, PriorHyperparams};
use crate::samplers::{draw_inverse_gamma, draw_normal, draw_truncated_normal, open_unit, RngStream};

/// Number of batches for batch-means standard errors.
pub const GEWEKE_BATCHES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Moment {
    Mean,
    Variance,
}

/// One compared quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeRow {
    pub name: String,
    pub moment: Moment,
    pub prior: f64,
    pub chain: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GewekeReport {
    pub model: ModelKind,
    pub iterations: usize,
    pub rows: Vec<GewekeRow>,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| if r.z.is_finite() { r.z.abs() } else { f64::INFINITY }).fold(0.0, f64::max)
    }

    /// Rows with `|z| ≥ bound` (non-finite scores included).
    pub fn failures(&self, bound: f64) -> Vec<&GewekeRow> {
        self.rows.iter().filter(|r| !(r.z.abs() < bound)).collect()
    }
}

/// Prior tightened so that every tested moment of order four exists:
/// `μ ~ N(0, 1)`, `φ ~ TN(0.5, 0.1)`, `σ² ~ IG(5, 0.4)`, `ν² ~ IG(5, 0.04)`.
pub fn geweke_prior(n_free: usize) -> PriorHyperparams<f64> {
    PriorHyperparams::uniform(n_free, 0.0, 1.0, 0.5, 0.1, 10.0, 0.8, 10.0, 0.08)
}

fn draw_params(rng: &mut RngStream, prior: &PriorHyperparams<f64>) -> Result<ModelParams<f64>> {
    let n = prior.n_free();
    let mut p = ModelParams { mu: Vec::with_capacity(n), phi: Vec::with_capacity(n), sigma2: Vec::with_capacity(n), nu2: 0.0 };
    for l in 0..n {
        p.mu.push(draw_normal(rng, prior.mu_mean[l], prior.mu_var[l])?);
        p.phi.push(draw_truncated_normal(rng, prior.phi_mean[l], prior.phi_var[l], -1.0, 1.0)?);
        p.sigma2.push(draw_inverse_gamma(rng, 0.5 * prior.sigma2_n0[l], 0.5 * prior.sigma2_d0[l])?);
    }
    p.nu2 = draw_inverse_gamma(rng, 0.5 * prior.nu2_n0, 0.5 * prior.nu2_d0)?;
    Ok(p)
}

fn path_times(n_times: usize) -> [usize; 3] {
    [1, n_times.div_ceil(2), n_times]
}

fn tracked(values: Vec<f64>, latent: &LatentState<f64>, times: [usize; 3]) -> Vec<f64> {
    let mut q = values;
    q.extend(times.iter().map(|&t| latent.u()[[t, 0]]));
    q
}

fn categorical(rng: &mut RngStream, p: impl Iterator<Item = f64>) -> usize {
    let mut u = open_unit(rng);
    let mut last = 0;
    for (i, pi) in p.enumerate() {
        u -= pi;
        last = i;
        if u <= 0.0 {
            break;
        }
    }
    last
}

fn mixture_data(
    rng: &mut RngStream,
    basis: &BasisSet<f64>,
    latent: &LatentState<f64>,
    nu2: &[f64],
) -> Result<(Array2<u8>, Array2<f64>)> {
    let h = basis.matrix();
    let (n_times, n_args) = (latent.n_times(), basis.n_args());
    let mut labels = Array2::zeros((n_times, n_args));
    let mut y = Array2::zeros((n_times, n_args));
    for t in 1..=n_times {
        for k in 0..n_args {
            let z = categorical(rng, latent.pi().row(t).iter().copied());
            labels[[t - 1, k]] = z as u8;
            y[[t - 1, k]] = draw_normal(rng, h[[k, z]], nu2[z])?;
        }
    }
    Ok((labels, y))
}

fn labelled_data(rng: &mut RngStream, basis: &BasisSet<f64>, labels: &Array2<u8>, nu2: &[f64]) -> Result<Array2<f64>> {
    let h = basis.matrix();
    let mut y = Array2::zeros(labels.dim());
    for ((t, k), &z) in labels.indexed_iter() {
        let z = usize::from(z);
        y[[t, k]] = draw_normal(rng, h[[k, z]], nu2[z])?;
    }
    Ok(y)
}

fn batch_mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let m = xs.iter().sum::<f64>() / n as f64;
    let size = n / GEWEKE_BATCHES;
    let var = xs
        .chunks_exact(size)
        .take(GEWEKE_BATCHES)
        .map(|c| (c.iter().sum::<f64>() / size as f64 - m).powi(2))
        .sum::<f64>()
        / (GEWEKE_BATCHES - 1) as f64;
    (m, (var / GEWEKE_BATCHES as f64).sqrt())
}

fn compare(names: Vec<String>, marginal: &[Vec<f64>], successive: &[Vec<f64>]) -> Vec<GewekeRow> {
    let column = |rows: &[Vec<f64>], i: usize| -> Vec<f64> { rows.iter().map(|r| r[i]).collect() };
    let mut rows = Vec::with_capacity(2 * names.len());
    for (i, name) in names.into_iter().enumerate() {
        let a = column(marginal, i);
        let b = column(successive, i);
        let (ma, sa) = batch_mean_se(&a);
        let (mb, sb) = batch_mean_se(&b);
        let z = (mb - ma) / (sa * sa + sb * sb).sqrt();
        rows.push(GewekeRow { name: name.clone(), moment: Moment::Mean, prior: ma, chain: mb, z });
        // second moment about the prior-simulation mean
        let a2: Vec<f64> = a.iter().map(|x| (x - ma).powi(2)).collect();
        let b2: Vec<f64> = b.iter().map(|x| (x - ma).powi(2)).collect();
        let (va, sa) = batch_mean_se(&a2);
        let (vb, sb) = batch_mean_se(&b2);
        let z = (vb - va) / (sa * sa + sb * sb).sqrt();
        rows.push(GewekeRow { name, moment: Moment::Variance, prior: va, chain: vb, z });
    }
    rows
}

fn check_sizes(basis: &BasisSet<f64>, n_times: usize, iterations: usize) -> Result<()> {
    if iterations < 2 * GEWEKE_BATCHES || n_times == 0 || basis.n_args() == 0 {
        return Err(Error::Config(format!(
            "Geweke check needs T ≥ 1, K ≥ 1 and at least {} iterations",
            2 * GEWEKE_BATCHES
        )));
    }
    Ok(())
}

/// Geweke check of the FSSM sampler, tracking every parameter and the first
/// path at `t = 1`, the midpoint and `T`.
pub fn geweke_fssm(
    basis: &BasisSet<f64>,
    prior: &PriorHyperparams<f64>,
    n_times: usize,
    iterations: usize,
    seed: u64,
) -> Result<GewekeReport> {
    check_sizes(basis, n_times, iterations)?;
    let times = path_times(n_times);
    let mut rng = RngStream::new(seed, 0);
    let mut marginal = Vec::with_capacity(iterations);
    let mut start = None;
    for _ in 0..iterations {
        let p = draw_params(&mut rng, prior)?;
        let latent = simulate_states(&mut rng, &p, n_times)?;
        let values: Vec<f64> = p.mu.iter().chain(&p.phi).chain(&p.sigma2).copied().chain([p.nu2]).collect();
        marginal.push(tracked(values, &latent, times));
        if start.is_none() {
            start = Some((p, latent));
        }
    }

    let (p, latent) = start.expect("at least one iteration");
    let y = simulate_observations(&mut rng, basis, &latent, p.nu2)?;
    let panel = FunctionalPanel::new(y, basis.arguments().to_vec())?;
    let mut sampler = FssmSampler::from_state(panel, basis.clone(), prior.clone(), p, latent)?;
    let chain = RngStream::new(seed, 1);
    let mut successive = Vec::with_capacity(iterations);
    for it in 0..iterations as u64 {
        sampler.sweep(&mut chain.substream(&[it, 0]), &mut chain.substream(&[it, 1]))?;
        let y = simulate_observations(&mut chain.substream(&[it, 2]), basis, sampler.latent(), sampler.params.nu2)?;
        sampler.set_observations(y)?;
        successive.push(tracked(sampler.param_values(), sampler.latent(), times));
    }
    let names = tracked_names(sampler.param_names());
    Ok(GewekeReport { model: ModelKind::Fssm, iterations, rows: compare(names, &marginal, &successive) })
}

/// Geweke check of the mixture sampler. `prior.nu2_*` is shared by every
/// component variance; the successive simulator keeps labels and redraws
/// the data given them.
pub fn geweke_mixture(
    basis: &BasisSet<f64>,
    prior: &PriorHyperparams<f64>,
    n_times: usize,
    iterations: usize,
    seed: u64,
) -> Result<GewekeReport> {
    check_sizes(basis, n_times, iterations)?;
    let times = path_times(n_times);
    let n_bases = basis.n_bases();
    let mut rng = RngStream::new(seed, 0);
    let mut marginal = Vec::with_capacity(iterations);
    let mut start = None;
    for _ in 0..iterations {
        let p = draw_params(&mut rng, prior)?;
        let nu2 = (0..n_bases)
            .map(|_| draw_inverse_gamma(&mut rng, 0.5 * prior.nu2_n0, 0.5 * prior.nu2_d0))
            .collect::<Result<Vec<f64>>>()?;
        let latent = simulate_states(&mut rng, &p, n_times)?;
        let values: Vec<f64> = p.mu.iter().chain(&p.phi).chain(&p.sigma2).chain(&nu2).copied().collect();
        marginal.push(tracked(values, &latent, times));
        if start.is_none() {
            start = Some((p, nu2, latent));
        }
    }

    let (p, nu2, latent) = start.expect("at least one iteration");
    let (labels, y) = mixture_data(&mut rng, basis, &latent, &nu2)?;
    let panel = FunctionalPanel::new(y, basis.arguments().to_vec())?;
    let mut sampler = MixtureSampler::from_state(panel, basis.clone(), prior.clone(), p, nu2, latent)?;
    sampler.set_labels(labels)?;
    let chain = RngStream::new(seed, 1);
    let mut successive = Vec::with_capacity(iterations);
    for it in 0..iterations as u64 {
        sampler.sweep(&mut chain.substream(&[it, 0]), &mut chain.substream(&[it, 1]))?;
        let y = labelled_data(&mut chain.substream(&[it, 2]), basis, sampler.labels(), &sampler.nu2_comp)?;
        sampler.set_observations(y)?;
        successive.push(tracked(sampler.param_values(), sampler.latent(), times));
    }
    let names = tracked_names(sampler.param_names());
    Ok(GewekeReport { model: ModelKind::Mixture, iterations, rows: compare(names, &marginal, &successive) })
}

fn tracked_names(mut names: Vec<String>) -> Vec<String> {
    names.extend(["u[1,first]", "u[1,mid]", "u[1,last]"].map(String::from));
    names
}
