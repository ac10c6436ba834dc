//! Gibbs sampling for the functional state-space model and the chain driver
//! shared with the mixture baseline.
//!
//! One sweep updates `(φ_ℓ, σ²_ℓ, μ_ℓ)` for every component, then `ν²`, then
//! each weight path in turn through the augmentation and FFBS.

mod conditionals;
mod fssm;
mod init;
mod store;

use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::model::{FunctionalPanel, LatentState, PriorHyperparams};
use crate::samplers::RngStream;
use crate::scalar::Real;

pub use conditionals::{
    mu_posterior, nu2_posterior, phi_acceptance, phi_proposal, sigma2_posterior, update_mu, update_nu2,
    update_phi, update_sigma2, ComponentPrior,
};
pub use fssm::{update_states, FssmSampler};
pub(crate) use fssm::{ar_param_names, update_ar_params};
pub use init::{initial_values, nnls, static_weights, WEIGHT_FLOOR};
pub use store::{pool_chains, DrawStore, ModelKind, PredictiveMoments};

/// Substream keys of the blocks inside one sweep.
const BLOCK_PARAMS: u64 = 0;
const BLOCK_STATES: u64 = 1;
const BLOCK_PREDICTIVE: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcConfig {
    /// Post-burn-in sweeps.
    pub n_iter: usize,
    pub n_burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub n_chains: usize,
    /// Keep the full weight matrices of every stored draw.
    pub store_states: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self { n_iter: 30_000, n_burnin: 10_000, thin: 1, seed: 1, n_chains: 1, store_states: true }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.n_iter == 0 {
            problems.push("n_iter must be positive");
        }
        if self.thin == 0 {
            problems.push("thin must be at least 1");
        }
        if self.n_chains == 0 {
            problems.push("n_chains must be positive");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    pub fn stored_draws(&self) -> usize {
        self.n_iter / self.thin
    }
}

/// A model whose posterior can be explored sweep by sweep.
pub trait Sampler<T: Real> {
    fn model(&self) -> ModelKind;
    fn panel(&self) -> &FunctionalPanel<T>;
    fn basis(&self) -> &BasisSet<T>;
    fn latent(&self) -> &LatentState<T>;
    fn param_names(&self) -> Vec<String>;
    fn param_values(&self) -> Vec<T>;
    /// One full sweep; returns which `φ` proposals were accepted.
    fn sweep(&mut self, rng_params: &mut RngStream, rng_states: &mut RngStream) -> Result<Vec<bool>>;
    /// One replicate of the whole panel from the current state.
    fn predictive_replicate(&self, rng: &mut RngStream) -> Result<Array2<f64>>;
}

/// A sweep that aborted, with the state it started from.
#[derive(Debug, Clone)]
pub struct ChainFailure {
    pub chain: usize,
    /// Global sweep index, burn-in included (1-based).
    pub sweep: usize,
    pub error: Error,
    pub param_names: Vec<String>,
    pub param_values: Vec<f64>,
    /// `u` rows `t = 0..=T` at the start of the failing sweep.
    pub states: Array2<f64>,
}

impl std::fmt::Display for ChainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "chain {} aborted at sweep {}: {}", self.chain, self.sweep, self.error)
    }
}

impl std::error::Error for ChainFailure {}

impl From<ChainFailure> for Error {
    fn from(f: ChainFailure) -> Self {
        match f.error {
            Error::Numerical(m) => Error::Numerical(format!("chain {}, sweep {}: {m}", f.chain, f.sweep)),
            Error::Invariant(m) => Error::Invariant(format!("chain {}, sweep {}: {m}", f.chain, f.sweep)),
            other => other,
        }
    }
}

/// `G_t = Σ_ℓ π_{tℓ} G_ℓ` for `t = 1..=T`.
pub fn gini_of_state<T: Real>(latent: &LatentState<T>, ginis: &[T]) -> Vec<T> {
    latent
        .pi()
        .rows()
        .into_iter()
        .skip(1)
        .map(|row| row.iter().zip(ginis).map(|(&p, &g)| p * g).sum())
        .collect()
}

#[allow(clippy::result_large_err)]
/// Runs burn-in and sampling for one chain. Chain `c` draws from RNG stream
/// `c`, and every sweep block from its own substream.
pub fn drive_chain<T: Real, S: Sampler<T>>(
    sampler: &mut S,
    config: &McmcConfig,
    chain: usize,
) -> std::result::Result<DrawStore<T>, ChainFailure> {
    let start = Instant::now();
    let base = RngStream::new(config.seed, chain as u64);
    let names = sampler.param_names();
    let n_free = sampler.latent().n_free();
    let panel = sampler.panel();
    let mut store = DrawStore {
        model: sampler.model(),
        chain,
        param_names: names.clone(),
        iterations: Vec::with_capacity(config.stored_draws()),
        params: Vec::with_capacity(config.stored_draws()),
        weights: Vec::new(),
        gini: Vec::with_capacity(config.stored_draws()),
        predictive: PredictiveMoments::new(panel.n_times(), panel.n_args()),
        phi_accepted: vec![0; n_free],
        sweeps: 0,
        wall_time_secs: 0.0,
    };
    let ginis = sampler.basis().ginis().to_vec();
    let total = config.n_burnin + config.n_iter;
    for s in 0..total {
        let key = s as u64;
        let snapshot = |sampler: &S, error: Error| ChainFailure {
            chain,
            sweep: s + 1,
            error,
            param_names: names.clone(),
            param_values: sampler.param_values().iter().map(|v| v.as_f64()).collect(),
            states: sampler.latent().u().mapv(|v| v.as_f64()),
        };
        let mut rp = base.substream(&[key, BLOCK_PARAMS]);
        let mut rs = base.substream(&[key, BLOCK_STATES]);
        let saved = (sampler.param_values(), sampler.latent().clone());
        let accepted = match sampler.sweep(&mut rp, &mut rs) {
            Ok(a) => a,
            Err(e) => {
                let mut failure = snapshot(sampler, e);
                failure.param_values = saved.0.iter().map(|v| v.as_f64()).collect();
                failure.states = saved.1.u().mapv(|v| v.as_f64());
                return Err(failure);
            }
        };
        store.sweeps += 1;
        for (count, ok) in store.phi_accepted.iter_mut().zip(accepted) {
            *count += u64::from(ok);
        }
        let iter = s + 1;
        if iter <= config.n_burnin {
            continue;
        }
        let post = iter - config.n_burnin;
        if !post.is_multiple_of(config.thin) {
            continue;
        }
        store.iterations.push(post);
        store.params.push(sampler.param_values());
        store.gini.push(gini_of_state(sampler.latent(), &ginis));
        if config.store_states {
            let pi = sampler.latent().pi();
            store.weights.push(pi.slice(ndarray::s![1.., ..]).to_owned());
        }
        let mut rq = base.substream(&[key, BLOCK_PREDICTIVE]);
        let replicate = sampler.predictive_replicate(&mut rq).map_err(|e| snapshot(sampler, e))?;
        store.predictive.push(&replicate);
    }
    store.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(store)
}

/// One FSSM chain from the data-informed initial state.
pub fn run_chain<T: Real>(
    config: &McmcConfig,
    chain: usize,
    panel: &FunctionalPanel<T>,
    basis: &BasisSet<T>,
    prior: &PriorHyperparams<T>,
) -> Result<DrawStore<T>> {
    config.validate()?;
    let mut sampler = FssmSampler::new(panel.clone(), basis.clone(), prior.clone())?;
    Ok(drive_chain(&mut sampler, config, chain)?)
}

/// `config.n_chains` FSSM chains in parallel on the current rayon pool.
pub fn run_chains<T: Real>(
    config: &McmcConfig,
    panel: &FunctionalPanel<T>,
    basis: &BasisSet<T>,
    prior: &PriorHyperparams<T>,
) -> Result<Vec<DrawStore<T>>> {
    config.validate()?;
    (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(config, c, panel, basis, prior))
        .collect()
}
