//! Storage for thinned posterior draws of one chain.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which observation model produced a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Fssm,
    Mixture,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Fssm => "fssm",
            ModelKind::Mixture => "mixture",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fssm" => Ok(ModelKind::Fssm),
            "mixture" => Ok(ModelKind::Mixture),
            other => Err(Error::Config(format!("unknown model '{other}' (expected fssm or mixture)"))),
        }
    }
}

/// Running first and second moments of posterior-predictive replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveMoments {
    pub count: usize,
    pub sum: Array2<f64>,
    pub sum_sq: Array2<f64>,
}

impl PredictiveMoments {
    pub fn new(n_times: usize, n_args: usize) -> Self {
        Self {
            count: 0,
            sum: Array2::zeros((n_times, n_args)),
            sum_sq: Array2::zeros((n_times, n_args)),
        }
    }

    pub fn push(&mut self, replicate: &Array2<f64>) {
        self.count += 1;
        self.sum += replicate;
        self.sum_sq.zip_mut_with(replicate, |s, &x| *s += x * x);
    }

    /// Adds another accumulator over the same cells.
    pub fn merge(&mut self, other: &PredictiveMoments) -> Result<()> {
        if self.sum.dim() != other.sum.dim() {
            return Err(Error::Shape("predictive accumulators cover different panels".into()));
        }
        self.count += other.count;
        self.sum += &other.sum;
        self.sum_sq += &other.sum_sq;
        Ok(())
    }

    pub fn mean(&self) -> Array2<f64> {
        self.sum.mapv(|s| s / self.count as f64)
    }

    /// Sample variance (denominator `n − 1`) per cell.
    pub fn variance(&self) -> Array2<f64> {
        let n = self.count as f64;
        let mut v = Array2::zeros(self.sum.dim());
        ndarray::Zip::from(&mut v).and(&self.sum).and(&self.sum_sq).for_each(|v, &s, &ss| {
            *v = ((ss - s * s / n) / (n - 1.0)).max(0.0);
        });
        v
    }
}

/// Thinned post-burn-in draws of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawStore<T> {
    pub model: ModelKind,
    pub chain: usize,
    /// Names such as `mu[1]`, `phi[1]`, `sigma2[1]`, `nu2` (or `nu2[ℓ]`).
    pub param_names: Vec<String>,
    /// Post-burn-in iteration number (1-based) of each stored draw.
    pub iterations: Vec<usize>,
    pub params: Vec<Vec<T>>,
    /// `T × L` weights per draw, rows `t = 1..=T`; empty unless states are stored.
    pub weights: Vec<Array2<T>>,
    /// Gini series `G_1..G_T` per draw.
    pub gini: Vec<Vec<T>>,
    pub predictive: PredictiveMoments,
    /// Accepted `φ` proposals per component, over all sweeps including burn-in.
    pub phi_accepted: Vec<u64>,
    pub sweeps: u64,
    pub wall_time_secs: f64,
}

impl<T: Real> DrawStore<T> {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    /// All draws of the named parameter.
    pub fn param_draws(&self, name: &str) -> Result<Vec<T>> {
        let i = self
            .param_index(name)
            .ok_or_else(|| Error::Config(format!("no parameter named '{name}'")))?;
        Ok(self.params.iter().map(|p| p[i]).collect())
    }

    /// Draws of `π_{t,l}` (`t` 1-based, `l` 0-based).
    pub fn weight_draws(&self, t: usize, l: usize) -> Vec<T> {
        self.weights.iter().map(|w| w[[t - 1, l]]).collect()
    }

    /// Draws of `G_t` (`t` 1-based).
    pub fn gini_draws(&self, t: usize) -> Vec<T> {
        self.gini.iter().map(|g| g[t - 1]).collect()
    }

    /// Per-component `φ` acceptance rate.
    pub fn phi_acceptance_rates(&self) -> Vec<f64> {
        self.phi_accepted
            .iter()
            .map(|&a| if self.sweeps == 0 { 0.0 } else { a as f64 / self.sweeps as f64 })
            .collect()
    }
}

/// Concatenates the draws of several chains into one store (chain index of
/// the first). Predictive moments are merged.
pub fn pool_chains<T: Real>(stores: &[DrawStore<T>]) -> Result<DrawStore<T>> {
    let first = stores.first().ok_or_else(|| Error::Config("no chains to pool".into()))?;
    let mut pooled = first.clone();
    for s in &stores[1..] {
        if s.param_names != first.param_names || s.model != first.model {
            return Err(Error::Shape("chains disagree on model or parameters".into()));
        }
        pooled.iterations.extend_from_slice(&s.iterations);
        pooled.params.extend(s.params.iter().cloned());
        pooled.weights.extend(s.weights.iter().cloned());
        pooled.gini.extend(s.gini.iter().cloned());
        pooled.predictive.merge(&s.predictive)?;
        for (a, b) in pooled.phi_accepted.iter_mut().zip(&s.phi_accepted) {
            *a += b;
        }
        pooled.sweeps += s.sweeps;
        pooled.wall_time_secs = pooled.wall_time_secs.max(s.wall_time_secs);
    }
    Ok(pooled)
}
