//! Synthetic panels from the additive-noise model.

use ndarray::Array2;
use rand::Rng;

use crate::basis::{presets, BasisSet};
use crate::error::{domain_err, Error, Result};
use crate::gibbs::gini_of_state;
use crate::model::{mean_curve, FunctionalPanel, LatentState, ModelParams};
use crate::samplers::{draw_normal, std_normal};

/// Length of every simulated series.
pub const SCENARIO_TIMES: usize = 200;

/// One cell of the simulation grid: `K` arguments `x_k = k/(K+1)` and a
/// common AR coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub n_args: usize,
    pub phi: f64,
}

impl Scenario {
    pub fn new(n_args: usize, phi: f64) -> Result<Self> {
        let s = Self { n_args, phi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_args == 0 {
            return Err(Error::Config("scenario needs at least one argument".into()));
        }
        if !(self.phi.abs() < 1.0) {
            return Err(Error::Config(format!("phi = {} must lie in (-1, 1)", self.phi)));
        }
        Ok(())
    }

    /// `x_k = k/(K+1)`: `0.2k` for `K = 4` and `0.1k` for `K = 9`.
    pub fn arguments(&self) -> Vec<f64> {
        (1..=self.n_args).map(|k| k as f64 / (self.n_args + 1) as f64).collect()
    }

    /// `μ = (0.1, −0.3)`, `σ² = 0.005`, `ν² = 10⁻⁴`.
    pub fn params(&self) -> ModelParams<f64> {
        ModelParams { mu: vec![0.1, -0.3], phi: vec![self.phi; 2], sigma2: vec![0.005; 2], nu2: 1e-4 }
    }

    pub fn basis(&self) -> Result<BasisSet<f64>> {
        BasisSet::from_spec(&presets::ORACLE, &self.arguments())
    }
}

/// A simulated panel with the quantities that generated it.
#[derive(Debug, Clone)]
pub struct SyntheticTruth {
    pub panel: FunctionalPanel<f64>,
    pub latent: LatentState<f64>,
    /// `G_1..G_T`.
    pub gini: Vec<f64>,
    pub params: ModelParams<f64>,
    pub basis: BasisSet<f64>,
}

impl SyntheticTruth {
    /// True weights, rows `t = 1..=T`.
    pub fn weights(&self) -> Array2<f64> {
        self.latent.pi().slice(ndarray::s![1.., ..]).to_owned()
    }
}

/// Stationary AR(1) paths `u_0..=u_T` for every component.
pub fn simulate_states<R: Rng + ?Sized>(rng: &mut R, params: &ModelParams<f64>, n_times: usize) -> Result<LatentState<f64>> {
    params.validate(params.n_free())?;
    let mut u = Array2::zeros((n_times + 1, params.n_free()));
    for l in 0..params.n_free() {
        let (mu, phi, s2) = (params.mu[l], params.phi[l], params.sigma2[l]);
        u[[0, l]] = draw_normal(rng, mu, params.stationary_variance(l))?;
        for t in 1..=n_times {
            u[[t, l]] = (1.0 - phi) * mu + phi * u[[t - 1, l]] + s2.sqrt() * std_normal(rng);
        }
    }
    LatentState::new(u)
}

/// `y_{tk} = (H π_t)_k + ν ε_{tk}` for `t = 1..=T`.
pub fn simulate_observations<R: Rng + ?Sized>(
    rng: &mut R,
    basis: &BasisSet<f64>,
    latent: &LatentState<f64>,
    nu2: f64,
) -> Result<Array2<f64>> {
    if !(nu2 > 0.0) {
        return Err(domain_err!("observation variance {nu2} must be positive"));
    }
    let n_times = latent.n_times();
    let mut y = Array2::zeros((n_times, basis.n_args()));
    let sd = nu2.sqrt();
    for t in 1..=n_times {
        let pi = latent.pi().row(t).to_vec();
        for (k, m) in mean_curve(&pi, basis.matrix().view())?.into_iter().enumerate() {
            y[[t - 1, k]] = m + sd * std_normal(rng);
        }
    }
    Ok(y)
}

/// Simulates a full scenario with `T = 200`.
pub fn generate_synthetic<R: Rng + ?Sized>(rng: &mut R, scenario: Scenario) -> Result<SyntheticTruth> {
    generate_with(rng, scenario.basis()?, scenario.params(), SCENARIO_TIMES)
}

/// Simulates from arbitrary parameters and bases.
pub fn generate_with<R: Rng + ?Sized>(
    rng: &mut R,
    basis: BasisSet<f64>,
    params: ModelParams<f64>,
    n_times: usize,
) -> Result<SyntheticTruth> {
    if params.n_free() + 1 != basis.n_bases() {
        return Err(Error::Shape(format!(
            "{} free weights for {} bases",
            params.n_free(),
            basis.n_bases()
        )));
    }
    let latent = simulate_states(rng, &params, n_times)?;
    let y = simulate_observations(rng, &basis, &latent, params.nu2)?;
    let panel = FunctionalPanel::new(y, basis.arguments().to_vec())?;
    let gini = gini_of_state(&latent, basis.ginis());
    Ok(SyntheticTruth { panel, latent, gini, params, basis })
}
