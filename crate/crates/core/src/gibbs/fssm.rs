//! The additive-noise functional state-space model.

use ndarray::Array2;
use rand::Rng;

use super::conditionals::{update_mu, update_nu2, update_phi, update_sigma2};
use super::init::initial_values;
use super::{ModelKind, Sampler};
use crate::augment::augment_component;
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::ffbs::{ffbs_draw, Ar1Spec};
use crate::model::{
    compute_a, mean_curve, AugmentationVars, FunctionalPanel, LatentState, ModelParams, PriorHyperparams,
};
use crate::samplers::{std_normal, RngStream};
use crate::scalar::Real;

/// Redraws every weight path in order `ℓ = 1..L−1` given the parameters.
///
/// `A_t` depends on `ν²` but not on the weights, so it is built once per call.
pub fn update_states<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    panel: &FunctionalPanel<T>,
    basis: &BasisSet<T>,
    params: &ModelParams<T>,
    latent: &mut LatentState<T>,
    aug: &mut AugmentationVars<T>,
) -> Result<()> {
    let h = basis.matrix().view();
    let nu2_row = vec![params.nu2; panel.n_args()];
    let a_mats = (1..=panel.n_times())
        .map(|t| compute_a(panel.row_slice(t), h, &nu2_row))
        .collect::<Result<Vec<_>>>()?;
    for ell in 1..basis.n_bases() {
        let pseudo = augment_component(rng, &a_mats, latent, ell, aug)?;
        let l = ell - 1;
        let spec = Ar1Spec::new(params.phi[l], params.mu[l], params.sigma2[l])?;
        let path = ffbs_draw(rng, &spec, &pseudo)?;
        latent.set_path(l, &path)?;
    }
    Ok(())
}

/// Names `mu[ℓ]`, `phi[ℓ]`, `sigma2[ℓ]` for `ℓ = 1..=n_free`.
pub(crate) fn ar_param_names(n_free: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(3 * n_free + 1);
    for prefix in ["mu", "phi", "sigma2"] {
        names.extend((1..=n_free).map(|l| format!("{prefix}[{l}]")));
    }
    names
}

/// Updates `(φ_ℓ, σ²_ℓ, μ_ℓ)` for every component in place.
pub(crate) fn update_ar_params<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    latent: &LatentState<T>,
    prior: &PriorHyperparams<T>,
    mu: &mut [T],
    phi: &mut [T],
    sigma2: &mut [T],
) -> Result<Vec<bool>> {
    let mut accepted = Vec::with_capacity(mu.len());
    for l in 0..mu.len() {
        let u: Vec<T> = latent.u().column(l).to_vec();
        let cp = prior.component(l);
        let (p, ok) = update_phi(rng, &u, mu[l], sigma2[l], phi[l], &cp)?;
        phi[l] = p;
        accepted.push(ok);
        sigma2[l] = update_sigma2(rng, &u, mu[l], phi[l], &cp)?;
        mu[l] = update_mu(rng, &u, phi[l], sigma2[l], &cp)?;
    }
    Ok(accepted)
}

/// Current state of an FSSM chain.
#[derive(Debug, Clone)]
pub struct FssmSampler<T> {
    panel: FunctionalPanel<T>,
    basis: BasisSet<T>,
    prior: PriorHyperparams<T>,
    pub params: ModelParams<T>,
    latent: LatentState<T>,
    aug: AugmentationVars<T>,
}

impl<T: Real> FssmSampler<T> {
    /// Starts from the data-informed initial values.
    pub fn new(panel: FunctionalPanel<T>, basis: BasisSet<T>, prior: PriorHyperparams<T>) -> Result<Self> {
        let (u_row, params) = initial_values(&panel, &basis, &prior)?;
        let latent = LatentState::constant(panel.n_times(), &u_row)?;
        Self::from_state(panel, basis, prior, params, latent)
    }

    /// Starts from explicit parameters and paths.
    pub fn from_state(
        panel: FunctionalPanel<T>,
        basis: BasisSet<T>,
        prior: PriorHyperparams<T>,
        params: ModelParams<T>,
        latent: LatentState<T>,
    ) -> Result<Self> {
        let n_free = basis.n_bases() - 1;
        panel.check_basis(basis.matrix().view(), basis.arguments())?;
        prior.validate(n_free)?;
        params.validate(n_free)?;
        if latent.n_free() != n_free || latent.n_times() != panel.n_times() {
            return Err(Error::Shape(format!(
                "state is {}×{}, expected {}×{n_free}",
                latent.n_times() + 1,
                latent.n_free(),
                panel.n_times() + 1
            )));
        }
        let aug = AugmentationVars::zeros(panel.n_times(), n_free);
        Ok(Self { panel, basis, prior, params, latent, aug })
    }

    pub fn prior(&self) -> &PriorHyperparams<T> {
        &self.prior
    }

    pub fn augmentation(&self) -> &AugmentationVars<T> {
        &self.aug
    }

    /// Swaps in new observations on the same arguments.
    pub fn set_observations(&mut self, y: Array2<T>) -> Result<()> {
        self.panel = self.panel.with_observations(y)?;
        Ok(())
    }
}

impl<T: Real> Sampler<T> for FssmSampler<T> {
    fn model(&self) -> ModelKind {
        ModelKind::Fssm
    }

    fn panel(&self) -> &FunctionalPanel<T> {
        &self.panel
    }

    fn basis(&self) -> &BasisSet<T> {
        &self.basis
    }

    fn latent(&self) -> &LatentState<T> {
        &self.latent
    }

    fn param_names(&self) -> Vec<String> {
        let mut names = ar_param_names(self.params.n_free());
        names.push("nu2".into());
        names
    }

    fn param_values(&self) -> Vec<T> {
        let p = &self.params;
        p.mu.iter().chain(&p.phi).chain(&p.sigma2).copied().chain(std::iter::once(p.nu2)).collect()
    }

    fn sweep(&mut self, rng_params: &mut RngStream, rng_states: &mut RngStream) -> Result<Vec<bool>> {
        let ModelParams { mu, phi, sigma2, nu2 } = &mut self.params;
        let accepted = update_ar_params(rng_params, &self.latent, &self.prior, mu, phi, sigma2)?;
        *nu2 = update_nu2(
            rng_params,
            &self.panel,
            self.basis.matrix().view(),
            self.latent.pi().view(),
            self.prior.nu2_n0,
            self.prior.nu2_d0,
        )?;
        update_states(rng_states, &self.panel, &self.basis, &self.params, &mut self.latent, &mut self.aug)?;
        Ok(accepted)
    }

    fn predictive_replicate(&self, rng: &mut RngStream) -> Result<Array2<f64>> {
        let (n_times, n_args) = (self.panel.n_times(), self.panel.n_args());
        let sd = self.params.nu2.as_f64().sqrt();
        let h = self.basis.matrix().view();
        let mut out = Array2::zeros((n_times, n_args));
        for t in 1..=n_times {
            let pi = self.latent.pi().row(t).to_vec();
            for (k, m) in mean_curve(&pi, h)?.into_iter().enumerate() {
                out[[t - 1, k]] = m.as_f64() + sd * std_normal(rng);
            }
        }
        Ok(out)
    }
}
