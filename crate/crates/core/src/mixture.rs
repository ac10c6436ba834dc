//! Mixture-of-normals baseline: each observation comes from one basis curve,
//! chosen with the softmax weights, plus component-specific noise.
//!
//! Labels are drawn given the weights, and each weight path is then updated
//! through a Pólya-Gamma augmentation of the multinomial label likelihood.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;

use crate::augment::PseudoObservation;
use crate::basis::BasisSet;
use crate::error::{Error, Result};
use crate::ffbs::{ffbs_draw, Ar1Spec};
use crate::gibbs::{initial_values, ModelKind, Sampler};
use crate::model::{FunctionalPanel, LatentState, ModelParams, PriorHyperparams};
use crate::samplers::{draw_log_inverse_gamma, draw_polya_gamma, open_unit, std_normal, RngStream};
use crate::scalar::{lit, log_sum_exp, Real};

/// Largest number of components the byte label storage supports.
pub const MAX_COMPONENTS: usize = 255;

/// Default hyperparameters for the mixture: as the FSSM, with
/// `ν²_ℓ ~ IG(0.005, 0.005)`.
pub fn default_mixture_prior<T: Real>(n_free: usize) -> PriorHyperparams<T> {
    PriorHyperparams { nu2_n0: lit(0.01), nu2_d0: lit(0.01), ..PriorHyperparams::default_for(n_free) }
}

/// Draws one label per argument; label `ℓ` (0-based) picks basis column `ℓ`.
///
/// `P(z = ℓ) ∝ N(y; h_{kℓ}, ν²_ℓ) e^{u_ℓ}` with `u_0 = 0`, normalised in log space.
pub fn sample_labels<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    y_row: &[T],
    h: ArrayView2<'_, T>,
    nu2_comp: &[T],
    u_row: &[T],
) -> Result<Vec<u8>> {
    let l_len = nu2_comp.len();
    if h.ncols() != l_len || u_row.len() + 1 != l_len || h.nrows() != y_row.len() {
        return Err(Error::Shape("labels: basis, variances and states disagree".into()));
    }
    let half: T = lit(0.5);
    let mut logp = vec![T::zero(); l_len];
    let mut labels = Vec::with_capacity(y_row.len());
    for (k, &y) in y_row.iter().enumerate() {
        for l in 0..l_len {
            let r = y - h[[k, l]];
            let prior = if l == 0 { T::zero() } else { u_row[l - 1] };
            logp[l] = prior - half * (nu2_comp[l].ln() + r * r / nu2_comp[l]);
        }
        let norm = log_sum_exp(logp.iter().copied());
        let mut target = open_unit(rng);
        let mut chosen = l_len - 1;
        for (l, &lp) in logp.iter().enumerate() {
            target -= (lp - norm).exp().as_f64();
            if target <= 0.0 {
                chosen = l;
                break;
            }
        }
        labels.push(chosen as u8);
    }
    Ok(labels)
}

/// `(shape, rate)` of the inverse-gamma conditional of `ν²_ℓ`.
pub fn component_variance_posterior<T: Real>(
    l: usize,
    y: ArrayView2<'_, T>,
    labels: ArrayView2<'_, u8>,
    h: ArrayView2<'_, T>,
    n0: T,
    d0: T,
) -> (T, T) {
    let mut count = 0usize;
    let mut ss = T::zero();
    for ((t, k), &z) in labels.indexed_iter() {
        if usize::from(z) == l {
            count += 1;
            let r = y[[t, k]] - h[[k, l]];
            ss = ss + r * r;
        }
    }
    let half: T = lit(0.5);
    (half * (n0 + lit(count as f64)), half * (d0 + ss))
}

/// Draws `ν²_ℓ`. An empty component draws from its prior, whose tail can pass
/// the largest float; such draws are capped at `√max`, where the component's
/// label density is already zero to working precision.
pub fn update_component_variance<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    l: usize,
    y: ArrayView2<'_, T>,
    labels: ArrayView2<'_, u8>,
    h: ArrayView2<'_, T>,
    n0: T,
    d0: T,
) -> Result<T> {
    let (shape, rate) = component_variance_posterior(l, y, labels, h, n0, d0);
    let log_cap = T::max_value().ln() * lit(0.5);
    let log_v = draw_log_inverse_gamma(rng, shape, rate)?;
    Ok(log_v.min(log_cap).exp())
}

/// Pseudo-observation for one `(t, ℓ)` given the count `N` of labels equal
/// to `ℓ` among `K`: `ỹ = ln s + (N − K/2)/ω`, precision `ω`.
pub fn mixture_pseudo_obs<T: Real>(count: usize, n_args: usize, omega: T, log_s: T) -> Result<PseudoObservation<T>> {
    if omega == T::zero() {
        return Ok(PseudoObservation::missing());
    }
    let offset: T = lit(count as f64 - 0.5 * n_args as f64);
    PseudoObservation::observed(log_s + offset / omega, omega)
}

/// Redraws each weight path given the labels; `omega` (`T × (L−1)`) receives
/// the Pólya-Gamma draws.
pub fn update_mixture_states<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    labels: ArrayView2<'_, u8>,
    params: &ModelParams<T>,
    latent: &mut LatentState<T>,
    omega: &mut Array2<T>,
) -> Result<()> {
    let (n_times, n_args) = labels.dim();
    for ell in 1..=latent.n_free() {
        let mut pseudo = Vec::with_capacity(n_times);
        for t in 1..=n_times {
            let log_v = latent.log_v_row(t);
            let log_s = log_sum_exp(log_v.iter().enumerate().filter(|&(i, _)| i != ell).map(|(_, &x)| x));
            let xi = log_v[ell] - log_s;
            let w = if n_args == 0 { T::zero() } else { draw_polya_gamma(rng, n_args as u64, xi)? };
            omega[[t - 1, ell - 1]] = w;
            let count = labels.row(t - 1).iter().filter(|&&z| usize::from(z) == ell).count();
            pseudo.push(mixture_pseudo_obs(count, n_args, w, log_s).map_err(|e| match e {
                Error::Numerical(m) => Error::Numerical(format!("{m} at t={t}, component {ell}")),
                other => other,
            })?);
        }
        let l = ell - 1;
        let spec = Ar1Spec::new(params.phi[l], params.mu[l], params.sigma2[l])?;
        let path = ffbs_draw(rng, &spec, &pseudo)?;
        latent.set_path(l, &path)?;
    }
    Ok(())
}

/// Current state of a mixture chain. `params.nu2` is unused; component
/// variances live in `nu2_comp`.
#[derive(Debug, Clone)]
pub struct MixtureSampler<T> {
    panel: FunctionalPanel<T>,
    basis: BasisSet<T>,
    prior: PriorHyperparams<T>,
    pub params: ModelParams<T>,
    pub nu2_comp: Vec<T>,
    labels: Array2<u8>,
    omega: Array2<T>,
    latent: LatentState<T>,
}

impl<T: Real> MixtureSampler<T> {
    /// Starts from the data-informed initial values, with every component
    /// variance at the static-fit residual variance and labels drawn from them.
    pub fn new(
        panel: FunctionalPanel<T>,
        basis: BasisSet<T>,
        prior: PriorHyperparams<T>,
        rng: &mut RngStream,
    ) -> Result<Self> {
        let (u_row, params) = initial_values(&panel, &basis, &prior)?;
        let latent = LatentState::constant(panel.n_times(), &u_row)?;
        let nu2_comp = vec![params.nu2; basis.n_bases()];
        let mut s = Self::from_state(panel, basis, prior, params, nu2_comp, latent)?;
        s.resample_labels(rng)?;
        Ok(s)
    }

    /// Starts from explicit values; labels start at component 0 until drawn.
    /// Initial labels drawn from a substream of chain `chain` that no sweep uses.
    pub fn for_chain(
        panel: FunctionalPanel<T>,
        basis: BasisSet<T>,
        prior: PriorHyperparams<T>,
        seed: u64,
        chain: usize,
    ) -> Result<Self> {
        let mut init_rng = RngStream::new(seed, chain as u64).substream(&[u64::MAX]);
        Self::new(panel, basis, prior, &mut init_rng)
    }

    pub fn from_state(
        panel: FunctionalPanel<T>,
        basis: BasisSet<T>,
        prior: PriorHyperparams<T>,
        params: ModelParams<T>,
        nu2_comp: Vec<T>,
        latent: LatentState<T>,
    ) -> Result<Self> {
        let l_len = basis.n_bases();
        if l_len > MAX_COMPONENTS {
            return Err(Error::Config(format!("mixture supports at most {MAX_COMPONENTS} components")));
        }
        panel.check_basis(basis.matrix().view(), basis.arguments())?;
        prior.validate(l_len - 1)?;
        params.validate(l_len - 1)?;
        if nu2_comp.len() != l_len || nu2_comp.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::Config(format!("need {l_len} positive component variances")));
        }
        if latent.n_free() != l_len - 1 || latent.n_times() != panel.n_times() {
            return Err(Error::Shape("state dimensions disagree with panel and basis".into()));
        }
        let labels = Array2::zeros((panel.n_times(), panel.n_args()));
        let omega = Array2::zeros((panel.n_times(), l_len - 1));
        Ok(Self { panel, basis, prior, params, nu2_comp, labels, omega, latent })
    }

    pub fn labels(&self) -> &Array2<u8> {
        &self.labels
    }

    pub fn set_labels(&mut self, labels: Array2<u8>) -> Result<()> {
        if labels.dim() != self.labels.dim() || labels.iter().any(|&z| usize::from(z) >= self.basis.n_bases()) {
            return Err(Error::Shape("labels do not fit the panel and basis".into()));
        }
        self.labels = labels;
        Ok(())
    }

    pub fn omega(&self) -> &Array2<T> {
        &self.omega
    }

    /// Label counts `N_{tℓ}` for all `L` labels, `T × L`.
    pub fn label_counts(&self) -> Array2<usize> {
        let mut counts = Array2::zeros((self.panel.n_times(), self.basis.n_bases()));
        for ((t, _), &z) in self.labels.indexed_iter() {
            counts[[t, usize::from(z)]] += 1;
        }
        counts
    }

    pub fn set_observations(&mut self, y: Array2<T>) -> Result<()> {
        self.panel = self.panel.with_observations(y)?;
        Ok(())
    }

    fn resample_labels<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let h = self.basis.matrix().view();
        for t in 1..=self.panel.n_times() {
            let u_row: Vec<T> = self.latent.u().row(t).to_vec();
            let z = sample_labels(rng, self.panel.row_slice(t), h, &self.nu2_comp, &u_row)?;
            self.labels.row_mut(t - 1).assign(&ArrayView1::from(&z[..]));
        }
        Ok(())
    }
}

impl<T: Real> Sampler<T> for MixtureSampler<T> {
    fn model(&self) -> ModelKind {
        ModelKind::Mixture
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
        let mut names = crate::gibbs::ar_param_names(self.params.n_free());
        names.extend((1..=self.nu2_comp.len()).map(|l| format!("nu2[{l}]")));
        names
    }

    fn param_values(&self) -> Vec<T> {
        let p = &self.params;
        p.mu.iter().chain(&p.phi).chain(&p.sigma2).chain(&self.nu2_comp).copied().collect()
    }

    fn sweep(&mut self, rng_params: &mut RngStream, rng_states: &mut RngStream) -> Result<Vec<bool>> {
        let ModelParams { mu, phi, sigma2, .. } = &mut self.params;
        let accepted = crate::gibbs::update_ar_params(rng_params, &self.latent, &self.prior, mu, phi, sigma2)?;
        let h = self.basis.matrix().view();
        for l in 0..self.nu2_comp.len() {
            self.nu2_comp[l] = update_component_variance(
                rng_params,
                l,
                self.panel.y().view(),
                self.labels.view(),
                h,
                self.prior.nu2_n0,
                self.prior.nu2_d0,
            )?;
        }
        self.resample_labels(rng_states)?;
        update_mixture_states(rng_states, self.labels.view(), &self.params, &mut self.latent, &mut self.omega)?;
        Ok(accepted)
    }

    fn predictive_replicate(&self, rng: &mut RngStream) -> Result<Array2<f64>> {
        let (n_times, n_args) = (self.panel.n_times(), self.panel.n_args());
        let h = self.basis.matrix();
        let sd: Vec<f64> = self.nu2_comp.iter().map(|v| v.as_f64().sqrt()).collect();
        let mut out = Array2::zeros((n_times, n_args));
        for t in 1..=n_times {
            let pi = self.latent.pi().row(t);
            for k in 0..n_args {
                let mut target = open_unit(rng);
                let mut l = pi.len() - 1;
                for (j, &p) in pi.iter().enumerate() {
                    target -= p.as_f64();
                    if target <= 0.0 {
                        l = j;
                        break;
                    }
                }
                out[[t - 1, k]] = h[[k, l]].as_f64() + sd[l] * std_normal(rng);
            }
        }
        Ok(out)
    }
}

/// One mixture chain from the data-informed initial state.
pub fn run_mixture_chain<T: Real>(
    config: &crate::gibbs::McmcConfig,
    chain: usize,
    panel: &FunctionalPanel<T>,
    basis: &BasisSet<T>,
    prior: &PriorHyperparams<T>,
) -> Result<crate::gibbs::DrawStore<T>> {
    config.validate()?;
    let mut sampler = MixtureSampler::for_chain(panel.clone(), basis.clone(), prior.clone(), config.seed, chain)?;
    Ok(crate::gibbs::drive_chain(&mut sampler, config, chain)?)
}

/// `config.n_chains` mixture chains in parallel.
pub fn run_mixture_chains<T: Real>(
    config: &crate::gibbs::McmcConfig,
    panel: &FunctionalPanel<T>,
    basis: &BasisSet<T>,
    prior: &PriorHyperparams<T>,
) -> Result<Vec<crate::gibbs::DrawStore<T>>> {
    use rayon::prelude::*;
    config.validate()?;
    (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_mixture_chain(config, c, panel, basis, prior))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn identical_components_follow_weights() {
        let h = array![[0.4_f64, 0.4]];
        let mut rng = RngStream::new(2, 0);
        let n = 40_000;
        let ones: usize = (0..n)
            .map(|_| sample_labels(&mut rng, &[0.3], h.view(), &[0.1, 0.1], &[3.0_f64.ln()]).unwrap()[0] as usize)
            .sum();
        let p = ones as f64 / n as f64;
        assert!((p - 0.75).abs() < 3.0 * (0.75 * 0.25 / n as f64).sqrt(), "{p}");
    }

    #[test]
    fn dominant_component_without_overflow() {
        let h = array![[0.0_f64, 1.0]];
        let mut rng = RngStream::new(3, 0);
        for _ in 0..100 {
            let z = sample_labels(&mut rng, &[1.0], h.view(), &[1e-4, 1e-4], &[0.0]).unwrap();
            assert_eq!(z, vec![1]);
        }
    }

    #[test]
    fn component_variance_hand_case() {
        let y = array![[0.5_f64, 0.9]];
        let h = array![[0.3, 0.1], [0.5, 0.9]];
        let labels = array![[0u8, 1]];
        let (shape, rate) = component_variance_posterior(0, y.view(), labels.view(), h.view(), 0.01, 0.01);
        assert!((shape - 1.01 / 2.0).abs() < 1e-15);
        assert!((rate - 0.05 / 2.0).abs() < 1e-15);
        let (shape, rate) = component_variance_posterior(2, y.view(), labels.view(), h.view(), 0.01, 0.01);
        assert_eq!((shape, rate), (0.005, 0.005));
    }

    #[test]
    fn balanced_counts_give_zero_offset() {
        let p = mixture_pseudo_obs(2, 4, 1.7_f64, 0.0).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.precision, 1.7);
    }
}
