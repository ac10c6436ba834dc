//! Model state, softmax weights and the quadratic-form pieces of the likelihood.
//!
//! Weights are anchored at the first basis: `π₁ = 1/(1 + Σ e^{u_ℓ})` and
//! `π_{ℓ+1} = e^{u_ℓ}/(1 + Σ e^{u_ℓ})`. Rows of the latent state run over
//! `t = 0..=T`, where row 0 is the initial state.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::scalar::{lit, log_sum_exp, Real};

/// Observed curves: `y[[t-1, k]]` is curve `t` at argument `x_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalPanel<T> {
    y: Array2<T>,
    arguments: Vec<T>,
}

impl<T: Real> FunctionalPanel<T> {
    pub fn new(y: Array2<T>, arguments: Vec<T>) -> Result<Self> {
        if y.ncols() != arguments.len() {
            return Err(Error::Shape(format!(
                "panel has {} columns but {} arguments",
                y.ncols(),
                arguments.len()
            )));
        }
        if y.nrows() == 0 {
            return Err(Error::Shape("panel needs at least one time point".into()));
        }
        if let Some(((t, k), v)) = y.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(domain_err!("non-finite observation {v} at t={}, k={}", t + 1, k + 1));
        }
        let y = if y.is_standard_layout() { y } else { y.as_standard_layout().into_owned() };
        Ok(Self { y, arguments })
    }

    /// `T × K` observations.
    pub fn y(&self) -> &Array2<T> {
        &self.y
    }

    pub fn arguments(&self) -> &[T] {
        &self.arguments
    }

    pub fn n_times(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_args(&self) -> usize {
        self.y.ncols()
    }

    /// Row for time `t ∈ 1..=T`.
    pub fn row(&self, t: usize) -> ArrayView1<'_, T> {
        self.y.row(t - 1)
    }

    pub fn row_slice(&self, t: usize) -> &[T] {
        let k = self.n_args();
        &self.y.as_slice().expect("standard layout")[(t - 1) * k..t * k]
    }

    /// Replaces the observations, keeping the arguments.
    pub fn with_observations(&self, y: Array2<T>) -> Result<Self> {
        Self::new(y, self.arguments.clone())
    }

    /// Checks that `h` was evaluated at this panel's arguments.
    pub fn check_basis(&self, h: ArrayView2<'_, T>, arguments: &[T]) -> Result<()> {
        if h.nrows() != self.n_args() || arguments.len() != self.n_args() {
            return Err(Error::Shape(format!(
                "basis has {} rows for a panel with {} arguments",
                h.nrows(),
                self.n_args()
            )));
        }
        let tol: T = lit(1e-12);
        for (k, (&a, &b)) in arguments.iter().zip(&self.arguments).enumerate() {
            if (a - b).abs() > tol {
                return Err(Error::Config(format!(
                    "basis argument {} = {a} differs from panel argument {b}",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}

/// AR(1) state parameters per free weight plus the observation variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub mu: Vec<T>,
    pub phi: Vec<T>,
    pub sigma2: Vec<T>,
    pub nu2: T,
}

impl<T: Real> ModelParams<T> {
    /// Number of free weights, `L − 1`.
    pub fn n_free(&self) -> usize {
        self.mu.len()
    }

    pub fn validate(&self, n_free: usize) -> Result<()> {
        if self.mu.len() != n_free || self.phi.len() != n_free || self.sigma2.len() != n_free {
            return Err(Error::Shape(format!(
                "parameter vectors must have length {n_free}, got mu={}, phi={}, sigma2={}",
                self.mu.len(),
                self.phi.len(),
                self.sigma2.len()
            )));
        }
        for l in 0..n_free {
            let (m, p, s) = (self.mu[l], self.phi[l], self.sigma2[l]);
            if !m.is_finite() {
                return Err(domain_err!("mu[{}] = {m} is not finite", l + 1));
            }
            if !(p.abs() < T::one()) {
                return Err(domain_err!("phi[{}] = {p} is outside (-1, 1)", l + 1));
            }
            if !(s > T::zero() && s.is_finite()) {
                return Err(domain_err!("sigma2[{}] = {s} must be positive", l + 1));
            }
        }
        if !(self.nu2 > T::zero() && self.nu2.is_finite()) {
            return Err(domain_err!("nu2 = {} must be positive", self.nu2));
        }
        Ok(())
    }

    /// Stationary variance `σ²/(1 − φ²)` of component `l` (0-based).
    pub fn stationary_variance(&self, l: usize) -> T {
        self.sigma2[l] / (T::one() - self.phi[l] * self.phi[l])
    }
}

/// Conjugate prior hyperparameters.
///
/// `μ_ℓ ~ N(mu_mean, mu_var)`, `φ_ℓ ~ TN₍₋₁,₁₎(phi_mean, phi_var)`,
/// `σ²_ℓ ~ IG(sigma2_n0/2, sigma2_d0/2)` and `ν² ~ IG(nu2_n0/2, nu2_d0/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorHyperparams<T> {
    pub mu_mean: Vec<T>,
    pub mu_var: Vec<T>,
    pub phi_mean: Vec<T>,
    pub phi_var: Vec<T>,
    pub sigma2_n0: Vec<T>,
    pub sigma2_d0: Vec<T>,
    pub nu2_n0: T,
    pub nu2_d0: T,
}

impl<T: Real> PriorHyperparams<T> {
    /// The defaults of the simulation study for `n_free = L − 1` weights:
    /// `ν², σ²_ℓ ~ IG(0.0005, 0.0005)`, `μ_ℓ ~ N(0, 25)`, `φ_ℓ ~ TN(0.8, 0.04)`.
    pub fn default_for(n_free: usize) -> Self {
        Self::uniform(n_free, lit(0.0), lit(25.0), lit(0.8), lit(0.04), lit(0.001), lit(0.001), lit(0.001), lit(0.001))
    }

    /// The same hyperparameters for every component.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        n_free: usize,
        mu_mean: T,
        mu_var: T,
        phi_mean: T,
        phi_var: T,
        sigma2_n0: T,
        sigma2_d0: T,
        nu2_n0: T,
        nu2_d0: T,
    ) -> Self {
        Self {
            mu_mean: vec![mu_mean; n_free],
            mu_var: vec![mu_var; n_free],
            phi_mean: vec![phi_mean; n_free],
            phi_var: vec![phi_var; n_free],
            sigma2_n0: vec![sigma2_n0; n_free],
            sigma2_d0: vec![sigma2_d0; n_free],
            nu2_n0,
            nu2_d0,
        }
    }

    pub fn n_free(&self) -> usize {
        self.mu_mean.len()
    }

    pub fn validate(&self, n_free: usize) -> Result<()> {
        let groups: [(&str, &Vec<T>, bool); 6] = [
            ("mu_mean", &self.mu_mean, false),
            ("mu_var", &self.mu_var, true),
            ("phi_mean", &self.phi_mean, false),
            ("phi_var", &self.phi_var, true),
            ("sigma2_n0", &self.sigma2_n0, true),
            ("sigma2_d0", &self.sigma2_d0, true),
        ];
        for (name, values, positive) in groups {
            if values.len() != n_free {
                return Err(Error::Config(format!(
                    "prior {name} has {} entries, expected {n_free}",
                    values.len()
                )));
            }
            for (l, &v) in values.iter().enumerate() {
                if !v.is_finite() || (positive && v <= T::zero()) {
                    return Err(Error::Config(format!("prior {name}[{}] = {v} is invalid", l + 1)));
                }
            }
        }
        for (name, v) in [("nu2_n0", self.nu2_n0), ("nu2_d0", self.nu2_d0)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::Config(format!("prior {name} = {v} must be positive")));
            }
        }
        Ok(())
    }
}

/// Latent paths `u` (`(T+1) × (L−1)`) and their weights `π` (`(T+1) × L`).
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState<T> {
    u: Array2<T>,
    pi: Array2<T>,
}

impl<T: Real> LatentState<T> {
    pub fn new(u: Array2<T>) -> Result<Self> {
        let (rows, n_free) = u.dim();
        let mut pi = Array2::zeros((rows, n_free + 1));
        for t in 0..rows {
            let w = softmax_weights(u.row(t).as_slice().expect("row-major"))?;
            pi.row_mut(t).assign(&ArrayView1::from(&w[..]));
        }
        Ok(Self { u, pi })
    }

    /// Every row equal to `u_row`, for `T + 1` rows.
    pub fn constant(n_times: usize, u_row: &[T]) -> Result<Self> {
        let mut u = Array2::zeros((n_times + 1, u_row.len()));
        for mut r in u.rows_mut() {
            r.assign(&ArrayView1::from(u_row));
        }
        Self::new(u)
    }

    pub fn u(&self) -> &Array2<T> {
        &self.u
    }

    /// Weights, rows `t = 0..=T`.
    pub fn pi(&self) -> &Array2<T> {
        &self.pi
    }

    pub fn n_times(&self) -> usize {
        self.u.nrows() - 1
    }

    pub fn n_free(&self) -> usize {
        self.u.ncols()
    }

    /// Log-scale components `(0, u_{t1}, …, u_{t,L−1})`, i.e. `ln v_t`.
    pub fn log_v_row(&self, t: usize) -> Vec<T> {
        std::iter::once(T::zero()).chain(self.u.row(t).iter().copied()).collect()
    }

    /// `v_t = (1, e^{u_{t1}}, …)`; may overflow for extreme states.
    pub fn v_row(&self, t: usize) -> Vec<T> {
        self.log_v_row(t).into_iter().map(T::exp).collect()
    }

    /// Replaces the path of component `l` (0-based) and refreshes the weights.
    pub fn set_path(&mut self, l: usize, path: &[T]) -> Result<()> {
        if path.len() != self.u.nrows() {
            return Err(Error::Shape(format!(
                "path has {} entries, state has {} rows",
                path.len(),
                self.u.nrows()
            )));
        }
        for (t, &x) in path.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite state {x} at t={t}, component {}",
                    l + 1
                )));
            }
            self.u[[t, l]] = x;
        }
        for t in 0..self.u.nrows() {
            let w = softmax_weights(self.u.row(t).as_slice().expect("row-major"))?;
            self.pi.row_mut(t).assign(&ArrayView1::from(&w[..]));
        }
        Ok(())
    }
}

/// Poisson and Pólya-Gamma auxiliaries, `T × (L−1)`, row `t-1` for time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationVars<T> {
    pub z1: Array2<u64>,
    pub z2: Array2<u64>,
    pub omega: Array2<T>,
}

impl<T: Real> AugmentationVars<T> {
    pub fn zeros(n_times: usize, n_free: usize) -> Self {
        Self {
            z1: Array2::zeros((n_times, n_free)),
            z2: Array2::zeros((n_times, n_free)),
            omega: Array2::zeros((n_times, n_free)),
        }
    }

    /// Checks `ω = 0 ⇔ z1 + z2 = 0` cell by cell.
    pub fn check(&self) -> Result<()> {
        for ((i, l), &w) in self.omega.indexed_iter() {
            let zero_counts = self.z1[[i, l]] + self.z2[[i, l]] == 0;
            if zero_counts != (w == T::zero()) {
                return Err(Error::Invariant(format!(
                    "omega={w} inconsistent with z=({}, {}) at t={}, component {}",
                    self.z1[[i, l]],
                    self.z2[[i, l]],
                    i + 1,
                    l + 1
                )));
            }
        }
        Ok(())
    }
}

/// Inverse softmax with the first component pinned at `u = 0`.
pub fn softmax_weights<T: Real>(u_row: &[T]) -> Result<Vec<T>> {
    if let Some(x) = u_row.iter().find(|x| !x.is_finite()) {
        return Err(domain_err!("softmax input {x} is not finite"));
    }
    let m = u_row.iter().fold(T::zero(), |a, &b| a.max(b));
    let mut w: Vec<T> = std::iter::once(-m)
        .chain(u_row.iter().map(|&x| x - m))
        .map(T::exp)
        .collect();
    let total: T = w.iter().copied().sum();
    for x in &mut w {
        *x = *x / total;
    }
    Ok(w)
}

/// Inverse of [`softmax_weights`]: `u_ℓ = ln(π_{ℓ+1}/π₁)`.
pub fn log_ratios<T: Real>(pi: &[T]) -> Result<Vec<T>> {
    if pi.len() < 2 || pi.iter().any(|&p| !(p > T::zero())) {
        return Err(domain_err!("log ratios need at least two strictly positive weights"));
    }
    Ok(pi[1..].iter().map(|&p| (p / pi[0]).ln()).collect())
}

/// `H π`.
pub fn mean_curve<T: Real>(pi: &[T], h: ArrayView2<'_, T>) -> Result<Vec<T>> {
    if h.ncols() != pi.len() {
        return Err(Error::Shape(format!(
            "weights have length {}, basis matrix has {} columns",
            pi.len(),
            h.ncols()
        )));
    }
    Ok(h.rows()
        .into_iter()
        .map(|row| row.iter().zip(pi).map(|(&a, &b)| a * b).sum())
        .collect())
}

/// `A_t = Σ_k (y_{tk} 1 − h_k)(y_{tk} 1 − h_k)ᵀ / (2 ν²_{tk})`, so that the
/// Gaussian log-likelihood of row `t` is `−πᵀ A_t π` up to a constant.
pub fn compute_a<T: Real>(y_row: &[T], h: ArrayView2<'_, T>, nu2_row: &[T]) -> Result<Array2<T>> {
    let (k_len, l_len) = h.dim();
    if y_row.len() != k_len || nu2_row.len() != k_len {
        return Err(Error::Shape(format!(
            "row has {} observations and {} variances for a {k_len}-row basis",
            y_row.len(),
            nu2_row.len()
        )));
    }
    let mut a = Array2::zeros((l_len, l_len));
    let mut e = vec![T::zero(); l_len];
    let two: T = lit(2.0);
    for k in 0..k_len {
        let nu2 = nu2_row[k];
        if !(nu2 > T::zero()) {
            return Err(domain_err!("observation variance {nu2} at k={} must be positive", k + 1));
        }
        for (l, el) in e.iter_mut().enumerate() {
            *el = y_row[k] - h[[k, l]];
        }
        let scale = (two * nu2).recip();
        for i in 0..l_len {
            for j in i..l_len {
                let v = e[i] * e[j] * scale;
                a[[i, j]] = a[[i, j]] + v;
                if i != j {
                    a[[j, i]] = a[[j, i]] + v;
                }
            }
        }
    }
    Ok(a)
}

/// The 2×2 reduction of `A_t` isolating one free weight.
///
/// With `w = v_{−ℓ}/s`: `b = A_{ℓℓ}`, `c = A_{ℓ,−ℓ} w`, `d = wᵀ A_{−ℓ,−ℓ} w`,
/// and `s = Σ_{i≠ℓ} v_i` is carried as `log_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadParts<T> {
    pub b: T,
    pub c: T,
    pub d: T,
    pub log_s: T,
}

/// [`QuadParts`] for free weight `ell ∈ 1..L` (column `ell` of `A`), from
/// `log_v = (0, u_1, …, u_{L−1})`. Works on the log scale so large states
/// cannot overflow.
pub fn quad_parts<T: Real>(a: ArrayView2<'_, T>, log_v: &[T], ell: usize) -> Result<QuadParts<T>> {
    let l_len = log_v.len();
    if a.dim() != (l_len, l_len) {
        return Err(Error::Shape(format!("A is {:?}, v has length {l_len}", a.dim())));
    }
    if ell == 0 || ell >= l_len {
        return Err(domain_err!("component index {ell} outside 1..{}", l_len - 1));
    }
    let others = || log_v.iter().enumerate().filter(|&(i, _)| i != ell).map(|(_, &x)| x);
    let log_s = log_sum_exp(others());
    let w: Vec<(usize, T)> = log_v
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != ell)
        .map(|(i, &x)| (i, (x - log_s).exp()))
        .collect();
    let b = a[[ell, ell]];
    let c = w.iter().map(|&(i, wi)| a[[ell, i]] * wi).sum();
    let mut d = T::zero();
    for &(i, wi) in &w {
        for &(j, wj) in &w {
            d = d + wi * a[[i, j]] * wj;
        }
    }
    Ok(QuadParts { b, c, d, log_s })
}

/// `(b, c, d, s)` from the natural-scale vector `v` with `v[0] = 1`.
pub fn compute_b_and_s<T: Real>(a: ArrayView2<'_, T>, v_row: &[T], ell: usize) -> Result<(T, T, T, T)> {
    if v_row.iter().any(|&v| !(v > T::zero() && v.is_finite())) {
        return Err(domain_err!("v entries must be positive and finite"));
    }
    let log_v: Vec<T> = v_row.iter().map(|v| v.ln()).collect();
    let q = quad_parts(a, &log_v, ell)?;
    Ok((q.b, q.c, q.d, q.log_s.exp()))
}

/// `Σ_k ln N(y_{tk}; (Hπ)_k, ν²_{tk})`.
pub fn log_observation_density<T: Real>(
    y_row: &[T],
    pi: &[T],
    h: ArrayView2<'_, T>,
    nu2_row: &[T],
) -> Result<T> {
    let mean = mean_curve(pi, h)?;
    if y_row.len() != mean.len() || nu2_row.len() != mean.len() {
        return Err(Error::Shape("observation row, variances and basis disagree".into()));
    }
    let half: T = lit(0.5);
    let ln_2pi: T = (T::PI() + T::PI()).ln();
    Ok(y_row
        .iter()
        .zip(&mean)
        .zip(nu2_row)
        .map(|((&y, &m), &s2)| -half * (ln_2pi + s2.ln() + (y - m) * (y - m) / s2))
        .sum())
}
