//! Shape-constrained basis functions, their matrix on the observation grid and
//! their Gini coefficients.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::scalar::{lit, Real};
use crate::specials::{log_beta, quadrature, regularized_incomplete_beta};

/// Tolerance handed to the quadrature behind beta-basis Gini coefficients.
pub const GINI_QUADRATURE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Beta CDF `I_x(a, b)`.
    Beta,
    /// `(1 - (1 - x)^a)^{1/b}` with `a, b ∈ (0, 1]`.
    Pareto,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Family::Beta => f.write_str("beta"),
            Family::Pareto => f.write_str("pareto"),
        }
    }
}

/// A Lorenz-curve basis: nondecreasing on [0, 1] with `h(0) = 0`, `h(1) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisFunction<T> {
    pub family: Family,
    pub a: T,
    pub b: T,
}

impl<T: Real> BasisFunction<T> {
    pub fn new(family: Family, a: T, b: T) -> Result<Self> {
        let f = Self { family, a, b };
        f.validate()?;
        Ok(f)
    }

    pub fn beta(a: T, b: T) -> Result<Self> {
        Self::new(Family::Beta, a, b)
    }

    pub fn pareto(a: T, b: T) -> Result<Self> {
        Self::new(Family::Pareto, a, b)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (self.a, self.b);
        let finite = a.is_finite() && b.is_finite();
        match self.family {
            Family::Beta if finite && a > T::zero() && b > T::zero() => Ok(()),
            Family::Pareto
                if finite && a > T::zero() && a <= T::one() && b > T::zero() && b <= T::one() =>
            {
                Ok(())
            }
            Family::Beta => Err(domain_err!("beta basis needs a > 0 and b > 0, got ({a}, {b})")),
            Family::Pareto => Err(domain_err!("pareto basis needs a, b in (0, 1], got ({a}, {b})")),
        }
    }

    /// Evaluates the basis at `x ∈ [0, 1]`.
    pub fn eval(&self, x: T) -> Result<T> {
        self.validate()?;
        if !(x >= T::zero() && x <= T::one()) {
            return Err(domain_err!("basis argument must lie in [0,1], got {x}"));
        }
        match self.family {
            Family::Beta => regularized_incomplete_beta(x, self.a, self.b),
            Family::Pareto => {
                // 1 - (1-x)^a = -expm1(a ln(1-x))
                let inner = -(self.a * (-x).ln_1p()).exp_m1();
                Ok(inner.powf(self.b.recip()))
            }
        }
    }

    /// Gini coefficient `1 - 2 ∫₀¹ h(x) dx`.
    ///
    /// Pareto bases use the closed form `1 - 2 B(1/a, 1/b + 1) / a`; beta bases
    /// integrate numerically.
    pub fn gini(&self) -> Result<T> {
        self.validate()?;
        let two: T = lit(2.0);
        match self.family {
            Family::Pareto => {
                let beta = log_beta(self.a.recip(), self.b.recip() + T::one())?.exp();
                Ok(T::one() - two * beta / self.a)
            }
            Family::Beta => {
                let area = quadrature(
                    |x| regularized_incomplete_beta(x, self.a, self.b).unwrap_or(T::nan()),
                    lit(GINI_QUADRATURE_TOL),
                )?;
                Ok(T::one() - two * area)
            }
        }
    }
}

/// `L` basis functions evaluated on `K` fixed arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet<T> {
    bases: Vec<BasisFunction<T>>,
    arguments: Vec<T>,
    /// `K × L`, `h[[k, l]] = h_l(x_k)`.
    h: Array2<T>,
    ginis: Vec<T>,
}

impl<T: Real> BasisSet<T> {
    /// Validates the specification and precomputes the basis matrix and Ginis.
    pub fn new(bases: Vec<BasisFunction<T>>, arguments: Vec<T>) -> Result<Self> {
        if bases.len() < 2 {
            return Err(Error::Config(format!(
                "a basis set needs at least two functions, got {}",
                bases.len()
            )));
        }
        for (l, f) in bases.iter().enumerate() {
            f.validate()
                .map_err(|e| Error::Config(format!("basis {} ({}): {e}", l + 1, f.family)))?;
        }
        for (k, &x) in arguments.iter().enumerate() {
            if !(x > T::zero() && x < T::one()) {
                return Err(Error::Config(format!(
                    "argument {} = {x} is outside the open interval (0, 1)",
                    k + 1
                )));
            }
            if k > 0 && x <= arguments[k - 1] {
                return Err(Error::Config(format!(
                    "arguments must be strictly increasing; argument {} = {x} follows {}",
                    k + 1,
                    arguments[k - 1]
                )));
            }
        }
        let (k_len, l_len) = (arguments.len(), bases.len());
        let mut h = Array2::zeros((k_len, l_len));
        for (l, f) in bases.iter().enumerate() {
            for (k, &x) in arguments.iter().enumerate() {
                h[[k, l]] = f.eval(x)?;
            }
        }
        let mut ginis = Vec::with_capacity(l_len);
        let slack: T = lit(1e-9);
        for (l, f) in bases.iter().enumerate() {
            let g = f.gini()?;
            if !(g >= -slack && g < T::one()) {
                return Err(Error::Config(format!(
                    "basis {} ({} a={}, b={}) has Gini {g} outside [0, 1); it lies above the 45-degree line",
                    l + 1,
                    f.family,
                    f.a,
                    f.b
                )));
            }
            ginis.push(g.max(T::zero()));
        }
        Ok(Self { bases, arguments, h, ginis })
    }

    /// Builds from `(family, a, b)` triples.
    pub fn from_spec(spec: &[(Family, T, T)], arguments: &[T]) -> Result<Self> {
        let bases = spec
            .iter()
            .map(|&(family, a, b)| BasisFunction { family, a, b })
            .collect();
        Self::new(bases, arguments.to_vec())
    }

    pub fn bases(&self) -> &[BasisFunction<T>] {
        &self.bases
    }

    pub fn arguments(&self) -> &[T] {
        &self.arguments
    }

    /// The `K × L` basis matrix.
    pub fn matrix(&self) -> &Array2<T> {
        &self.h
    }

    pub fn ginis(&self) -> &[T] {
        &self.ginis
    }

    /// Number of basis functions `L`.
    pub fn n_bases(&self) -> usize {
        self.bases.len()
    }

    /// Number of arguments `K`.
    pub fn n_args(&self) -> usize {
        self.arguments.len()
    }

    /// Indices of bases whose second differences on a uniform grid of
    /// `grid_points` points dip below `-1e-9` (i.e. are not convex).
    pub fn warn_nonconvex(&self, grid_points: usize) -> Vec<usize> {
        let n = grid_points.max(3);
        let step = T::one() / lit::<T>((n - 1) as f64);
        let tol: T = lit(1e-9);
        self.bases
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                let values: Vec<T> = (0..n)
                    .map(|i| f.eval((lit::<T>(i as f64) * step).min(T::one())).unwrap_or(T::nan()))
                    .collect();
                values
                    .windows(3)
                    .any(|w| !(w[0] - lit::<T>(2.0) * w[1] + w[2] >= -tol))
            })
            .map(|(l, _)| l)
            .collect()
    }
}

/// Named basis configurations used in the simulation and income studies.
pub mod presets {
    use super::Family::{self, Beta, Pareto};

    /// The three beta bases that generate the synthetic data.
    pub const ORACLE: [(Family, f64, f64); 3] = [(Beta, 1.0, 1.0), (Beta, 3.0, 1.0), (Beta, 1.0, 0.3)];

    /// Seven Pareto bases deliberately unlike the generating set.
    pub const MISSPECIFIED_PARETO: [(Family, f64, f64); 7] = [
        (Pareto, 1.0, 1.0),
        (Pareto, 0.7, 0.6),
        (Pareto, 0.9, 0.25),
        (Pareto, 0.8, 1.0),
        (Pareto, 0.25, 0.9),
        (Pareto, 0.9, 0.5),
        (Pareto, 0.6, 1.0),
    ];

    pub const INCOME_SET_1: [(Family, f64, f64); 5] = [
        (Beta, 1.0, 1.0),
        (Beta, 1.5, 1.0),
        (Beta, 3.0, 1.0),
        (Beta, 1.0, 0.7),
        (Beta, 1.0, 0.3),
    ];

    pub const INCOME_SET_2: [(Family, f64, f64); 3] = [(Beta, 1.2, 0.9), (Beta, 1.5, 0.8), (Beta, 1.0, 0.6)];

    pub const INCOME_SET_3: [(Family, f64, f64); 5] = [
        (Beta, 1.2, 0.9),
        (Beta, 1.5, 0.8),
        (Beta, 1.0, 0.6),
        (Beta, 1.3, 0.8),
        (Beta, 1.3, 0.7),
    ];

    /// Looks a preset up by name.
    pub fn by_name(name: &str) -> Option<&'static [(Family, f64, f64)]> {
        match name {
            "oracle" => Some(&ORACLE),
            "misspecified-pareto" => Some(&MISSPECIFIED_PARETO),
            "income-1" => Some(&INCOME_SET_1),
            "income-2" => Some(&INCOME_SET_2),
            "income-3" => Some(&INCOME_SET_3),
            _ => None,
        }
    }
}
