//! Bayesian inference for time-varying shape-constrained functions.
//!
//! A curve observed with noise at fixed arguments is modelled as a convex
//! combination of fixed monotone/convex basis functions whose weights evolve
//! through an inverse-softmax AR(1) state process. Posterior sampling uses a
//! Poisson and Pólya-Gamma augmentation that makes each weight path
//! conditionally a univariate dynamic linear model.

// NaN-rejecting guards are written as negated comparisons on purpose, and
// series coefficients keep their full reference digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod scalar;
pub mod samplers;
pub mod specials;
pub mod basis;
pub mod model;
pub mod augment;
pub mod ffbs;
pub mod gibbs;
pub mod experiments;
pub mod mixture;

pub use error::{Error, Result};
pub use scalar::Real;

pub type BasisSet64 = basis::BasisSet<f64>;
pub type FunctionalPanel64 = model::FunctionalPanel<f64>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type PriorHyperparams64 = model::PriorHyperparams<f64>;
pub type LatentState64 = model::LatentState<f64>;
pub type DrawStore64 = gibbs::DrawStore<f64>;
pub type FssmSampler64 = gibbs::FssmSampler<f64>;
pub type MixtureSampler64 = mixture::MixtureSampler<f64>;
