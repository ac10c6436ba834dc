//! Simulation scenarios, Gini series and bounds, and posterior evaluation.

mod bounds;
mod geweke;
mod metrics;
mod synthetic;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::DrawStore;

pub use bounds::polygon_gini_bounds;
pub use geweke::{geweke_fssm, geweke_mixture, geweke_prior, GewekeReport, GewekeRow, Moment, GEWEKE_BATCHES};
pub use metrics::{
    credible_interval, ess, gini_series, interval_metrics, mean, posterior_predictive_loss,
    predictive_loss_from_moments, quantile_sorted, IntervalMetrics, PredictiveLoss, MIN_ESS_DRAWS,
};
pub use synthetic::{
    generate_synthetic, generate_with, simulate_observations, simulate_states, Scenario, SyntheticTruth,
    SCENARIO_TIMES,
};

/// Credible level used for every reported interval.
pub const CREDIBLE_LEVEL: f64 = 0.95;

/// Table-style scores of one fit against a known truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// All weights `π_{tℓ}`, `t = 1..=T`, `ℓ = 1..=L`.
    pub pi: IntervalMetrics,
    pub gini: IntervalMetrics,
    /// Mean curve values `f_t(x_k)`.
    pub curve: IntervalMetrics,
    pub predictive: PredictiveLoss,
    /// ESS per named parameter.
    pub ess: Vec<(String, f64)>,
}

/// Scores a pooled store against the truth that generated its panel.
/// Requires stored weights.
pub fn metric_report(store: &DrawStore<f64>, truth: &SyntheticTruth) -> Result<MetricReport> {
    if store.weights.is_empty() {
        return Err(Error::Config("metrics need stored weight draws".into()));
    }
    let true_pi = truth.weights();
    let (n_times, n_bases) = true_pi.dim();
    let mut pi_truth = Vec::with_capacity(n_times * n_bases);
    let mut pi_draws = Vec::with_capacity(n_times * n_bases);
    for t in 1..=n_times {
        for l in 0..n_bases {
            pi_truth.push(true_pi[[t - 1, l]]);
            pi_draws.push(store.weight_draws(t, l));
        }
    }
    let gini_draws: Vec<Vec<f64>> = (1..=n_times).map(|t| store.gini_draws(t)).collect();

    let h = truth.basis.matrix();
    let true_curve: Array2<f64> = true_pi.dot(&h.t());
    let curve_draws: Vec<Array2<f64>> = store.weights.iter().map(|w| w.dot(&h.t())).collect();
    let n_args = h.nrows();
    let mut curve_truth = Vec::with_capacity(n_times * n_args);
    let mut curve_samples = Vec::with_capacity(n_times * n_args);
    for t in 0..n_times {
        for k in 0..n_args {
            curve_truth.push(true_curve[[t, k]]);
            curve_samples.push(curve_draws.iter().map(|c| c[[t, k]]).collect());
        }
    }
    let ess = store
        .param_names
        .iter()
        .map(|name| Ok((name.clone(), ess(&store.param_draws(name)?)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricReport {
        pi: interval_metrics(&pi_truth, &pi_draws, CREDIBLE_LEVEL)?,
        gini: interval_metrics(&truth.gini, &gini_draws, CREDIBLE_LEVEL)?,
        curve: interval_metrics(&curve_truth, &curve_samples, CREDIBLE_LEVEL)?,
        predictive: predictive_loss_from_moments(truth.panel.y(), &store.predictive)?,
        ess,
    })
}
