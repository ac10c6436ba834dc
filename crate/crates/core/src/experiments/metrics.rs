//! Posterior summaries and evaluation metrics.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::gibbs::PredictiveMoments;

/// Minimum chain length accepted by [`ess`].
pub const MIN_ESS_DRAWS: usize = 100;

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Equal-tailed credible interval.
pub fn credible_interval(draws: &[f64], level: f64) -> (f64, f64) {
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    (quantile_sorted(&sorted, tail), quantile_sorted(&sorted, 1.0 - tail))
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// RMSE of posterior means (×100), coverage and mean length of credible intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub rmse_x100: f64,
    pub cp: f64,
    pub al: f64,
}

/// Scores posterior draws of several scalar quantities against their truths.
/// `draws[i]` holds the draws of quantity `i`.
pub fn interval_metrics(truth: &[f64], draws: &[Vec<f64>], level: f64) -> Result<IntervalMetrics> {
    if truth.len() != draws.len() || truth.is_empty() {
        return Err(Error::Shape(format!("{} truths for {} draw sets", truth.len(), draws.len())));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(domain_err!("credible level {level} must lie in (0, 1)"));
    }
    let (mut se, mut covered, mut length) = (0.0, 0usize, 0.0);
    for (&x, d) in truth.iter().zip(draws) {
        if d.is_empty() {
            return Err(Error::Shape("a quantity has no draws".into()));
        }
        se += (mean(d) - x).powi(2);
        let (lo, hi) = credible_interval(d, level);
        covered += usize::from(lo <= x && x <= hi);
        length += hi - lo;
    }
    let n = truth.len() as f64;
    Ok(IntervalMetrics { rmse_x100: 100.0 * (se / n).sqrt(), cp: covered as f64 / n, al: length / n })
}

/// Effective sample size `n / (1 + 2 Σ ρ_j)`, with the sum truncated by
/// Geyer's initial monotone positive sequence. A constant chain has ESS `n`.
pub fn ess(draws: &[f64]) -> Result<f64> {
    let n = draws.len();
    if n < MIN_ESS_DRAWS {
        return Err(domain_err!("ESS needs at least {MIN_ESS_DRAWS} draws, got {n}"));
    }
    // rescale first so that squares of huge draws cannot overflow
    let scale = draws.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if !scale.is_finite() {
        return Err(domain_err!("ESS needs finite draws"));
    }
    if scale == 0.0 {
        return Ok(n as f64);
    }
    let m = draws.iter().map(|x| x / scale).sum::<f64>() / n as f64;
    let centered: Vec<f64> = draws.iter().map(|x| x / scale - m).collect();
    let gamma0 = centered.iter().map(|x| x * x).sum::<f64>() / n as f64;
    if !(gamma0 > 0.0) {
        return Ok(n as f64);
    }
    let rho = |lag: usize| -> f64 {
        if lag >= n {
            return 0.0;
        }
        centered[..n - lag].iter().zip(&centered[lag..]).map(|(a, b)| a * b).sum::<f64>() / (n as f64 * gamma0)
    };
    // Γ_k = ρ_{2k} + ρ_{2k+1}, kept while positive and forced nonincreasing
    let mut sum_pairs = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = rho(2 * k) + rho(2 * k + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum_pairs += pair;
        prev = pair;
        k += 1;
    }
    // τ = −1 + 2 Σ Γ_k
    let tau = (2.0 * sum_pairs - 1.0).max(1.0 / n as f64);
    Ok((n as f64 / tau).min(n as f64))
}

/// Posterior predictive loss: `PPV = Σ Var(ŷ)`, `PPSE = PPV + Σ (E ŷ − y)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveLoss {
    pub ppv: f64,
    pub ppse: f64,
}

impl PredictiveLoss {
    /// `ln PPV` (−∞ for a zero-variance predictor).
    pub fn log_ppv(&self) -> f64 {
        self.ppv.ln()
    }

    pub fn log_ppse(&self) -> f64 {
        self.ppse.ln()
    }
}

/// Predictive loss from per-cell predictive means and variances.
pub fn posterior_predictive_loss(y: &Array2<f64>, mean: &Array2<f64>, var: &Array2<f64>) -> Result<PredictiveLoss> {
    if y.dim() != mean.dim() || y.dim() != var.dim() {
        return Err(Error::Shape("observations and predictive moments differ in shape".into()));
    }
    let ppv: f64 = var.sum();
    let bias: f64 = y.iter().zip(mean.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(PredictiveLoss { ppv, ppse: ppv + bias })
}

/// Predictive loss from a streamed accumulator of replicates.
pub fn predictive_loss_from_moments(y: &Array2<f64>, moments: &PredictiveMoments) -> Result<PredictiveLoss> {
    if moments.count < 2 {
        return Err(domain_err!("predictive loss needs at least two replicates"));
    }
    posterior_predictive_loss(y, &moments.mean(), &moments.variance())
}

/// `G_t = Σ_ℓ π_{tℓ} G_ℓ` for every draw; `weights[d]` is `T × L`.
pub fn gini_series(weights: &[Array2<f64>], basis_ginis: &[f64]) -> Result<Vec<Vec<f64>>> {
    weights
        .iter()
        .map(|w| {
            if w.ncols() != basis_ginis.len() {
                return Err(Error::Shape(format!(
                    "weights have {} columns for {} basis Ginis",
                    w.ncols(),
                    basis_ginis.len()
                )));
            }
            Ok(w.rows().into_iter().map(|r| r.iter().zip(basis_ginis).map(|(p, g)| p * g).sum()).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::RngStream;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn quantiles_interpolate() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 5.0);
        assert_eq!(quantile_sorted(&xs, 0.5), 3.0);
        assert!((quantile_sorted(&xs, 0.1) - 1.4).abs() < 1e-15);
    }

    #[test]
    fn collapsed_and_missed_intervals() {
        let m = interval_metrics(&[0.3, 0.7], &[vec![0.3; 10], vec![0.7; 10]], 0.95).unwrap();
        assert!(m.rmse_x100 < 1e-12);
        assert_eq!((m.cp, m.al), (1.0, 0.0));
        let m = interval_metrics(&[5.0], &[vec![0.0, 1.0, 2.0]], 0.95).unwrap();
        assert_eq!(m.cp, 0.0);
    }

    #[test]
    fn ess_conventions_and_white_noise() {
        assert_eq!(ess(&[2.0; 500]).unwrap(), 500.0);
        assert!(ess(&[1.0; 50]).is_err());
        let mut rng = RngStream::new(8, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = ess(&xs).unwrap();
        assert!((e - 10_000.0).abs() < 1_500.0, "{e}");
        let huge: Vec<f64> = xs.iter().map(|x| x * 1e200).collect();
        assert!((ess(&huge).unwrap() - e).abs() < 1e-6 * e);
        assert!(ess(&[f64::INFINITY; 200]).is_err());
    }

    #[test]
    fn predictive_loss_examples() {
        let y = ndarray::array![[0.1, 0.2], [0.4, 0.5]];
        let zero = Array2::zeros((2, 2));
        let l = posterior_predictive_loss(&y, &y, &zero).unwrap();
        assert_eq!((l.ppv, l.ppse), (0.0, 0.0));
        assert_eq!(l.log_ppv(), f64::NEG_INFINITY);
        let ybar = y.mean().unwrap();
        let mean = Array2::from_elem((2, 2), ybar);
        let l = posterior_predictive_loss(&y, &mean, &Array2::ones((2, 2))).unwrap();
        let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
        assert!((l.ppv - 4.0).abs() < 1e-15 && (l.ppse - 4.0 - tss).abs() < 1e-15);
    }

    #[test]
    fn gini_series_examples() {
        let w = vec![ndarray::array![[0.5, 0.5], [1.0, 0.0]]];
        let g = gini_series(&w, &[0.0, 1.0 / 3.0]).unwrap();
        assert!((g[0][0] - 1.0 / 6.0).abs() < 1e-15 && g[0][1] == 0.0);
    }
}
