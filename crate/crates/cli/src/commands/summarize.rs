use std::path::{Path, PathBuf};

use clap::Args;
use fssm::experiments::{
    credible_interval, ess, interval_metrics, mean, predictive_loss_from_moments, IntervalMetrics, CREDIBLE_LEVEL,
    MIN_ESS_DRAWS,
};
use ndarray::Array2;

use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_f64, DrawTable, FitManifest};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PREDICTIVE_LOSS_FILE: &str = "predictive_loss.csv";

#[derive(Debug, Clone, Args)]
pub struct SummarizeArgs {
    /// Output directory of `fit`.
    #[arg(long)]
    pub draws: PathBuf,
    /// Directory written by `simulate`, for scoring against the truth.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Where to write; defaults to the draws directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Checks a draw file against the chain layout the manifest promises.
fn check_layout(table: &DrawTable, manifest: &FitManifest, file: &str) -> CliResult<()> {
    let expected: Vec<usize> = manifest.chains.iter().map(|c| c.draws).collect();
    let chains: Vec<usize> = manifest.chains.iter().map(|c| c.chain).collect();
    if table.chains != chains || table.draws_per_chain() != expected {
        return Err(CliError::Numerical(format!(
            "draw store is truncated: {file} has draws {:?} for chains {:?}, manifest promises {expected:?} for {chains:?}",
            table.draws_per_chain(),
            table.chains
        )));
    }
    Ok(())
}

/// Sum of per-chain ESS; NaN when a chain is too short to estimate it.
fn pooled_ess(per_chain: &[Vec<f64>]) -> f64 {
    per_chain
        .iter()
        .map(|d| if d.len() < MIN_ESS_DRAWS { f64::NAN } else { ess(d).unwrap_or(f64::NAN) })
        .sum()
}

/// `t`-major draws of every `pi[t,l]`.
fn weight_draws(table: &DrawTable, n_times: usize, n_bases: usize) -> CliResult<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(n_times * n_bases);
    for t in 1..=n_times {
        for l in 1..=n_bases {
            let name = format!("pi[{t},{l}]");
            let i = table.index(&name).ok_or_else(|| CliError::Numerical(format!("weights.csv lacks {name}")))?;
            out.push(table.pooled(i));
        }
    }
    Ok(out)
}

fn gini_draws(table: &DrawTable, n_times: usize) -> CliResult<Vec<Vec<f64>>> {
    (1..=n_times)
        .map(|t| {
            let name = format!("G[{t}]");
            let i = table.index(&name).ok_or_else(|| CliError::Numerical(format!("gini.csv lacks {name}")))?;
            Ok(table.pooled(i))
        })
        .collect()
}

fn metric_row(model: &str, quantity: &str, m: &IntervalMetrics) -> [String; 5] {
    [model.into(), quantity.into(), fmt_f64(m.rmse_x100), fmt_f64(m.al), fmt_f64(m.cp)]
}

fn read_manifest(dir: &Path) -> CliResult<FitManifest> {
    io::read_json(&dir.join(io::MANIFEST_FILE)).map_err(|e| match e {
        CliError::Config(m) => CliError::Numerical(format!("draw store manifest is truncated or corrupt: {}", m.join("; "))),
        other => other,
    })
}

/// Writes `summary.csv`, `predictive_loss.csv` and, given a truth
/// directory, `metrics.csv`.
pub fn summarize(args: &SummarizeArgs) -> CliResult<()> {
    let manifest = read_manifest(&args.draws)?;
    let out = args.out.clone().unwrap_or_else(|| args.draws.clone());
    io::ensure_dir(&out)?;

    let params = io::read_draws(&args.draws.join(io::PARAMS_FILE))?;
    check_layout(&params, &manifest, io::PARAMS_FILE)?;
    let rows: Vec<[String; 5]> = params
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let pooled = params.pooled(i);
            let (lo, hi) = credible_interval(&pooled, CREDIBLE_LEVEL);
            [name.clone(), fmt_f64(mean(&pooled)), fmt_f64(lo), fmt_f64(hi), fmt_f64(pooled_ess(&params.values[i]))]
        })
        .collect();
    io::write_rows(&out.join(SUMMARY_FILE), &["name", "mean", "q025", "q975", "ess"], rows)?;

    let (n_times, n_args) = (manifest.n_times, manifest.n_args);
    let predictive = io::read_predictive(&args.draws.join(io::PREDICTIVE_FILE), n_times, n_args)?;
    let loss = predictive_loss_from_moments(&predictive.y, &predictive.moments)?;
    io::write_rows(
        &out.join(PREDICTIVE_LOSS_FILE),
        &["ppv", "ppse", "log_ppv", "log_ppse"],
        [[loss.ppv, loss.ppse, loss.log_ppv(), loss.log_ppse()].map(fmt_f64)],
    )?;

    let Some(truth_dir) = &args.truth else { return Ok(()) };
    let gini = io::read_draws(&args.draws.join(io::GINI_FILE))?;
    check_layout(&gini, &manifest, io::GINI_FILE)?;
    let true_gini = io::read_truth_gini(&truth_dir.join(io::TRUTH_GINI_FILE))?;
    if true_gini.len() != n_times {
        return Err(CliError::config(format!("truth has {} times, the fit has {n_times}", true_gini.len())));
    }
    let model = manifest.model.to_string();
    let mut rows = Vec::new();
    if manifest.store_states {
        let weights = io::read_draws(&args.draws.join(io::WEIGHTS_FILE))?;
        check_layout(&weights, &manifest, io::WEIGHTS_FILE)?;
        let true_pi = io::read_truth_weights(&truth_dir.join(io::TRUTH_WEIGHTS_FILE))?;
        let basis = manifest.basis.build()?;
        if true_pi.dim() != (n_times, basis.n_bases()) {
            return Err(CliError::config(format!(
                "true weights are {:?}, the fit has {n_times} × {}",
                true_pi.dim(),
                basis.n_bases()
            )));
        }
        let pi_draws = weight_draws(&weights, n_times, basis.n_bases())?;
        let pi_truth: Vec<f64> = true_pi.iter().copied().collect();
        rows.push(metric_row(&model, "pi", &interval_metrics(&pi_truth, &pi_draws, CREDIBLE_LEVEL)?));
        rows.push(metric_row(&model, "gini", &interval_metrics(&true_gini, &gini_draws(&gini, n_times)?, CREDIBLE_LEVEL)?));

        // f_t(x_k) = Σ_ℓ π_tℓ h_ℓ(x_k)
        let h = basis.matrix();
        let true_curve: Array2<f64> = true_pi.dot(&h.t());
        let n_draws = pi_draws.first().map_or(0, Vec::len);
        let n_bases = basis.n_bases();
        let mut curve_truth = Vec::with_capacity(n_times * n_args);
        let mut curve_draws = Vec::with_capacity(n_times * n_args);
        for t in 0..n_times {
            for k in 0..n_args {
                curve_truth.push(true_curve[[t, k]]);
                curve_draws.push(
                    (0..n_draws)
                        .map(|d| (0..n_bases).map(|l| pi_draws[t * n_bases + l][d] * h[[k, l]]).sum())
                        .collect(),
                );
            }
        }
        rows.push(metric_row(&model, "curve", &interval_metrics(&curve_truth, &curve_draws, CREDIBLE_LEVEL)?));
    } else {
        eprintln!("weights were not stored; scoring the Gini series only");
        rows.push(metric_row(&model, "gini", &interval_metrics(&true_gini, &gini_draws(&gini, n_times)?, CREDIBLE_LEVEL)?));
    }
    io::write_rows(&out.join(METRICS_FILE), &["model", "quantity", "rmse_x100", "al", "cp"], rows)
}
