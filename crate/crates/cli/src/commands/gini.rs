use std::path::PathBuf;

use clap::Args;
use fssm::experiments::{credible_interval, mean, polygon_gini_bounds, CREDIBLE_LEVEL};

use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_f64};

pub const GINI_SUMMARY_FILE: &str = "gini_summary.csv";

#[derive(Debug, Clone, Args)]
pub struct GiniArgs {
    /// Output directory of `fit`.
    #[arg(long)]
    pub draws: PathBuf,
    /// Panel the chains were fitted to; its points give the polygon bounds.
    #[arg(long)]
    pub panel: PathBuf,
    /// True Gini series; defaults to `truth_gini.csv` beside the panel when present.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Output CSV; defaults to `gini_summary.csv` in the draws directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Posterior mean and interval of `G_t` with bounds from the raw points.
/// Bounds are left blank where the observed points are not a valid
/// increasing curve in the unit square.
pub fn gini(args: &GiniArgs) -> CliResult<()> {
    let table = io::read_draws(&args.draws.join(io::GINI_FILE))?;
    let panel = io::read_panel(&args.panel)?;
    let n_times = panel.n_times();
    if table.names.len() != n_times {
        return Err(CliError::config(format!(
            "draws cover {} times but the panel has {n_times}",
            table.names.len()
        )));
    }
    let truth_path = args.truth.clone().or_else(|| {
        let p = args.panel.parent()?.join(io::TRUTH_GINI_FILE);
        p.is_file().then_some(p)
    });
    let truth = truth_path.as_deref().map(io::read_truth_gini).transpose()?;
    if let Some(g) = &truth {
        if g.len() != n_times {
            return Err(CliError::config(format!("truth has {} times, the panel has {n_times}", g.len())));
        }
    }

    let mut header = vec!["t", "mean", "lower95", "upper95", "bound_lower", "bound_upper"];
    if truth.is_some() {
        header.push("gini_true");
    }
    let mut skipped = 0;
    let mut rows = Vec::with_capacity(n_times);
    for t in 1..=n_times {
        let name = format!("G[{t}]");
        let i = table.index(&name).ok_or_else(|| CliError::Numerical(format!("gini.csv lacks {name}")))?;
        let draws = table.pooled(i);
        let (lo, hi) = credible_interval(&draws, CREDIBLE_LEVEL);
        let points: Vec<(f64, f64)> = panel.arguments().iter().copied().zip(panel.row_slice(t).iter().copied()).collect();
        let (b_lo, b_hi) = match polygon_gini_bounds(&points) {
            Ok((a, b)) => (fmt_f64(a), fmt_f64(b)),
            Err(_) => {
                skipped += 1;
                (String::new(), String::new())
            }
        };
        let mut row = vec![t.to_string(), fmt_f64(mean(&draws)), fmt_f64(lo), fmt_f64(hi), b_lo, b_hi];
        if let Some(g) = &truth {
            row.push(fmt_f64(g[t - 1]));
        }
        rows.push(row);
    }
    if skipped > 0 {
        eprintln!("{skipped} of {n_times} observed curves are not increasing in the unit square; their bounds are blank");
    }
    let out = args.out.clone().unwrap_or_else(|| args.draws.join(GINI_SUMMARY_FILE));
    io::write_rows(&out, &header, rows)
}
