use std::path::PathBuf;

use clap::Args;
use fssm::experiments::{generate_with, Scenario, SCENARIO_TIMES};
use fssm::samplers::RngStream;

use crate::error::{CliError, CliResult};
use crate::io::{self, fmt_f64, BasisRecord, ScenarioRecord, SimulateManifest};

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Number of arguments `x_k = k/(K+1)` per curve.
    #[arg(long = "K", value_name = "K")]
    pub n_args: usize,
    /// Common AR coefficient of the latent paths.
    #[arg(long, allow_negative_numbers = true)]
    pub phi: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Length of the series.
    #[arg(long, default_value_t = SCENARIO_TIMES)]
    pub times: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Writes `panel.csv`, the true weights and Ginis, and a manifest.
pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let mut problems = Vec::new();
    let scenario = match Scenario::new(args.n_args, args.phi) {
        Ok(s) => Some(s),
        Err(e) => {
            if let CliError::Config(p) = e.into() {
                problems.extend(p);
            }
            None
        }
    };
    if args.times == 0 {
        problems.push("--times must be positive".into());
    }
    let Some(scenario) = scenario.filter(|_| problems.is_empty()) else {
        return Err(CliError::Config(problems));
    };
    let mut rng = RngStream::new(args.seed, 0);
    let truth = generate_with(&mut rng, scenario.basis()?, scenario.params(), args.times)?;

    io::ensure_dir(&args.out)?;
    io::write_panel(&args.out.join(io::PANEL_FILE), &truth.panel)?;
    let pi = truth.weights();
    let rows = pi.indexed_iter().map(|((t, l), &v)| [(t + 1).to_string(), (l + 1).to_string(), fmt_f64(v)]);
    io::write_rows(&args.out.join(io::TRUTH_WEIGHTS_FILE), &["t", "l", "pi_true"], rows)?;
    let rows = truth.gini.iter().enumerate().map(|(t, &g)| [(t + 1).to_string(), fmt_f64(g)]);
    io::write_rows(&args.out.join(io::TRUTH_GINI_FILE), &["t", "gini_true"], rows)?;

    let manifest = SimulateManifest {
        tool: io::tool_version(),
        command: "simulate".into(),
        seed: args.seed,
        scenario: ScenarioRecord { n_args: args.n_args, phi: args.phi, n_times: args.times },
        params: truth.params.clone(),
        basis: BasisRecord::new(&truth.basis),
        files: [io::PANEL_FILE, io::TRUTH_WEIGHTS_FILE, io::TRUTH_GINI_FILE].map(String::from).to_vec(),
    };
    io::write_json(&args.out.join(io::MANIFEST_FILE), &manifest)?;
    eprintln!(
        "simulated T = {} curves at K = {} (phi = {}) into {}",
        args.times,
        args.n_args,
        args.phi,
        args.out.display()
    );
    Ok(())
}
