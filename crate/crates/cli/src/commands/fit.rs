use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use fssm::basis::BasisSet;
use fssm::gibbs::{drive_chain, ChainFailure, DrawStore, FssmSampler, ModelKind};
use fssm::mixture::MixtureSampler;
use fssm::model::{FunctionalPanel, PriorHyperparams};
use rayon::prelude::*;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, BasisRecord, ChainRecord, FitManifest};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

/// Recorded in every fit manifest.
pub const DEVIATIONS: [&str; 3] = [
    "phi proposal: the cross-product sum runs over t = 1..T and the squared sum over t = 2..T; \
     the t = 1 square cancels against the stationary prior of u_0, whose remaining sqrt(1 - phi^2) \
     factor enters the Metropolis-Hastings acceptance",
    "polygon Gini bounds: segment areas are (f_{k-1} + f_k) * (x_k - x_{k-1}) / 2, multiplying by the spacing",
    "initial weights: the static least-squares weights are shrunk 10% toward uniform before the floor",
];

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `mcmc.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the chains; defaults to the number of chains.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Overrides `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

enum ChainError {
    Setup(fssm::Error),
    Sweep(ChainFailure),
}

#[allow(clippy::result_large_err)]
fn run_one(
    config: &RunConfig,
    chain: usize,
    panel: &FunctionalPanel<f64>,
    basis: &BasisSet<f64>,
    prior: &PriorHyperparams<f64>,
) -> Result<DrawStore<f64>, ChainError> {
    let (panel, basis, prior) = (panel.clone(), basis.clone(), prior.clone());
    match config.model {
        ModelKind::Fssm => {
            let mut s = FssmSampler::new(panel, basis, prior).map_err(ChainError::Setup)?;
            drive_chain(&mut s, &config.mcmc, chain).map_err(ChainError::Sweep)
        }
        ModelKind::Mixture => {
            let mut s = MixtureSampler::for_chain(panel, basis, prior, config.mcmc.seed, chain).map_err(ChainError::Setup)?;
            drive_chain(&mut s, &config.mcmc, chain).map_err(ChainError::Sweep)
        }
    }
}

#[allow(clippy::result_large_err)]
/// Runs every chain and writes draws, predictive moments and the manifest.
pub fn fit(args: &FitArgs) -> CliResult<FitManifest> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.mcmc.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output = out.clone();
    }
    let mut problems = config.validate();
    if args.threads == Some(0) {
        problems.push("--threads must be positive".into());
    }
    if !problems.is_empty() {
        return Err(CliError::Config(problems));
    }
    let panel = io::read_panel(&config.input)?;
    let basis = config.basis.build(panel.arguments())?;
    let prior = config.priors_for(basis.n_bases() - 1);
    let threads = args.threads.unwrap_or(config.mcmc.n_chains);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start {threads} threads: {e}")))?;

    let start = Instant::now();
    let results: Vec<_> = pool.install(|| {
        (0..config.mcmc.n_chains).into_par_iter().map(|c| run_one(&config, c, &panel, &basis, &prior)).collect()
    });
    let wall_time_secs = start.elapsed().as_secs_f64();

    let mut stores = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (chain, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => stores.push(s),
            Err(ChainError::Setup(e @ (fssm::Error::Config(_) | fssm::Error::Shape(_)))) => {
                return Err(e.into())
            }
            Err(ChainError::Setup(e)) => failures.push(json!({ "chain": chain, "sweep": 0, "error": e.to_string() })),
            Err(ChainError::Sweep(f)) => failures.push(failure_record(&f)),
        }
    }
    if !failures.is_empty() {
        let path = config.output.join(DIAGNOSTICS_FILE);
        let messages: Vec<String> = failures.iter().map(|f| f["error"].as_str().unwrap_or("").to_string()).collect();
        io::write_json(&path, &json!({ "failures": failures }))?;
        return Err(CliError::Numerical(format!("{} (diagnostics in {})", messages.join("; "), path.display())));
    }

    let mut files = io::write_draws(&config.output, &stores)?;
    io::write_predictive(&config.output, &panel, &stores)?;
    files.push(io::MANIFEST_FILE.into());
    let chains: Vec<ChainRecord> = stores
        .iter()
        .map(|s| ChainRecord {
            chain: s.chain,
            draws: s.len(),
            sweeps: s.sweeps,
            wall_time_secs: s.wall_time_secs,
            phi_acceptance: s.phi_acceptance_rates(),
        })
        .collect();
    for c in &chains {
        let rates: Vec<String> = c.phi_acceptance.iter().map(|r| format!("{r:.3}")).collect();
        eprintln!(
            "chain {}: {} sweeps in {:.1} s, phi acceptance [{}]",
            c.chain,
            c.sweeps,
            c.wall_time_secs,
            rates.join(", ")
        );
    }
    let manifest = FitManifest {
        tool: io::tool_version(),
        command: "fit".into(),
        model: config.model,
        seed: config.mcmc.seed,
        priors: prior,
        basis: BasisRecord::new(&basis),
        n_times: panel.n_times(),
        n_args: panel.n_args(),
        draws_per_chain: config.mcmc.stored_draws(),
        store_states: config.mcmc.store_states,
        threads,
        wall_time_secs,
        chains,
        files,
        deviations: DEVIATIONS.map(String::from).to_vec(),
        config,
    };
    io::write_json(&manifest.config.output.join(io::MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn failure_record(f: &ChainFailure) -> serde_json::Value {
    let params: serde_json::Map<String, serde_json::Value> =
        f.param_names.iter().zip(&f.param_values).map(|(n, &v)| (n.clone(), json!(v))).collect();
    let states: Vec<Vec<f64>> = f.states.rows().into_iter().map(|r| r.to_vec()).collect();
    json!({
        "chain": f.chain,
        "sweep": f.sweep,
        "error": f.error.to_string(),
        "params": params,
        "states": states,
    })
}
