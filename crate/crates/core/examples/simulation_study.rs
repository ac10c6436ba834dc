//! One cell of the simulation grid: both models fitted to the same panel.
//!
//! ```text
//! cargo run --release --example simulation_study -- [K] [phi] [seed] [burn-in] [draws]
//! ```

use fssm::experiments::{generate_synthetic, metric_report, IntervalMetrics, Scenario};
use fssm::gibbs::{run_chain, McmcConfig};
use fssm::mixture::{default_mixture_prior, run_mixture_chain};
use fssm::model::PriorHyperparams;
use fssm::samplers::RngStream;

fn arg<T: std::str::FromStr>(i: usize, default: T) -> T {
    std::env::args().nth(i).and_then(|a| a.parse().ok()).unwrap_or(default)
}

fn row(label: &str, m: &IntervalMetrics) {
    println!("{label:<16} {:>8.3} {:>7.3} {:>7.3}", m.rmse_x100, m.al, m.cp);
}

fn main() -> fssm::Result<()> {
    let scenario = Scenario::new(arg(1, 4), arg(2, 0.95))?;
    let seed: u64 = arg(3, 20_240_615);
    let config = McmcConfig { n_burnin: arg(4, 10_000), n_iter: arg(5, 30_000), seed: 7, ..McmcConfig::default() };
    let truth = generate_synthetic(&mut RngStream::new(seed, 0), scenario)?;
    let n_free = truth.basis.n_bases() - 1;

    println!("K = {}, phi = {}, data seed {seed}", scenario.n_args, scenario.phi);
    println!("{:<16} {:>8} {:>7} {:>7}", "", "RMSE", "AL", "CP");
    let fssm = run_chain(&config, 0, &truth.panel, &truth.basis, &PriorHyperparams::default_for(n_free))?;
    let report = metric_report(&fssm, &truth)?;
    row("FSSM pi", &report.pi);
    row("FSSM G", &report.gini);
    let mixture = run_mixture_chain(&config, 0, &truth.panel, &truth.basis, &default_mixture_prior(n_free))?;
    let report = metric_report(&mixture, &truth)?;
    row("Mixture pi", &report.pi);
    row("Mixture G", &report.gini);
    Ok(())
}
