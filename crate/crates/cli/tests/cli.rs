use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fssm::basis::{presets, BasisFunction, Family};
use fssm::gibbs::{McmcConfig, ModelKind};
use fssm::model::PriorHyperparams;
use fssm_cli::config::{BasisConfig, RunConfig};
use fssm_cli::io::FitManifest;
use tempfile::TempDir;

fn fssm(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fssm")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn simulate(dir: &Path, name: &str, seed: u64) -> PathBuf {
    let out = fssm(&["simulate", "--K", "4", "--phi", "0.9", "--seed", &seed.to_string(), "--times", "30", "--out", name], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir.join(name)
}

fn write_config(dir: &Path, file: &str, model: &str, panel: &str, output: &str, chains: usize) -> PathBuf {
    let text = format!(
        "model = \"{model}\"\ninput = \"{panel}\"\noutput = \"{output}\"\n\n[basis]\npreset = \"oracle\"\n\n\
         [mcmc]\nn_iter = 300\nn_burnin = 100\nthin = 2\nseed = 11\nn_chains = {chains}\n"
    );
    let path = dir.join(file);
    fs::write(&path, text).unwrap();
    path
}

fn manifest(dir: &Path) -> FitManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![rdr.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()));
    rows
}

#[test]
fn simulate_is_byte_identical_on_rerun() {
    let tmp = TempDir::new().unwrap();
    let a = simulate(tmp.path(), "a", 7);
    let b = simulate(tmp.path(), "b", 7);
    for f in ["panel.csv", "truth_weights.csv", "truth_gini.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    let c = simulate(tmp.path(), "c", 8);
    assert_ne!(fs::read(a.join("panel.csv")).unwrap(), fs::read(c.join("panel.csv")).unwrap());
}

#[test]
fn simulate_writes_the_scenario_panel() {
    let tmp = TempDir::new().unwrap();
    let out = fssm(&["simulate", "--K", "4", "--phi", "0.95", "--seed", "7", "--out", "s"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let panel = read_csv(&tmp.path().join("s/panel.csv"));
    assert_eq!(panel[0], ["t", "x", "y"]);
    assert_eq!(panel.len(), 1 + 200 * 4);
    let xs: Vec<&str> = panel[1..5].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(xs, ["0.2", "0.4", "0.6", "0.8"]);
    assert_eq!(read_csv(&tmp.path().join("s/truth_weights.csv")).len(), 1 + 200 * 3);
    assert_eq!(read_csv(&tmp.path().join("s/truth_gini.csv"))[0], ["t", "gini_true"]);
}

#[test]
fn simulate_rejects_bad_flags() {
    let tmp = TempDir::new().unwrap();
    let out = fssm(&["simulate", "--K", "4", "--phi", "1.5", "--out", "s"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("phi"), "{}", stderr(&out));
    assert!(!tmp.path().join("s").exists());
    assert_eq!(code(&fssm(&["simulate", "--phi", "0.5", "--out", "s"], tmp.path())), 1);
    assert_eq!(code(&fssm(&["simulate", "--K", "0", "--phi", "0.5", "--out", "s"], tmp.path())), 1);
}

#[test]
fn simulate_reports_io_failure() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let out = fssm(&["simulate", "--K", "4", "--phi", "0.5", "--out", "blocker/sub"], tmp.path());
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn fit_is_reproducible_and_reports_acceptance() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "sim", 3);
    let config = write_config(tmp.path(), "run.toml", "fssm", "sim/panel.csv", "fit_a", 2);
    let out = fssm(&["fit", "--config", config.to_str().unwrap()], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = fssm(&["fit", "--config", "run.toml", "--threads", "1", "--out", "fit_b"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["params.csv", "weights.csv", "gini.csv", "predictive.csv"] {
        let a = fs::read(tmp.path().join("fit_a").join(f)).unwrap();
        assert_eq!(a, fs::read(tmp.path().join("fit_b").join(f)).unwrap(), "{f} differs");
    }
    let m = manifest(&tmp.path().join("fit_a"));
    assert_eq!(m.model, ModelKind::Fssm);
    assert_eq!(m.chains.len(), 2);
    assert_eq!(m.draws_per_chain, 150);
    assert!(m.wall_time_secs > 0.0);
    assert_eq!(m.deviations.len(), 3);
    for c in &m.chains {
        assert_eq!(c.sweeps, 400);
        assert!(c.phi_acceptance.iter().all(|&r| r > 0.2 && r <= 1.0), "{:?}", c.phi_acceptance);
    }
    let params = read_csv(&tmp.path().join("fit_a/params.csv"));
    assert_eq!(params[0], ["chain", "iter", "name", "value"]);
    assert_eq!(params.len(), 1 + 2 * 150 * 7);

    let out = fssm(&["fit", "--config", "run.toml", "--seed", "12", "--out", "fit_c"], tmp.path());
    assert_eq!(code(&out), 0);
    assert_eq!(manifest(&tmp.path().join("fit_c")).seed, 12);
    assert_ne!(fs::read(tmp.path().join("fit_a/params.csv")).unwrap(), fs::read(tmp.path().join("fit_c/params.csv")).unwrap());
}

#[test]
fn fit_routes_the_mixture_model() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "sim", 4);
    write_config(tmp.path(), "mix.toml", "mixture", "sim/panel.csv", "mix", 1);
    let out = fssm(&["fit", "--config", "mix.toml"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let m = manifest(&tmp.path().join("mix"));
    assert_eq!(m.model, ModelKind::Mixture);
    let names: Vec<String> = read_csv(&tmp.path().join("mix/params.csv"))[1..].iter().map(|r| r[2].clone()).collect();
    for n in ["nu2[1]", "nu2[2]", "nu2[3]"] {
        assert!(names.iter().any(|x| x == n), "{n} missing");
    }
}

#[test]
fn fit_rejects_bad_configs_with_every_problem() {
    let tmp = TempDir::new().unwrap();
    write_config(tmp.path(), "missing.toml", "fssm", "nowhere.csv", "out", 1);
    let out = fssm(&["fit", "--config", "missing.toml"], tmp.path());
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("input"), "{}", stderr(&out));

    simulate(tmp.path(), "sim", 5);
    let text = "model = \"fssm\"\ninput = \"sim/panel.csv\"\noutput = \"o\"\n[basis]\npreset = \"nope\"\n\
                [mcmc]\nn_iter = 0\nthin = 0\nn_chains = 0\n";
    fs::write(tmp.path().join("bad.toml"), text).unwrap();
    let out = fssm(&["fit", "--config", "bad.toml"], tmp.path());
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    for field in ["basis.preset", "mcmc.n_iter", "mcmc.thin", "mcmc.n_chains"] {
        assert!(err.contains(field), "{field} not reported in {err}");
    }

    fs::write(tmp.path().join("typo.toml"), "model = \"fsm\"\n").unwrap();
    assert_eq!(code(&fssm(&["fit", "--config", "typo.toml"], tmp.path())), 1);
    assert_eq!(code(&fssm(&["fit", "--config", "absent.toml"], tmp.path())), 2);
}

#[test]
fn numerical_breakdown_exits_with_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let mut panel = String::from("t,x,y\n");
    for t in 1..=10 {
        for (k, x) in ["0.2", "0.4", "0.6", "0.8"].iter().enumerate() {
            let y = if (t + k) % 2 == 0 { "1e160" } else { "-1e160" };
            panel.push_str(&format!("{t},{x},{y}\n"));
        }
    }
    fs::write(tmp.path().join("panel.csv"), panel).unwrap();
    write_config(tmp.path(), "run.toml", "fssm", "panel.csv", "out", 1);
    let out = fssm(&["fit", "--config", "run.toml"], tmp.path());
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let diag: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/diagnostics.json")).unwrap()).unwrap();
    assert_eq!(diag["failures"][0]["chain"], 0);
    assert!(diag["failures"][0]["error"].as_str().unwrap().contains("nu2"));
}

#[test]
fn summarize_and_gini_outputs() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "sim", 6);
    write_config(tmp.path(), "run.toml", "fssm", "sim/panel.csv", "fit", 1);
    assert_eq!(code(&fssm(&["fit", "--config", "run.toml"], tmp.path())), 0);

    let out = fssm(&["summarize", "--draws", "fit", "--truth", "sim"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = read_csv(&tmp.path().join("fit/summary.csv"));
    assert_eq!(summary[0], ["name", "mean", "q025", "q975", "ess"]);
    assert_eq!(summary.len(), 1 + 7);
    for row in &summary[1..] {
        let v: Vec<f64> = row[1..].iter().map(|s| s.parse().unwrap()).collect();
        assert!(v[1] <= v[0] && v[0] <= v[2] && v[3] > 0.0, "{row:?}");
    }
    let metrics = read_csv(&tmp.path().join("fit/metrics.csv"));
    assert_eq!(metrics[0], ["model", "quantity", "rmse_x100", "al", "cp"]);
    let quantities: Vec<&str> = metrics[1..].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(quantities, ["pi", "gini", "curve"]);
    let loss = read_csv(&tmp.path().join("fit/predictive_loss.csv"));
    let (ppv, ppse): (f64, f64) = (loss[1][0].parse().unwrap(), loss[1][1].parse().unwrap());
    assert!(ppse >= ppv && ppv > 0.0);

    let first = fs::read(tmp.path().join("fit/summary.csv")).unwrap();
    assert_eq!(code(&fssm(&["summarize", "--draws", "fit", "--out", "again"], tmp.path())), 0);
    assert_eq!(first, fs::read(tmp.path().join("again/summary.csv")).unwrap());
    assert!(!tmp.path().join("again/metrics.csv").exists());

    let out = fssm(&["gini", "--draws", "fit", "--panel", "sim/panel.csv"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_csv(&tmp.path().join("fit/gini_summary.csv"));
    assert_eq!(rows[0], ["t", "mean", "lower95", "upper95", "bound_lower", "bound_upper", "gini_true"]);
    assert_eq!(rows.len(), 31);
    for r in &rows[1..] {
        let lo: f64 = r[2].parse().unwrap();
        let hi: f64 = r[3].parse().unwrap();
        assert!(lo <= hi);
        if !r[4].is_empty() {
            assert!(r[4].parse::<f64>().unwrap() <= r[5].parse::<f64>().unwrap(), "{r:?}");
        }
    }
}

#[test]
fn truncated_draw_store_is_a_numerical_error() {
    let tmp = TempDir::new().unwrap();
    simulate(tmp.path(), "sim", 9);
    write_config(tmp.path(), "run.toml", "fssm", "sim/panel.csv", "fit", 1);
    assert_eq!(code(&fssm(&["fit", "--config", "run.toml"], tmp.path())), 0);
    let path = tmp.path().join("fit/params.csv");
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    fs::write(&path, lines[..lines.len() - 7].join("\n") + "\n").unwrap();
    let out = fssm(&["summarize", "--draws", "fit"], tmp.path());
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    // a record cut mid-line
    fs::write(&path, &text[..text.len() - 12]).unwrap();
    assert_eq!(code(&fssm(&["summarize", "--draws", "fit"], tmp.path())), 3);
}

#[test]
fn constant_weights_give_a_constant_gini() {
    let tmp = TempDir::new().unwrap();
    let g = BasisFunction::beta(3.0, 1.0).unwrap().gini().unwrap();
    let dir = tmp.path().join("draws");
    fs::create_dir(&dir).unwrap();
    let mut draws = String::from("chain,iter,name,value\n");
    for iter in 1..=50 {
        for t in 1..=3 {
            draws.push_str(&format!("0,{iter},G[{t}],{g:?}\n"));
        }
    }
    fs::write(dir.join("gini.csv"), draws).unwrap();
    let panel = "t,x,y\n1,0.5,0.125\n2,0.5,0.125\n3,0.5,0.125\n";
    fs::write(tmp.path().join("panel.csv"), panel).unwrap();
    let out = fssm(&["gini", "--draws", "draws", "--panel", "panel.csv", "--out", "g.csv"], tmp.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_csv(&tmp.path().join("g.csv"));
    assert_eq!(rows[0].len(), 6);
    for r in &rows[1..] {
        for v in &r[1..4] {
            assert!((v.parse::<f64>().unwrap() - g).abs() < 1e-15, "{r:?} vs {g}");
        }
    }
}

#[test]
fn config_round_trips_through_toml() {
    let configs = [
        RunConfig {
            model: ModelKind::Fssm,
            input: "data/panel.csv".into(),
            output: "runs/a".into(),
            basis: BasisConfig::preset("misspecified-pareto"),
            mcmc: McmcConfig::default(),
            priors: None,
        },
        RunConfig {
            model: ModelKind::Mixture,
            input: "/abs/panel.csv".into(),
            output: "out".into(),
            basis: BasisConfig {
                preset: None,
                functions: presets::INCOME_SET_1
                    .iter()
                    .map(|&(f, a, b)| BasisFunction::new(f, a, b).unwrap())
                    .chain([BasisFunction::new(Family::Pareto, 0.7, 0.6).unwrap()])
                    .collect(),
            },
            mcmc: McmcConfig { n_iter: 123, n_burnin: 45, thin: 3, seed: i64::MAX as u64, n_chains: 4, store_states: false },
            priors: Some(PriorHyperparams::uniform(5, 0.1, 2.5, 0.75, 0.03, 0.02, 0.01, 0.1, 1e-7)),
        },
    ];
    for c in configs {
        let text = c.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, c, "{text}");
        assert_eq!(back.to_toml().unwrap(), text);
    }
}
