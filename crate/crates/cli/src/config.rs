//! Run configuration read from TOML.
//!
//! ```toml
//! model = "fssm"
//! input = "panel.csv"
//! output = "fit"
//!
//! [basis]
//! preset = "oracle"
//!
//! [mcmc]
//! n_iter = 30000
//! n_burnin = 10000
//! seed = 7
//! ```
//!
//! Relative paths are taken relative to the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use fssm::basis::{presets, BasisFunction, BasisSet, Family};
use fssm::gibbs::{McmcConfig, ModelKind};
use fssm::mixture::{default_mixture_prior, MAX_COMPONENTS};
use fssm::model::PriorHyperparams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const PRESET_NAMES: [&str; 5] = ["oracle", "misspecified-pareto", "income-1", "income-2", "income-3"];

/// Either a named preset or an explicit list of functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functions: Vec<BasisFunction<f64>>,
}

impl BasisConfig {
    pub fn preset(name: &str) -> Self {
        Self { preset: Some(name.to_string()), functions: Vec::new() }
    }

    /// `(family, a, b)` triples, or every problem found.
    pub fn spec(&self) -> Result<Vec<(Family, f64, f64)>, Vec<String>> {
        match (&self.preset, self.functions.is_empty()) {
            (Some(_), false) => Err(vec!["basis: give either `preset` or `functions`, not both".into()]),
            (None, true) => Err(vec!["basis: one of `preset` or `functions` is required".into()]),
            (Some(name), true) => presets::by_name(name).map(|s| s.to_vec()).ok_or_else(|| {
                vec![format!("basis.preset: unknown preset '{name}' (known: {})", PRESET_NAMES.join(", "))]
            }),
            (None, false) => {
                let mut problems = Vec::new();
                if self.functions.len() < 2 {
                    problems.push(format!("basis.functions: need at least two functions, got {}", self.functions.len()));
                }
                for (i, f) in self.functions.iter().enumerate() {
                    if let Err(e) = f.validate() {
                        problems.push(format!("basis.functions[{}]: {e}", i + 1));
                    }
                }
                if problems.is_empty() {
                    Ok(self.functions.iter().map(|f| (f.family, f.a, f.b)).collect())
                } else {
                    Err(problems)
                }
            }
        }
    }

    pub fn build(&self, arguments: &[f64]) -> CliResult<BasisSet<f64>> {
        let spec = self.spec().map_err(CliError::Config)?;
        Ok(BasisSet::from_spec(&spec, arguments)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    /// Panel CSV in long format `t,x,y`.
    pub input: PathBuf,
    pub output: PathBuf,
    pub basis: BasisConfig,
    #[serde(default)]
    pub mcmc: McmcConfig,
    /// Defaults depend on the model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<PriorHyperparams<f64>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string().trim_end().to_string()))
    }

    /// Fails for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::config(format!("cannot write configuration as TOML: {e}")))
    }

    /// Reads a file and resolves its relative paths against the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.input = resolve(base, &config.input);
        config.output = resolve(base, &config.output);
        Ok(config)
    }

    /// Priors given in the file, or the model's defaults.
    pub fn priors_for(&self, n_free: usize) -> PriorHyperparams<f64> {
        self.priors.clone().unwrap_or_else(|| match self.model {
            ModelKind::Fssm => PriorHyperparams::default_for(n_free),
            ModelKind::Mixture => default_mixture_prior(n_free),
        })
    }

    /// Every violated field. Creates the output directory to prove it is writable.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        match self.basis.spec() {
            Ok(spec) => {
                let n_bases = spec.len();
                if let Some(p) = &self.priors {
                    if let Err(e) = p.validate(n_bases - 1) {
                        problems.push(format!("priors: {e}"));
                    }
                }
                if self.model == ModelKind::Mixture && n_bases > MAX_COMPONENTS {
                    problems.push(format!("basis: the mixture supports at most {MAX_COMPONENTS} components, got {n_bases}"));
                }
            }
            Err(p) => problems.extend(p),
        }
        if let Err(fssm::Error::Config(m)) = self.mcmc.validate() {
            problems.extend(m.split("; ").map(|p| format!("mcmc.{p}")));
        }
        if !self.input.is_file() {
            problems.push(format!("input: {} is not a readable file", self.input.display()));
        }
        if let Err(e) = probe_writable(&self.output) {
            problems.push(format!("output: {} is not writable ({e})", self.output.display()));
        }
        problems
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn probe_writable(dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".fssm-write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)
}
