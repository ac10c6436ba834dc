//! CSV and JSON artifacts.
//!
//! Draw files share one long layout, `chain,iter,name,value`: `params.csv`
//! holds `mu[l]`, `phi[l]`, `sigma2[l]` and `nu2` (or `nu2[l]`),
//! `weights.csv` holds `pi[t,l]` and `gini.csv` holds `G[t]`, all indices
//! 1-based. `predictive.csv` holds posterior-predictive moments per cell.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use fssm::basis::{BasisFunction, BasisSet};
use fssm::gibbs::{pool_chains, DrawStore, ModelKind, PredictiveMoments};
use fssm::model::{FunctionalPanel, ModelParams, PriorHyperparams};
use ndarray::Array2;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const PARAMS_FILE: &str = "params.csv";
pub const WEIGHTS_FILE: &str = "weights.csv";
pub const GINI_FILE: &str = "gini.csv";
pub const PREDICTIVE_FILE: &str = "predictive.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PANEL_FILE: &str = "panel.csv";
pub const TRUTH_WEIGHTS_FILE: &str = "truth_weights.csv";
pub const TRUTH_GINI_FILE: &str = "truth_gini.csv";

fn writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

/// Writes rows of already formatted fields.
pub fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Shortest round-trip text of a float.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Deserialize)]
struct PanelRow {
    t: usize,
    x: f64,
    y: f64,
}

/// Reads a long-format panel. Every time point must carry the same sorted
/// argument grid.
pub fn read_panel(path: &Path) -> CliResult<FunctionalPanel<f64>> {
    let mut rows: Vec<PanelRow> = Vec::new();
    for (i, r) in reader(path)?.deserialize().enumerate() {
        rows.push(r.map_err(|e| CliError::config(format!("{} row {}: {e}", path.display(), i + 2)))?);
    }
    if rows.is_empty() {
        return Err(CliError::config(format!("{} holds no observations", path.display())));
    }
    rows.sort_by(|a, b| a.t.cmp(&b.t).then(a.x.total_cmp(&b.x)));
    let first_t = rows[0].t;
    let grid: Vec<f64> = rows.iter().take_while(|r| r.t == first_t).map(|r| r.x).collect();
    let k = grid.len();
    if !rows.len().is_multiple_of(k) {
        return Err(CliError::config(format!("{}: time points have unequal argument counts", path.display())));
    }
    let n_times = rows.len() / k;
    let mut y = Array2::zeros((n_times, k));
    for (i, chunk) in rows.chunks(k).enumerate() {
        let t = chunk[0].t;
        if t != first_t + i || chunk.iter().any(|r| r.t != t) {
            return Err(CliError::config(format!(
                "{}: time points must be consecutive with {k} arguments each (problem near t = {t})",
                path.display()
            )));
        }
        for (j, r) in chunk.iter().enumerate() {
            if r.x != grid[j] {
                return Err(CliError::config(format!("{}: t = {t} uses a different argument grid", path.display())));
            }
            y[[i, j]] = r.y;
        }
    }
    Ok(FunctionalPanel::new(y, grid)?)
}

pub fn write_panel(path: &Path, panel: &FunctionalPanel<f64>) -> CliResult<()> {
    let rows = panel.y().indexed_iter().map(|((t, k), &v)| {
        [(t + 1).to_string(), fmt_f64(panel.arguments()[k]), fmt_f64(v)]
    });
    write_rows(path, &["t", "x", "y"], rows)
}

/// Basis functions with their arguments and Ginis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisRecord {
    pub functions: Vec<BasisFunction<f64>>,
    pub arguments: Vec<f64>,
    pub ginis: Vec<f64>,
}

impl BasisRecord {
    pub fn new(basis: &BasisSet<f64>) -> Self {
        Self { functions: basis.bases().to_vec(), arguments: basis.arguments().to_vec(), ginis: basis.ginis().to_vec() }
    }

    pub fn build(&self) -> CliResult<BasisSet<f64>> {
        Ok(BasisSet::new(self.functions.clone(), self.arguments.clone())?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub n_args: usize,
    pub phi: f64,
    pub n_times: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateManifest {
    pub tool: String,
    pub command: String,
    pub seed: u64,
    pub scenario: ScenarioRecord,
    pub params: ModelParams<f64>,
    pub basis: BasisRecord,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub chain: usize,
    pub draws: usize,
    pub sweeps: u64,
    pub wall_time_secs: f64,
    /// Per-component acceptance rate of the `φ` step over all sweeps.
    pub phi_acceptance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitManifest {
    pub tool: String,
    pub command: String,
    pub model: ModelKind,
    pub seed: u64,
    pub config: RunConfig,
    pub priors: PriorHyperparams<f64>,
    pub basis: BasisRecord,
    pub n_times: usize,
    pub n_args: usize,
    pub draws_per_chain: usize,
    pub store_states: bool,
    pub threads: usize,
    pub wall_time_secs: f64,
    pub chains: Vec<ChainRecord>,
    pub files: Vec<String>,
    /// Places where the implementation departs from the textbook formulas.
    pub deviations: Vec<String>,
}

pub fn tool_version() -> String {
    format!("fssm {}", env!("CARGO_PKG_VERSION"))
}

/// Writes the draw files of all chains; returns their names.
pub fn write_draws(dir: &Path, stores: &[DrawStore<f64>]) -> CliResult<Vec<String>> {
    let mut files = vec![PARAMS_FILE.to_string(), GINI_FILE.to_string(), PREDICTIVE_FILE.to_string()];

    let path = dir.join(PARAMS_FILE);
    let mut w = draw_writer(&path)?;
    for s in stores {
        for (iter, values) in s.iterations.iter().zip(&s.params) {
            for (name, &v) in s.param_names.iter().zip(values) {
                w.row(s.chain, *iter, name, v)?;
            }
        }
    }
    w.finish()?;

    let path = dir.join(GINI_FILE);
    let mut w = draw_writer(&path)?;
    for s in stores {
        let names: Vec<String> = (1..=s.gini.first().map_or(0, Vec::len)).map(|t| format!("G[{t}]")).collect();
        for (iter, g) in s.iterations.iter().zip(&s.gini) {
            for (name, &v) in names.iter().zip(g) {
                w.row(s.chain, *iter, name, v)?;
            }
        }
    }
    w.finish()?;

    if stores.iter().any(|s| !s.weights.is_empty()) {
        let path = dir.join(WEIGHTS_FILE);
        let mut w = draw_writer(&path)?;
        for s in stores {
            let Some(first) = s.weights.first() else { continue };
            let (n_times, n_bases) = first.dim();
            let names: Vec<String> =
                (1..=n_times).flat_map(|t| (1..=n_bases).map(move |l| format!("pi[{t},{l}]"))).collect();
            for (iter, pi) in s.iterations.iter().zip(&s.weights) {
                for (name, &v) in names.iter().zip(pi.iter()) {
                    w.row(s.chain, *iter, name, v)?;
                }
            }
        }
        w.finish()?;
        files.push(WEIGHTS_FILE.to_string());
    }
    Ok(files)
}

/// Posterior-predictive mean and variance pooled over chains, next to the data.
pub fn write_predictive(dir: &Path, panel: &FunctionalPanel<f64>, stores: &[DrawStore<f64>]) -> CliResult<()> {
    let pooled = pool_chains(stores)?.predictive;
    let (mean, var) = (pooled.mean(), pooled.variance());
    let rows = panel.y().indexed_iter().map(|((t, k), &y)| {
        [
            (t + 1).to_string(),
            fmt_f64(panel.arguments()[k]),
            fmt_f64(y),
            fmt_f64(mean[[t, k]]),
            fmt_f64(var[[t, k]]),
            pooled.count.to_string(),
        ]
    });
    write_rows(&dir.join(PREDICTIVE_FILE), &["t", "x", "y", "mean", "var", "count"], rows)
}

struct DrawWriter<'a> {
    path: &'a Path,
    inner: csv::Writer<BufWriter<File>>,
    chain: String,
    iter: String,
    value: String,
}

fn draw_writer(path: &Path) -> CliResult<DrawWriter<'_>> {
    let mut inner = writer(path)?;
    inner.write_record(["chain", "iter", "name", "value"]).map_err(|e| CliError::io(path, e))?;
    Ok(DrawWriter { path, inner, chain: String::new(), iter: String::new(), value: String::new() })
}

impl DrawWriter<'_> {
    fn row(&mut self, chain: usize, iter: usize, name: &str, value: f64) -> CliResult<()> {
        self.chain.clear();
        self.iter.clear();
        self.value.clear();
        write!(self.chain, "{chain}").and(write!(self.iter, "{iter}")).and(write!(self.value, "{value:?}")).expect("writing to a String");
        let record = [self.chain.as_str(), self.iter.as_str(), name, self.value.as_str()];
        self.inner.write_record(record).map_err(|e| CliError::io(self.path, e))
    }

    fn finish(mut self) -> CliResult<()> {
        self.inner.flush().map_err(|e| CliError::io(self.path, e))
    }
}

/// One draw file read back: `values[name][chain][draw]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawTable {
    pub names: Vec<String>,
    pub chains: Vec<usize>,
    pub iterations: Vec<Vec<usize>>,
    pub values: Vec<Vec<Vec<f64>>>,
}

impl DrawTable {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Draws of one name with all chains concatenated.
    pub fn pooled(&self, i: usize) -> Vec<f64> {
        self.values[i].concat()
    }

    pub fn draws_per_chain(&self) -> Vec<usize> {
        self.iterations.iter().map(Vec::len).collect()
    }
}

/// Every file written here ends in a newline, so a missing one marks a cut.
fn ends_with_newline(path: &Path) -> CliResult<bool> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let len = f.metadata().map_err(|e| CliError::io(path, e))?.len();
    if len == 0 {
        return Ok(false);
    }
    let mut last = [0u8];
    f.seek(SeekFrom::End(-1)).and_then(|_| f.read_exact(&mut last)).map_err(|e| CliError::io(path, e))?;
    Ok(last[0] == b'\n')
}

fn truncated(path: &Path, detail: impl std::fmt::Display) -> CliError {
    CliError::Numerical(format!("draw store {} is truncated or corrupt: {detail}", path.display()))
}

/// Reads a draw file and checks that every name has the same iterations in
/// every chain.
pub fn read_draws(path: &Path) -> CliResult<DrawTable> {
    if !ends_with_newline(path)? {
        return Err(truncated(path, "the last record is cut off"));
    }
    let mut rdr = reader(path)?;
    let mut table = DrawTable { names: Vec::new(), chains: Vec::new(), iterations: Vec::new(), values: Vec::new() };
    let mut name_index: HashMap<String, usize> = HashMap::new();
    let mut chain_index: HashMap<usize, usize> = HashMap::new();
    let mut record = csv::StringRecord::new();
    let mut line = 1usize;
    loop {
        match rdr.read_record(&mut record) {
            Ok(true) => line += 1,
            Ok(false) => break,
            Err(e) => return Err(truncated(path, e)),
        }
        let field = |i: usize| record.get(i).ok_or_else(|| truncated(path, format!("line {line} is short")));
        let chain: usize = field(0)?.parse().map_err(|e| truncated(path, format!("line {line}: {e}")))?;
        let iter: usize = field(1)?.parse().map_err(|e| truncated(path, format!("line {line}: {e}")))?;
        let name = field(2)?;
        let value: f64 = field(3)?.parse().map_err(|e| truncated(path, format!("line {line}: {e}")))?;
        let c = *chain_index.entry(chain).or_insert_with(|| {
            table.chains.push(chain);
            table.iterations.push(Vec::new());
            for v in table.values.iter_mut() {
                v.push(Vec::new());
            }
            table.chains.len() - 1
        });
        let n = match name_index.get(name) {
            Some(&n) => n,
            None => {
                table.names.push(name.to_string());
                table.values.push(vec![Vec::new(); table.chains.len()]);
                name_index.insert(name.to_string(), table.names.len() - 1);
                table.names.len() - 1
            }
        };
        let pos = table.values[n][c].len();
        if n == 0 {
            table.iterations[c].push(iter);
        } else if table.iterations[c].get(pos) != Some(&iter) {
            return Err(truncated(path, format!("line {line}: {name} at iteration {iter} has no matching draw")));
        }
        table.values[n][c].push(value);
    }
    if table.names.is_empty() {
        return Err(truncated(path, "no draws"));
    }
    for (n, per_chain) in table.values.iter().enumerate() {
        for (c, v) in per_chain.iter().enumerate() {
            if v.len() != table.iterations[c].len() {
                return Err(truncated(
                    path,
                    format!("{} has {} draws in chain {}, expected {}", table.names[n], v.len(), table.chains[c], table.iterations[c].len()),
                ));
            }
        }
    }
    Ok(table)
}

/// Predictive moments with the data they were compared to.
pub struct PredictiveTable {
    pub y: Array2<f64>,
    pub moments: PredictiveMoments,
}

#[derive(Debug, Deserialize)]
struct PredictiveRow {
    t: usize,
    y: f64,
    mean: f64,
    var: f64,
    count: usize,
}

pub fn read_predictive(path: &Path, n_times: usize, n_args: usize) -> CliResult<PredictiveTable> {
    let mut y = Array2::zeros((n_times, n_args));
    let mut moments = PredictiveMoments::new(n_times, n_args);
    let mut seen = 0;
    for r in reader(path)?.deserialize() {
        let r: PredictiveRow = r.map_err(|e| truncated(path, e))?;
        if seen == n_times * n_args {
            return Err(truncated(path, "more cells than the panel has"));
        }
        if r.t != seen / n_args + 1 {
            return Err(truncated(path, format!("cell {} belongs to t = {}, found t = {}", seen + 1, seen / n_args + 1, r.t)));
        }
        let (t, k) = (r.t - 1, seen % n_args);
        y[[t, k]] = r.y;
        // rebuild running sums so that the core loss routine applies unchanged
        let n = r.count as f64;
        moments.count = r.count;
        moments.sum[[t, k]] = r.mean * n;
        moments.sum_sq[[t, k]] = r.var * (n - 1.0) + r.mean * r.mean * n;
        seen += 1;
    }
    if seen != n_times * n_args {
        return Err(truncated(path, format!("{seen} cells, expected {}", n_times * n_args)));
    }
    Ok(PredictiveTable { y, moments })
}

/// `t,l,pi_true` into a `T × L` matrix.
pub fn read_truth_weights(path: &Path) -> CliResult<Array2<f64>> {
    #[derive(Deserialize)]
    struct Row {
        t: usize,
        l: usize,
        pi_true: f64,
    }
    let mut rows = Vec::new();
    for r in reader(path)?.deserialize() {
        let r: Row = r.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        rows.push(r);
    }
    let n_times = rows.iter().map(|r| r.t).max().unwrap_or(0);
    let n_bases = rows.iter().map(|r| r.l).max().unwrap_or(0);
    if n_times * n_bases != rows.len() || rows.iter().any(|r| r.t == 0 || r.l == 0) {
        return Err(CliError::config(format!("{}: expected a full 1-based t × l grid", path.display())));
    }
    let mut pi = Array2::zeros((n_times, n_bases));
    for r in rows {
        pi[[r.t - 1, r.l - 1]] = r.pi_true;
    }
    Ok(pi)
}

/// `t,gini_true` ordered by `t`.
pub fn read_truth_gini(path: &Path) -> CliResult<Vec<f64>> {
    #[derive(Deserialize)]
    struct Row {
        t: usize,
        gini_true: f64,
    }
    let mut rows = Vec::new();
    for r in reader(path)?.deserialize() {
        let r: Row = r.map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        rows.push((r.t, r.gini_true));
    }
    rows.sort_by_key(|r| r.0);
    if rows.iter().enumerate().any(|(i, r)| r.0 != i + 1) {
        return Err(CliError::config(format!("{}: times must run 1..=T", path.display())));
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
