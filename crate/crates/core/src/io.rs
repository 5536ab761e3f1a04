//! File formats.
//!
//! Panels are CSV with a leading `t` column (integers or ISO dates) and one
//! `node:dim` column per series. Run configurations are TOML. Models are a
//! versioned JSON document; floats are written in shortest round-trip form
//! and parsed exactly, so every tensor survives a save/load bit for bit.
//! All writes go through a temporary file in the target directory followed
//! by a rename.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{MvklError, Result};
use crate::granger::{CausalGraph, DictionaryKind, GrangerConfig, TimeSeriesPanel};
use crate::trainer::{Mode, Model, TracePoint, TrainConfig};
use crate::weights::Penalty;

/// Writes `bytes` to `path` atomically.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| MvklError::Io(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
enum Stamp {
    Int(i64),
    Time(NaiveDateTime),
}

fn parse_stamp(s: &str) -> Option<Stamp> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(Stamp::Int(v));
    }
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(Stamp::Time(t.naive_utc()));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(Stamp::Time(t));
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(Stamp::Time)
}

fn parse_header(h: &str) -> Option<(String, i64)> {
    let (node, dim) = h.rsplit_once(':')?;
    let node = node.trim();
    if node.is_empty() {
        return None;
    }
    Some((node.to_string(), dim.trim().parse().ok()?))
}

/// Reads a panel CSV from any reader. Columns of a node are ordered by
/// their dimension index; nodes keep their first-appearance order.
pub fn parse_panel<R: Read>(reader: R) -> Result<TimeSeriesPanel> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(e, 1))?.clone();
    if headers.get(0) != Some("t") {
        return Err(MvklError::Parse {
            line: 1,
            msg: "first column must be `t`".into(),
        });
    }
    let mut nodes: Vec<String> = Vec::new();
    let mut cols: BTreeMap<usize, Vec<(i64, usize)>> = BTreeMap::new();
    for (c, h) in headers.iter().enumerate().skip(1) {
        let (node, dim) = parse_header(h).ok_or_else(|| MvklError::Parse {
            line: 1,
            msg: format!("column header `{h}` is not of the form node:dim"),
        })?;
        let idx = match nodes.iter().position(|n| *n == node) {
            Some(i) => i,
            None => {
                nodes.push(node);
                nodes.len() - 1
            }
        };
        let entry = cols.entry(idx).or_default();
        if entry.iter().any(|(d, _)| *d == dim) {
            return Err(MvklError::Parse {
                line: 1,
                msg: format!("duplicate column `{h}`"),
            });
        }
        entry.push((dim, c));
    }
    if nodes.is_empty() {
        return Err(MvklError::Parse {
            line: 1,
            msg: "no series columns".into(),
        });
    }
    let mut order = Vec::new();
    let mut dims = Vec::new();
    for i in 0..nodes.len() {
        let mut c = cols.remove(&i).unwrap_or_default();
        c.sort();
        dims.push(c.len());
        order.extend(c.into_iter().map(|(_, col)| col));
    }

    let mut times = Vec::new();
    let mut data = Vec::new();
    let mut last: Option<Stamp> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(e, 0))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let t = rec.get(0).unwrap_or("");
        let stamp = parse_stamp(t).ok_or_else(|| MvklError::Parse {
            line,
            msg: format!("time `{t}` is neither an integer nor an ISO date"),
        })?;
        if let Some(prev) = last {
            let same_kind = matches!((prev, stamp), (Stamp::Int(_), Stamp::Int(_)) | (Stamp::Time(_), Stamp::Time(_)));
            if !same_kind {
                return Err(MvklError::Parse {
                    line,
                    msg: "time column mixes integers and dates".into(),
                });
            }
            if stamp <= prev {
                return Err(MvklError::Parse {
                    line,
                    msg: format!("time `{t}` is not strictly increasing"),
                });
            }
        }
        last = Some(stamp);
        times.push(t.to_string());
        for &c in &order {
            let cell = rec.get(c).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| MvklError::Parse {
                line,
                msg: format!("cell `{cell}` in column `{}` is not a number", &headers[c]),
            })?;
            if !v.is_finite() {
                return Err(MvklError::Parse {
                    line,
                    msg: format!("non-finite value in column `{}`", &headers[c]),
                });
            }
            data.push(v);
        }
    }
    if times.is_empty() {
        return Err(MvklError::InsufficientData("panel has no rows".into()));
    }
    let values = DMatrix::from_row_slice(times.len(), order.len(), &data);
    TimeSeriesPanel::new(nodes, dims, values, times)
}

fn csv_error(e: csv::Error, fallback: usize) -> MvklError {
    let line = e.position().map_or(fallback, |p| p.line() as usize);
    let msg = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => e.to_string(),
    };
    MvklError::Parse { line, msg }
}

pub fn read_panel(path: &Path) -> Result<TimeSeriesPanel> {
    parse_panel(fs::File::open(path)?)
}

fn panel_headers(nodes: &[String], dims: &[usize]) -> Vec<String> {
    nodes
        .iter()
        .zip(dims)
        .flat_map(|(n, &d)| (1..=d).map(move |k| format!("{n}:{k}")))
        .collect()
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fmt = |e: csv::Error| MvklError::Format(e.to_string());
    w.write_record(header).map_err(fmt)?;
    for r in rows {
        w.write_record(&r).map_err(fmt)?;
    }
    let bytes = w.into_inner().map_err(|e| MvklError::Format(e.to_string()))?;
    atomic_write(path, &bytes)
}

/// Time-indexed matrix as a panel-format CSV.
pub fn write_series(path: &Path, times: &[String], nodes: &[String], dims: &[usize], values: &DMatrix<f64>) -> Result<()> {
    let mut header = vec!["t".to_string()];
    header.extend(panel_headers(nodes, dims));
    if values.ncols() + 1 != header.len() || values.nrows() != times.len() {
        return Err(MvklError::dims(
            "series values",
            format!("{}x{}", times.len(), header.len() - 1),
            format!("{}x{}", values.nrows(), values.ncols()),
        ));
    }
    write_csv(
        path,
        &header,
        (0..values.nrows()).map(|r| {
            let mut row = vec![times[r].clone()];
            row.extend(values.row(r).iter().map(|v| v.to_string()));
            row
        }),
    )
}

pub fn write_panel(path: &Path, panel: &TimeSeriesPanel) -> Result<()> {
    write_series(path, panel.times(), panel.nodes(), panel.dims(), panel.values())
}

/// Graph CSV: header row and first column hold node labels; entry `(i, j)`
/// is the influence of column node `j` on row node `i`. Entries below
/// `threshold` are written as zero.
pub fn write_graph(path: &Path, graph: &CausalGraph, threshold: Option<f64>) -> Result<()> {
    let mut header = vec!["node".to_string()];
    header.extend(graph.labels.iter().cloned());
    write_csv(
        path,
        &header,
        graph.labels.iter().enumerate().map(|(i, label)| {
            let mut row = vec![label.clone()];
            row.extend(graph.weights.row(i).iter().map(|&w| match threshold {
                Some(t) if w < t => "0".to_string(),
                _ => w.to_string(),
            }));
            row
        }),
    )
}

/// Plain matrix CSV with column headers `c1..cn`.
pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let header: Vec<String> = (1..=m.ncols()).map(|k| format!("c{k}")).collect();
    write_csv(path, &header, (0..m.nrows()).map(|r| m.row(r).iter().map(|v| v.to_string()).collect()))
}

pub fn write_trace(path: &Path, trace: &[TracePoint]) -> Result<()> {
    let header = ["outer_iter", "seconds", "objective"].map(String::from);
    write_csv(
        path,
        &header,
        trace
            .iter()
            .map(|p| vec![p.outer_iter.to_string(), p.seconds.to_string(), p.objective.to_string()]),
    )
}

/// One row of a benchmark trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub variant: String,
    pub outer_iter: usize,
    pub seconds: f64,
    pub objective: f64,
    pub test_rmse: f64,
}

pub fn write_bench(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let header = ["variant", "outer_iter", "seconds", "objective", "test_rmse"].map(String::from);
    write_csv(
        path,
        &header,
        rows.iter().map(|r| {
            vec![
                r.variant.clone(),
                r.outer_iter.to_string(),
                r.seconds.to_string(),
                r.objective.to_string(),
                r.test_rmse.to_string(),
            ]
        }),
    )
}

// ---------------------------------------------------------------------------
// Run configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    pub path: Option<PathBuf>,
    /// Response nodes for regression commands.
    pub outputs: Vec<String>,
    /// Input nodes; empty means every node that is not an output.
    pub inputs: Vec<String>,
    /// Scale inputs to unit variance after centering.
    pub standardize: bool,
    /// Trailing share of rows held out by `bench`.
    pub test_fraction: f64,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            outputs: Vec::new(),
            inputs: Vec::new(),
            standardize: false,
            test_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Every kernel sees all input columns.
    Joint,
    /// Kernels are built per input node.
    PerNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DictionarySection {
    pub kind: DictionaryKind,
    pub grouping: Grouping,
    /// Explicit Gaussian bandwidths; empty means a median-heuristic grid.
    pub bandwidths: Vec<f64>,
    pub bandwidth_count: usize,
    pub half_span: f64,
    /// Replace exact Gaussians by random Fourier features of this dimension.
    pub fourier_dim: Option<usize>,
}

impl Default for DictionarySection {
    fn default() -> Self {
        Self {
            kind: DictionaryKind::Gaussian,
            grouping: Grouping::Joint,
            bandwidths: Vec::new(),
            bandwidth_count: 7,
            half_span: 3.0,
            fourier_dim: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub lambda: f64,
    pub tau: Option<f64>,
    pub p: Option<f64>,
    pub mu: Option<f64>,
    pub mode: Mode,
    pub cg_eps: f64,
    pub cg_max_iter: usize,
    pub sdp_iter: usize,
    pub outer_max: usize,
    pub outer_tol: f64,
    pub max_seconds: Option<f64>,
    pub eta_smoothing: f64,
    pub seed: u64,
    pub okl_kernel: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            lambda: d.lambda,
            tau: d.tau,
            p: None,
            mu: None,
            mode: d.mode,
            cg_eps: d.cg_eps,
            cg_max_iter: d.cg_max_iter,
            sdp_iter: d.sdp_iter,
            outer_max: d.outer_max,
            outer_tol: d.outer_tol,
            max_seconds: d.max_seconds,
            eta_smoothing: d.eta_smoothing,
            seed: d.seed,
            okl_kernel: d.okl_kernel,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self) -> Result<TrainConfig> {
        let penalty = match (self.p, self.mu) {
            (Some(_), Some(_)) => return Err(config_err("train.mu", "set either `p` or `mu`, not both")),
            (_, Some(mu)) => Penalty::Elastic { mu },
            (p, None) => Penalty::Lp { p: p.unwrap_or(1.0) },
        };
        let cfg = TrainConfig {
            lambda: self.lambda,
            tau: self.tau,
            penalty,
            mode: self.mode,
            cg_eps: self.cg_eps,
            cg_max_iter: self.cg_max_iter,
            sdp_iter: self.sdp_iter,
            outer_max: self.outer_max,
            outer_tol: self.outer_tol,
            max_seconds: self.max_seconds,
            eta_smoothing: self.eta_smoothing,
            seed: self.seed,
            okl_kernel: self.okl_kernel,
        };
        let checks: [(&str, bool); 9] = [
            ("train.lambda", self.lambda > 0.0 && self.lambda.is_finite()),
            ("train.tau", self.tau.is_none_or(|t| t > 0.0 && t.is_finite())),
            ("train.p", self.p.is_none_or(|p| (1.0..=2.0).contains(&p))),
            ("train.mu", self.mu.is_none_or(|m| (0.0..=1.0).contains(&m))),
            ("train.cg_eps", self.cg_eps > 0.0),
            ("train.cg_max_iter", self.cg_max_iter > 0),
            ("train.outer_tol", self.outer_tol >= 0.0),
            ("train.max_seconds", self.max_seconds.is_none_or(|m| m > 0.0 && m.is_finite())),
            ("train.eta_smoothing", self.eta_smoothing >= 0.0),
        ];
        for (key, ok) in checks {
            if !ok {
                return Err(config_err(key, "value out of range"));
            }
        }
        cfg.validate().map_err(|e| config_err("train", e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSection {
    pub cg_eps: Vec<f64>,
    pub sdp_iter: Vec<usize>,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            cg_eps: vec![1e-2, 1e-6],
            sdp_iter: vec![10, 100],
        }
    }
}

/// Parsed run configuration. Every section is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub data: DataSection,
    pub dictionary: DictionarySection,
    pub train: TrainSection,
    pub granger: GrangerConfig,
    pub bench: BenchSection,
}

fn config_err(key: impl Into<String>, msg: impl Into<String>) -> MvklError {
    MvklError::Config {
        key: key.into(),
        msg: msg.into(),
    }
}

/// Deserializes one section, naming the offending key on failure.
fn section<T: DeserializeOwned + Default>(name: &str, value: Option<&toml::Value>) -> Result<T> {
    let Some(value) = value else {
        return Ok(T::default());
    };
    let toml::Value::Table(table) = value else {
        return Err(config_err(name, "expected a table"));
    };
    match T::deserialize(toml::Value::Table(table.clone())) {
        Ok(v) => Ok(v),
        Err(whole) => {
            for (k, v) in table {
                let mut single = toml::Table::new();
                single.insert(k.clone(), v.clone());
                if let Err(e) = T::deserialize(toml::Value::Table(single)) {
                    return Err(config_err(format!("{name}.{k}"), e.message().trim().to_string()));
                }
            }
            Err(config_err(name, whole.message().trim().to_string()))
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let root: toml::Table = text.parse().map_err(|e: toml::de::Error| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            config_err("<syntax>", format!("line {line}: {}", e.message().trim()))
        })?;
        const SECTIONS: [&str; 5] = ["data", "dictionary", "train", "granger", "bench"];
        if let Some(k) = root.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(config_err(k.clone(), "unknown section"));
        }
        let cfg = RunConfig {
            data: section("data", root.get("data"))?,
            dictionary: section("dictionary", root.get("dictionary"))?,
            train: section("train", root.get("train"))?,
            granger: section("granger", root.get("granger"))?,
            bench: section("bench", root.get("bench"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.to_config()?;
        if !(0.0..1.0).contains(&self.data.test_fraction) {
            return Err(config_err("data.test_fraction", "must lie in [0, 1)"));
        }
        if self.dictionary.bandwidths.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
            return Err(config_err("dictionary.bandwidths", "bandwidths must be positive"));
        }
        if self.dictionary.bandwidth_count == 0 {
            return Err(config_err("dictionary.bandwidth_count", "must be at least 1"));
        }
        if self.dictionary.fourier_dim == Some(0) {
            return Err(config_err("dictionary.fourier_dim", "must be at least 1"));
        }
        if self.granger.lag == 0 {
            return Err(config_err("granger.lag", "must be at least 1"));
        }
        if self.granger.bandwidth_count == 0 {
            return Err(config_err("granger.bandwidth_count", "must be at least 1"));
        }
        if self.granger.workers == Some(0) {
            return Err(config_err("granger.workers", "must be at least 1"));
        }
        if self.bench.cg_eps.is_empty() || self.bench.cg_eps.iter().any(|e| !(*e > 0.0)) {
            return Err(config_err("bench.cg_eps", "need at least one positive tolerance"));
        }
        if self.bench.sdp_iter.is_empty() {
            return Err(config_err("bench.sdp_iter", "need at least one iteration count"));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Model files

pub const MODEL_FORMAT: &str = "mvkl-model";
pub const MODEL_VERSION: u32 = 1;

/// How panel columns become model inputs and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub input_nodes: Vec<String>,
    pub input_dims: Vec<usize>,
    pub output_nodes: Vec<String>,
    pub output_dims: Vec<usize>,
    /// `0` for plain regression; otherwise inputs are the lagged histories
    /// of `input_nodes` and the single output node is predicted one step
    /// ahead.
    pub lag: usize,
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub created: String,
    pub preprocessing: Preprocessing,
    pub model: Model,
}

impl ModelFile {
    pub fn new(preprocessing: Preprocessing, model: Model) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            created: chrono::Utc::now().to_rfc3339(),
            preprocessing,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| MvklError::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| MvklError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(MvklError::Format(format!("not a model file (format `{}`)", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(MvklError::Format(format!("unsupported model version {}", file.version)));
        }
        file.check()?;
        Ok(file)
    }

    fn check(&self) -> Result<()> {
        let m = &self.model;
        let p = &self.preprocessing;
        let (l, n) = m.state.coefficients.shape();
        let bad = m.x_train.nrows() != l
            || m.state.weights.eta.len() != m.dictionary.len()
            || m.state.output_kernel.matrix().shape() != (n, n)
            || p.y_mean.len() != n
            || p.x_mean.len() != m.x_train.ncols()
            || p.x_scale.len() != m.x_train.ncols()
            || p.input_nodes.len() != p.input_dims.len()
            || p.output_nodes.len() != p.output_dims.len();
        if bad {
            return Err(MvklError::Format("model tensors have inconsistent shapes".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        atomic_write(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<TimeSeriesPanel> {
        parse_panel(s.as_bytes())
    }

    #[test]
    fn panel_round_trip_and_grouping() {
        let p = parse_str("t,b:2,a:1,b:1\n0,1,2,3\n1,4,5,6\n").unwrap();
        assert_eq!(p.nodes(), ["b", "a"]);
        assert_eq!(p.dims(), [2, 1]);
        assert_eq!(p.values(), &DMatrix::from_row_slice(2, 3, &[3.0, 1.0, 2.0, 6.0, 4.0, 5.0]));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_panel(&path, &p).unwrap();
        assert_eq!(read_panel(&path).unwrap(), p);
    }

    #[test]
    fn iso_times() {
        let p = parse_str("t,x:1\n2024-01-01,1\n2024-01-02T06:00:00,2\n2024-01-03T00:00:00Z,3\n").unwrap();
        assert_eq!(p.len(), 3);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let line_of = |s: &str| match parse_str(s) {
            Err(MvklError::Parse { line, .. }) => line,
            other => panic!("expected parse error, got {other:?}"),
        };
        assert_eq!(line_of("t,x:1\n0,1\n1,oops\n"), 3);
        assert_eq!(line_of("t,x:1\n0,1\n0,2\n"), 3);
        assert_eq!(line_of("t,x:1\n0,1\n1,2,3\n"), 3);
        assert_eq!(line_of("t,x\n0,1\n"), 1);
        assert_eq!(line_of("time,x:1\n0,1\n"), 1);
        assert_eq!(line_of("t,x:1\n0,1\n2024-01-01,2\n"), 3);
        assert_eq!(line_of("t,x:1,x:1\n0,1,2\n"), 1);
        assert_eq!(line_of("t,x:1\n0,\n"), 2);
    }

    #[test]
    fn config_defaults_and_errors() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.granger.lag, 7);
        assert_eq!(cfg.train.to_config().unwrap(), TrainConfig::default());
        let cfg = RunConfig::parse("[train]\nlambda = 0.5\nmu = 0.3\nmode = \"okl\"\n[granger]\nlag = 2\n").unwrap();
        let t = cfg.train.to_config().unwrap();
        assert_eq!(t.penalty, Penalty::Elastic { mu: 0.3 });
        assert_eq!(t.mode, Mode::Okl);
        assert_eq!(cfg.granger.lag, 2);

        let key_of = |s: &str| match RunConfig::parse(s) {
            Err(MvklError::Config { key, .. }) => key,
            other => panic!("expected config error, got {other:?}"),
        };
        assert_eq!(key_of("[train]\nlamda = 1.0\n"), "train.lamda");
        assert_eq!(key_of("[train]\nlambda = \"big\"\n"), "train.lambda");
        assert_eq!(key_of("[train]\nlambda = -1.0\n"), "train.lambda");
        assert_eq!(key_of("[train]\np = 1.5\nmu = 0.5\n"), "train.mu");
        assert_eq!(key_of("[granger]\nlag = 0\n"), "granger.lag");
        assert_eq!(key_of("[extra]\na = 1\n"), "extra");
        assert_eq!(key_of("[dictionary]\nkind = \"cubic\"\n"), "dictionary.kind");
        assert_eq!(key_of("[train\n"), "<syntax>");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn graph_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let g = CausalGraph {
            labels: vec!["a".into(), "b".into()],
            weights: DMatrix::from_row_slice(2, 2, &[0.5, 0.01, 0.0, 1.0]),
        };
        write_graph(&path, &g, Some(0.1)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "node,a,b\na,0.5,0\nb,0,1\n");
    }
}
