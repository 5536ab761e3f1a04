//! Nonlinear Granger causality through sparse kernel weights.
//!
//! Each node `i` of a multivariate time series gets its own model
//! `x^i_t = f^i(history)` whose dictionary holds kernels that each look at
//! the lagged history `x^j_{t-1} .. x^j_{t-lag}` of a single node `j`.
//! After fitting with a sparsity-inducing penalty, the weight mass that node
//! `i`'s model puts on node `j`'s kernels becomes the edge weight `G_ij`.
//!
//! Features are strictly lagged; the response at time `t` never sees any
//! observation at `t` or later.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MvklError, Result};
use crate::kernel::{self, GramSet, KernelDictionary, ScalarKernelSpec};
use crate::trainer::{self, Model, TrainConfig};
use crate::weights;

/// `N` named nodes with `d_i` columns each, observed at `T` time points.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    nodes: Vec<String>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
    values: DMatrix<f64>,
    times: Vec<String>,
}

impl TimeSeriesPanel {
    pub fn new(nodes: Vec<String>, dims: Vec<usize>, values: DMatrix<f64>, times: Vec<String>) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != dims.len() {
            return Err(MvklError::InvalidInput("panel needs one dimension per node and at least one node".into()));
        }
        if dims.contains(&0) {
            return Err(MvklError::InvalidInput("every node needs at least one column".into()));
        }
        let total: usize = dims.iter().sum();
        if values.ncols() != total {
            return Err(MvklError::dims("panel columns", total, values.ncols()));
        }
        if times.len() != values.nrows() {
            return Err(MvklError::dims("panel time index", values.nrows(), times.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MvklError::InvalidInput("panel contains missing or non-finite values".into()));
        }
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for d in &dims {
            offsets.push(acc);
            acc += d;
        }
        Ok(Self {
            nodes,
            dims,
            offsets,
            values,
            times,
        })
    }

    /// Panel with integer time stamps `0..T`.
    pub fn from_values(nodes: Vec<String>, dims: Vec<usize>, values: DMatrix<f64>) -> Result<Self> {
        let times = (0..values.nrows()).map(|t| t.to_string()).collect();
        Self::new(nodes, dims, values, times)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn times(&self) -> &[String] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// The `T x d_i` block of node `i`.
    pub fn node_values(&self, i: usize) -> DMatrix<f64> {
        self.values.columns(self.offsets[i], self.dims[i]).into_owned()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n == name)
    }

    /// Same panel with nodes reordered: node `k` of the result is node
    /// `order[k]` of `self`.
    pub fn permute_nodes(&self, order: &[usize]) -> Result<Self> {
        let nodes = order.iter().map(|&i| self.nodes[i].clone()).collect();
        let dims = order.iter().map(|&i| self.dims[i]).collect();
        let blocks: Vec<DMatrix<f64>> = order.iter().map(|&i| self.node_values(i)).collect();
        let total: usize = self.dims.iter().sum();
        let mut values = DMatrix::zeros(self.len(), total);
        let mut at = 0;
        for b in &blocks {
            values.columns_mut(at, b.ncols()).copy_from(b);
            at += b.ncols();
        }
        Self::new(nodes, dims, values, self.times.clone())
    }
}

/// Lagged design for one target node.
#[derive(Debug, Clone, PartialEq)]
pub struct LagDesign {
    pub lag: usize,
    pub target: usize,
    /// `(T - lag) x d_target` responses `x^target_t`, `t = lag..T`.
    pub y: DMatrix<f64>,
    /// Per node `j`, a `(T - lag) x (lag d_j)` block whose row for time `t`
    /// is `[x^j_{t-1}, x^j_{t-2}, .., x^j_{t-lag}]`.
    pub blocks: Vec<DMatrix<f64>>,
    /// Panel row index of each response.
    pub rows: Vec<usize>,
}

impl LagDesign {
    /// All blocks side by side, with the column range of each node.
    pub fn features(&self) -> (DMatrix<f64>, Vec<Vec<usize>>) {
        let total: usize = self.blocks.iter().map(|b| b.ncols()).sum();
        let mut x = DMatrix::zeros(self.y.nrows(), total);
        let mut ranges = Vec::with_capacity(self.blocks.len());
        let mut at = 0;
        for b in &self.blocks {
            x.columns_mut(at, b.ncols()).copy_from(b);
            ranges.push((at..at + b.ncols()).collect());
            at += b.ncols();
        }
        (x, ranges)
    }
}

/// Builds the strictly lagged design for node `target`.
pub fn lag_embed(panel: &TimeSeriesPanel, target: usize, lag: usize) -> Result<LagDesign> {
    if lag == 0 {
        return Err(MvklError::InvalidInput("lag must be at least 1".into()));
    }
    if target >= panel.nodes.len() {
        return Err(MvklError::InvalidInput(format!("target node {target} out of range")));
    }
    let t_len = panel.len();
    if t_len <= lag {
        return Err(MvklError::InsufficientData(format!(
            "{t_len} time points cannot support lag {lag}"
        )));
    }
    let rows: Vec<usize> = (lag..t_len).collect();
    let target_vals = panel.node_values(target);
    let y = DMatrix::from_fn(rows.len(), panel.dims[target], |r, c| target_vals[(rows[r], c)]);
    let blocks = (0..panel.nodes.len())
        .map(|j| {
            let vals = panel.node_values(j);
            let d = panel.dims[j];
            DMatrix::from_fn(rows.len(), lag * d, |r, c| {
                let (k, col) = (c / d, c % d);
                vals[(rows[r] - 1 - k, col)]
            })
        })
        .collect();
    Ok(LagDesign {
        lag,
        target,
        y,
        blocks,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    /// One Gaussian kernel per (node, bandwidth).
    Gaussian,
    /// One linear kernel per node.
    Linear,
    /// Both of the above.
    GaussianLinear,
}

/// Dictionary over a lagged design: for node `j` and bandwidth `s`, a
/// Gaussian kernel on node `j`'s block (`bandwidths[j]`), plus optionally a
/// linear kernel per node. Kernels are grouped by node name.
pub fn build_node_dictionary(
    nodes: &[String],
    ranges: &[Vec<usize>],
    bandwidths: &[Vec<f64>],
    kind: DictionaryKind,
) -> Result<KernelDictionary> {
    if ranges.len() != nodes.len() {
        return Err(MvklError::dims("node feature ranges", nodes.len(), ranges.len()));
    }
    let gaussian = matches!(kind, DictionaryKind::Gaussian | DictionaryKind::GaussianLinear);
    let linear = matches!(kind, DictionaryKind::Linear | DictionaryKind::GaussianLinear);
    if gaussian && (bandwidths.len() != nodes.len() || bandwidths.iter().any(Vec::is_empty)) {
        return Err(MvklError::InvalidSpec("Gaussian dictionary needs a nonempty bandwidth grid per node".into()));
    }
    let mut specs = Vec::new();
    let mut groups = Vec::new();
    for (j, name) in nodes.iter().enumerate() {
        if gaussian {
            for (s, &bw) in bandwidths[j].iter().enumerate() {
                specs.push(ScalarKernelSpec::gaussian(format!("{name}/g{s}"), bw, ranges[j].clone()));
                groups.push(name.clone());
            }
        }
        if linear {
            specs.push(ScalarKernelSpec::linear(format!("{name}/lin"), ranges[j].clone()));
            groups.push(name.clone());
        }
    }
    KernelDictionary::with_groups(specs, groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrangerConfig {
    pub lag: usize,
    pub dictionary: DictionaryKind,
    /// Gaussian bandwidths per node: `median * 2^e` for `bandwidth_count`
    /// exponents evenly spaced on `[-half_span, half_span]`.
    pub bandwidth_count: usize,
    pub half_span: f64,
    pub standardize: bool,
    /// Parallel node fits; `None` uses all cores.
    pub workers: Option<usize>,
}

impl Default for GrangerConfig {
    fn default() -> Self {
        Self {
            lag: 7,
            dictionary: DictionaryKind::Gaussian,
            bandwidth_count: 13,
            half_span: 6.0,
            standardize: false,
            workers: None,
        }
    }
}

/// Training defaults for causal inference: `lambda = 1e-3`, `p = 1`.
pub fn default_train_config() -> TrainConfig {
    TrainConfig {
        lambda: 1e-3,
        ..TrainConfig::default()
    }
}

/// One node's fitted model plus the centering applied before fitting.
#[derive(Debug, Clone)]
pub struct NodeFit {
    pub node: String,
    pub model: Model,
    pub y_mean: Vec<f64>,
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    /// Component norm of each kernel at the final fit.
    pub component_norms: Vec<f64>,
}

impl NodeFit {
    /// The learned output kernel `L^i`.
    pub fn output_kernel(&self) -> &DMatrix<f64> {
        self.model.output_kernel()
    }
}

fn center_columns(m: &DMatrix<f64>, scale: bool) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let rows = m.nrows() as f64;
    let mut out = m.clone();
    let mut means = Vec::with_capacity(m.ncols());
    let mut scales = Vec::with_capacity(m.ncols());
    for j in 0..m.ncols() {
        let mean = m.column(j).sum() / rows;
        let mut col = out.column_mut(j);
        col.add_scalar_mut(-mean);
        let mut s = 1.0;
        if scale {
            let sd = (col.norm_squared() / rows).sqrt();
            if sd > 0.0 {
                col /= sd;
                s = sd;
            }
        }
        means.push(mean);
        scales.push(s);
    }
    (out, means, scales)
}

/// Lag-embeds, centers, builds the node dictionary and fits node `target`.
pub fn fit_node(panel: &TimeSeriesPanel, target: usize, gcfg: &GrangerConfig, cfg: &TrainConfig) -> Result<NodeFit> {
    let design = lag_embed(panel, target, gcfg.lag)?;
    let (x_raw, ranges) = design.features();
    let (x, x_mean, x_scale) = center_columns(&x_raw, gcfg.standardize);
    let (y, y_mean, _) = center_columns(&design.y, false);
    let bandwidths: Vec<Vec<f64>> = ranges
        .iter()
        .map(|r| kernel::bandwidth_grid(kernel::median_pairwise_distance(&x, r), gcfg.bandwidth_count, gcfg.half_span))
        .collect();
    let dict = build_node_dictionary(panel.nodes(), &ranges, &bandwidths, gcfg.dictionary)?;
    let gs = GramSet::build(&dict, &x)?;
    let result = trainer::fit(&gs, &y, cfg, None)?;
    let component_norms = weights::component_norms(
        &result.state.coefficients,
        &gs,
        result.state.output_kernel.matrix(),
        &result.state.weights.eta,
    )?;
    Ok(NodeFit {
        node: panel.nodes()[target].clone(),
        model: Model::from_result(dict, x, result, cfg),
        y_mean,
        x_mean,
        x_scale,
        component_norms,
    })
}

/// Weighted causal graph: `weights[(i, j)]` is the influence of node `j`'s
/// history on node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalGraph {
    pub labels: Vec<String>,
    pub weights: DMatrix<f64>,
}

/// `G_ij = sum_s eta^i_{j,s}` over node `i`'s kernels grouped under node
/// `j`. Weights at or below `floor` and kernels whose component function is
/// identically zero contribute nothing.
pub fn causal_graph(labels: &[String], fits: &[NodeFit], floor: f64) -> Result<CausalGraph> {
    let n = labels.len();
    if fits.len() != n {
        return Err(MvklError::dims("causal graph node fits", n, fits.len()));
    }
    let mut g = DMatrix::zeros(n, n);
    for (i, fit) in fits.iter().enumerate() {
        if fit.node != labels[i] {
            return Err(MvklError::InvalidInput(format!(
                "fit {i} belongs to node `{}`, expected `{}`",
                fit.node, labels[i]
            )));
        }
        let dict = &fit.model.dictionary;
        for (k, &w) in fit.model.weights().iter().enumerate() {
            if w <= floor || fit.component_norms.get(k).is_some_and(|a| *a == 0.0) {
                continue;
            }
            let group = dict.group_of(k);
            let j = labels.iter().position(|l| l == group).ok_or_else(|| {
                MvklError::InvalidInput(format!("kernel group `{group}` of node `{}` is not a panel node", fit.node))
            })?;
            g[(i, j)] += w;
        }
    }
    Ok(CausalGraph {
        labels: labels.to_vec(),
        weights: g,
    })
}

#[derive(Debug, Clone)]
pub struct GrangerResult {
    pub graph: CausalGraph,
    pub fits: Vec<NodeFit>,
}

/// Fits every node (in parallel, `gcfg.workers` threads) and aggregates
/// the causal graph.
pub fn infer_graph(panel: &TimeSeriesPanel, gcfg: &GrangerConfig, cfg: &TrainConfig) -> Result<GrangerResult> {
    if panel.len() < gcfg.lag + 2 {
        return Err(MvklError::InsufficientData(format!(
            "{} time points; lag {} needs at least {}",
            panel.len(),
            gcfg.lag,
            gcfg.lag + 2
        )));
    }
    let run = || -> Result<Vec<NodeFit>> {
        (0..panel.nodes().len())
            .into_par_iter()
            .map(|i| fit_node(panel, i, gcfg, cfg).map_err(|e| e.with_context(format!("node `{}`", panel.nodes()[i]))))
            .collect()
    };
    let fits = match gcfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| MvklError::InvalidInput(format!("worker pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let graph = causal_graph(panel.nodes(), &fits, cfg.eta_smoothing)?;
    Ok(GrangerResult { graph, fits })
}

/// Area under the ROC curve of the off-diagonal scores of `graph` against
/// `truth` (`truth[(i, j)]` true when `j` drives `i`). Ties count one half.
/// `None` when the off-diagonal truth is all one class.
pub fn edge_auc(scores: &DMatrix<f64>, truth: &DMatrix<bool>) -> Option<f64> {
    let n = scores.nrows();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if truth[(i, j)] {
                pos.push(scores[(i, j)]);
            } else {
                neg.push(scores[(i, j)]);
            }
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut wins = 0.0;
    for p in &pos {
        for q in &neg {
            wins += if p > q {
                1.0
            } else if p == q {
                0.5
            } else {
                0.0
            };
        }
    }
    Some(wins / (pos.len() * neg.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    Linear,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarSpec {
    pub nodes: usize,
    pub dim: usize,
    pub len: usize,
    pub lag: usize,
    /// Probability of each off-diagonal edge; self-loops are always present.
    pub density: f64,
    pub nonlinearity: Nonlinearity,
    pub noise: f64,
    pub seed: u64,
}

/// Spectral radius the generator rescales its companion matrix to.
pub const SYNTHETIC_RADIUS: f64 = 0.9;

/// A simulated panel with its generating structure.
#[derive(Debug, Clone)]
pub struct SyntheticVar {
    pub panel: TimeSeriesPanel,
    /// `adjacency[(i, j)]`: node `j`'s past enters node `i`'s equation.
    pub adjacency: DMatrix<bool>,
    /// Lag matrices `A_1..A_lag`, each `(N d) x (N d)`.
    pub coefficients: Vec<DMatrix<f64>>,
}

impl SyntheticVar {
    /// Companion matrix of the (linearized) recursion.
    pub fn companion(&self) -> DMatrix<f64> {
        companion(&self.coefficients)
    }
}

fn companion(coefs: &[DMatrix<f64>]) -> DMatrix<f64> {
    let k = coefs[0].nrows();
    let p = coefs.len();
    let mut c = DMatrix::zeros(k * p, k * p);
    for (lag, a) in coefs.iter().enumerate() {
        c.view_mut((0, lag * k), (k, k)).copy_from(a);
    }
    for b in 1..p {
        c.view_mut((b * k, (b - 1) * k), (k, k)).fill_with_identity();
    }
    c
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Simulates `x_t = sum_k A_k phi(x_{t-k}) + noise * e_t` with sparse node
/// couplings. Coefficients of each present edge are `+-U(0.5, 1)`, then
/// lag `k` is scaled by `c^k` so that the companion matrix has spectral
/// radius [`SYNTHETIC_RADIUS`]. With positive noise the first 100 steps
/// are discarded as burn-in.
pub fn generate_synthetic_var(spec: &VarSpec) -> Result<SyntheticVar> {
    if spec.nodes == 0 || spec.dim == 0 || spec.lag == 0 {
        return Err(MvklError::InvalidInput("nodes, dim and lag must be positive".into()));
    }
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(MvklError::InvalidInput(format!("density must lie in [0, 1], got {}", spec.density)));
    }
    if spec.len < spec.lag + 2 {
        return Err(MvklError::InsufficientData(format!(
            "length {} too short for lag {}",
            spec.len, spec.lag
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, d) = (spec.nodes, spec.dim);
    let k = n * d;
    let adjacency = DMatrix::from_fn(n, n, |i, j| i == j || rng.random::<f64>() < spec.density);
    let mut coefficients: Vec<DMatrix<f64>> = (0..spec.lag)
        .map(|_| {
            DMatrix::from_fn(k, k, |r, c| {
                if adjacency[(r / d, c / d)] {
                    let mag = rng.random_range(0.5..1.0);
                    if rng.random::<bool>() {
                        mag
                    } else {
                        -mag
                    }
                } else {
                    0.0
                }
            })
        })
        .collect();
    let rho = spectral_radius(&companion(&coefficients));
    if rho > 0.0 {
        let c = SYNTHETIC_RADIUS / rho;
        for (lag, a) in coefficients.iter_mut().enumerate() {
            *a *= c.powi(lag as i32 + 1);
        }
    }

    let burn_in = if spec.noise > 0.0 { 100 } else { 0 };
    let total = spec.len + burn_in;
    let mut x = DMatrix::zeros(total, k);
    for t in 0..spec.lag.min(total) {
        for c in 0..k {
            x[(t, c)] = StandardNormal.sample(&mut rng);
        }
    }
    let phi = |v: f64| match spec.nonlinearity {
        Nonlinearity::Linear => v,
        Nonlinearity::Tanh => v.tanh(),
    };
    for t in spec.lag..total {
        for r in 0..k {
            let mut acc = 0.0;
            for (lag, a) in coefficients.iter().enumerate() {
                let prev = t - 1 - lag;
                for c in 0..k {
                    let w = a[(r, c)];
                    if w != 0.0 {
                        acc += w * phi(x[(prev, c)]);
                    }
                }
            }
            let e: f64 = StandardNormal.sample(&mut rng);
            x[(t, r)] = acc + spec.noise * e;
        }
    }
    let values = x.rows(burn_in, spec.len).into_owned();
    let nodes = (0..n).map(|i| format!("n{i}")).collect();
    let panel = TimeSeriesPanel::from_values(nodes, vec![d; n], values)?;
    Ok(SyntheticVar {
        panel,
        adjacency,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn panel_from(values: DMatrix<f64>, dims: Vec<usize>) -> TimeSeriesPanel {
        let nodes = (0..dims.len()).map(|i| format!("n{i}")).collect();
        TimeSeriesPanel::from_values(nodes, dims, values).unwrap()
    }

    #[test]
    fn lag_one_three_points() {
        let p = panel_from(DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]), vec![1]);
        let d = lag_embed(&p, 0, 1).unwrap();
        assert_eq!(d.y.nrows(), 2);
        assert_eq!(d.y[(0, 0)], 2.0);
        assert_eq!(d.blocks[0][(0, 0)], 1.0);
        assert_eq!(d.rows, vec![1, 2]);
    }

    #[test]
    fn constant_series_gives_constant_design() {
        let p = panel_from(DMatrix::from_element(6, 2, 4.0), vec![1, 1]);
        let d = lag_embed(&p, 1, 2).unwrap();
        assert!(d.y.iter().all(|v| *v == 4.0));
        assert!(d.blocks.iter().all(|b| b.iter().all(|v| *v == 4.0)));
    }

    #[test]
    fn hand_built_two_node_panel() {
        // node 0: t, node 1: 100 + t
        let vals = DMatrix::from_fn(10, 2, |t, c| if c == 0 { t as f64 } else { 100.0 + t as f64 });
        let p = panel_from(vals, vec![1, 1]);
        let d = lag_embed(&p, 1, 2).unwrap();
        assert_eq!(d.y.nrows(), 8);
        for r in 0..8 {
            let t = r + 2;
            assert_eq!(d.y[(r, 0)], 100.0 + t as f64);
            assert_eq!(d.blocks[0][(r, 0)], (t - 1) as f64);
            assert_eq!(d.blocks[0][(r, 1)], (t - 2) as f64);
            assert_eq!(d.blocks[1][(r, 0)], 100.0 + (t - 1) as f64);
            assert_eq!(d.blocks[1][(r, 1)], 100.0 + (t - 2) as f64);
        }
    }

    #[test]
    fn insufficient_data() {
        let p = panel_from(DMatrix::zeros(3, 1), vec![1]);
        assert!(matches!(lag_embed(&p, 0, 3), Err(MvklError::InsufficientData(_))));
        assert!(lag_embed(&p, 0, 0).is_err());
    }

    #[test]
    fn dictionary_sizes_and_groups() {
        let nodes: Vec<String> = (0..3).map(|i| format!("n{i}")).collect();
        let ranges = vec![vec![0], vec![1], vec![2]];
        let grid = vec![kernel::bandwidth_grid(1.0, 13, 6.0); 3];
        let dict = build_node_dictionary(&nodes, &ranges, &grid, DictionaryKind::Gaussian).unwrap();
        assert_eq!(dict.len(), 39);
        let mut covered = [false; 39];
        for name in &nodes {
            let members = dict.members(name);
            assert_eq!(members.len(), 13);
            for k in members {
                assert!(!covered[k]);
                covered[k] = true;
            }
        }
        assert!(covered.iter().all(|c| *c));
        let lin = build_node_dictionary(&nodes, &ranges, &[], DictionaryKind::Linear).unwrap();
        assert_eq!(lin.len(), 3);
        assert!(build_node_dictionary(&nodes, &ranges, &[vec![], vec![], vec![]], DictionaryKind::Gaussian).is_err());
    }

    #[test]
    fn graph_aggregation_rules() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let dict = KernelDictionary::with_groups(
            vec![
                ScalarKernelSpec::linear("a/lin", vec![0]),
                ScalarKernelSpec::linear("b/lin", vec![1]),
            ],
            labels.clone(),
        )
        .unwrap();
        let mk = |node: &str, eta: Vec<f64>| {
            let state = trainer::FitState {
                weights: weights::WeightVector {
                    eta,
                    penalty: weights::Penalty::Lp { p: 1.0 },
                },
                coefficients: DMatrix::from_element(3, 1, 1.0),
                output_kernel: crate::spectahedron::OutputKernel::scaled_identity(1, 1.0).unwrap(),
            };
            NodeFit {
                node: node.into(),
                model: Model {
                    dictionary: dict.clone(),
                    x_train: DMatrix::zeros(3, 2),
                    state,
                    config: TrainConfig::default(),
                    trace: vec![],
                },
                y_mean: vec![0.0],
                x_mean: vec![0.0; 2],
                x_scale: vec![1.0; 2],
                component_norms: vec![1.0, 1.0],
            }
        };
        let fits = vec![mk("a", vec![1e-8, 1.0]), mk("b", vec![1e-8, 1e-8])];
        let g = causal_graph(&labels, &fits, 1e-8).unwrap();
        assert_eq!(g.weights, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let swapped = vec![fits[1].clone(), fits[0].clone()];
        assert!(causal_graph(&labels, &swapped, 1e-8).is_err());
    }

    #[test]
    fn generator_diagonal_only_at_zero_density() {
        let spec = VarSpec {
            nodes: 4,
            dim: 1,
            len: 50,
            lag: 2,
            density: 0.0,
            nonlinearity: Nonlinearity::Linear,
            noise: 0.1,
            seed: 3,
        };
        let s = generate_synthetic_var(&spec).unwrap();
        assert_eq!(s.adjacency, DMatrix::from_fn(4, 4, |i, j| i == j));
    }

    #[test]
    fn noiseless_generator_follows_recursion() {
        let spec = VarSpec {
            nodes: 3,
            dim: 2,
            len: 40,
            lag: 2,
            density: 0.5,
            nonlinearity: Nonlinearity::Linear,
            noise: 0.0,
            seed: 9,
        };
        let s = generate_synthetic_var(&spec).unwrap();
        let x = s.panel.values();
        for t in 2..40 {
            let want = &s.coefficients[0] * x.row(t - 1).transpose() + &s.coefficients[1] * x.row(t - 2).transpose();
            assert_relative_eq!(x.row(t).transpose(), want, epsilon = 1e-12);
        }
        assert!(spectral_radius(&s.companion()) <= 0.95);
        let again = generate_synthetic_var(&spec).unwrap();
        assert_eq!(again.panel, s.panel);
    }

    #[test]
    fn auc_counts_ties_half() {
        let truth = DMatrix::from_row_slice(2, 2, &[true, true, false, true]);
        let scores = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]);
        assert_eq!(edge_auc(&scores, &truth), Some(0.5));
        let better = DMatrix::from_row_slice(2, 2, &[0.0, 0.7, 0.1, 0.0]);
        assert_eq!(edge_auc(&better, &truth), Some(1.0));
        assert_eq!(edge_auc(&better, &DMatrix::from_element(2, 2, true)), None);
    }
}
