//! End-to-end workflows over panels: regression fit and predict, Granger
//! graphs and benchmark traces. The CLI is a thin layer over these.

use nalgebra::DMatrix;

use crate::bench::{self, TestSet};
use crate::error::{MvklError, Result};
use crate::granger::{self, DictionaryKind, GrangerResult, NodeFit, TimeSeriesPanel};
use crate::io::{BenchRow, DictionarySection, Grouping, ModelFile, Preprocessing, RunConfig};
use crate::kernel::{self, GramSet, KernelDictionary, ScalarKernelSpec};
use crate::trainer::{self, Model};

fn node_indices(panel: &TimeSeriesPanel, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            panel
                .node_index(n)
                .ok_or_else(|| MvklError::InvalidInput(format!("panel has no node `{n}`")))
        })
        .collect()
}

fn gather(panel: &TimeSeriesPanel, idx: &[usize]) -> DMatrix<f64> {
    let blocks: Vec<DMatrix<f64>> = idx.iter().map(|&i| panel.node_values(i)).collect();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(panel.len(), cols);
    let mut at = 0;
    for b in &blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}

/// Column means and (optionally) standard deviations of `m`.
fn column_stats(m: &DMatrix<f64>, scale: bool) -> (Vec<f64>, Vec<f64>) {
    let rows = m.nrows() as f64;
    let mean: Vec<f64> = m.column_iter().map(|c| c.sum() / rows).collect();
    let sd = m
        .column_iter()
        .zip(&mean)
        .map(|(c, mu)| {
            let s = (c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / rows).sqrt();
            if scale && s > 0.0 {
                s
            } else {
                1.0
            }
        })
        .collect();
    (mean, sd)
}

fn normalize(m: &DMatrix<f64>, mean: &[f64], scale: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |r, c| (m[(r, c)] - mean[c]) / scale[c])
}

fn uncenter(m: &mut DMatrix<f64>, mean: &[f64]) {
    for (c, mu) in mean.iter().enumerate() {
        m.column_mut(c).add_scalar_mut(*mu);
    }
}

/// Builds the regression dictionary over normalized inputs. `groups` lists
/// each input node with its column indices.
pub fn regression_dictionary(
    x: &DMatrix<f64>,
    groups: &[(String, Vec<usize>)],
    sec: &DictionarySection,
    seed: u64,
) -> Result<KernelDictionary> {
    let all: Vec<usize> = (0..x.ncols()).collect();
    let sets: Vec<(String, Vec<usize>)> = match sec.grouping {
        Grouping::Joint => vec![("all".to_string(), all)],
        Grouping::PerNode => groups.to_vec(),
    };
    let gaussian = matches!(sec.kind, DictionaryKind::Gaussian | DictionaryKind::GaussianLinear);
    let linear = matches!(sec.kind, DictionaryKind::Linear | DictionaryKind::GaussianLinear);
    let mut specs = Vec::new();
    let mut labels = Vec::new();
    for (g, (name, cols)) in sets.iter().enumerate() {
        if gaussian {
            let grid = if sec.bandwidths.is_empty() {
                kernel::bandwidth_grid(kernel::median_pairwise_distance(x, cols), sec.bandwidth_count, sec.half_span)
            } else {
                sec.bandwidths.clone()
            };
            for (s, bw) in grid.into_iter().enumerate() {
                let id = format!("{name}/g{s}");
                specs.push(match sec.fourier_dim {
                    Some(dim) => ScalarKernelSpec::fourier(id, bw, cols.clone(), dim, seed.wrapping_add((g * 1000 + s) as u64)),
                    None => ScalarKernelSpec::gaussian(id, bw, cols.clone()),
                });
                labels.push(name.clone());
            }
        }
        if linear {
            specs.push(ScalarKernelSpec::linear(format!("{name}/lin"), cols.clone()));
            labels.push(name.clone());
        }
    }
    KernelDictionary::with_groups(specs, labels)
}

struct Regression {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    prep: Preprocessing,
    groups: Vec<(String, Vec<usize>)>,
}

/// Splits the panel into inputs and outputs as the data section describes
/// and normalizes both with statistics of the first `train_rows` rows.
fn regression_setup(panel: &TimeSeriesPanel, cfg: &RunConfig, train_rows: usize) -> Result<Regression> {
    let data = &cfg.data;
    if data.outputs.is_empty() {
        return Err(MvklError::Config {
            key: "data.outputs".into(),
            msg: "name at least one output node".into(),
        });
    }
    let out_idx = node_indices(panel, &data.outputs)?;
    let inputs: Vec<String> = if data.inputs.is_empty() {
        panel.nodes().iter().filter(|n| !data.outputs.contains(n)).cloned().collect()
    } else {
        data.inputs.clone()
    };
    if inputs.is_empty() {
        return Err(MvklError::InvalidInput("no input nodes left after removing outputs".into()));
    }
    let in_idx = node_indices(panel, &inputs)?;
    let x_raw = gather(panel, &in_idx);
    let y_raw = gather(panel, &out_idx);
    let (x_mean, x_scale) = column_stats(&x_raw.rows(0, train_rows).into_owned(), data.standardize);
    let (y_mean, _) = column_stats(&y_raw.rows(0, train_rows).into_owned(), false);
    let mut groups = Vec::new();
    let mut at = 0;
    for &i in &in_idx {
        let d = panel.dims()[i];
        groups.push((panel.nodes()[i].clone(), (at..at + d).collect()));
        at += d;
    }
    let prep = Preprocessing {
        input_nodes: inputs,
        input_dims: in_idx.iter().map(|&i| panel.dims()[i]).collect(),
        output_nodes: data.outputs.clone(),
        output_dims: out_idx.iter().map(|&i| panel.dims()[i]).collect(),
        lag: 0,
        x_mean: x_mean.clone(),
        x_scale: x_scale.clone(),
        y_mean: y_mean.clone(),
    };
    Ok(Regression {
        x: normalize(&x_raw, &x_mean, &x_scale),
        y: normalize(&y_raw, &y_mean, &vec![1.0; y_mean.len()]),
        prep,
        groups,
    })
}

/// Fits a regression model on the whole panel.
pub fn fit_panel(panel: &TimeSeriesPanel, cfg: &RunConfig) -> Result<ModelFile> {
    let train = cfg.train.to_config()?;
    let reg = regression_setup(panel, cfg, panel.len())?;
    let dict = regression_dictionary(&reg.x, &reg.groups, &cfg.dictionary, train.seed)?;
    let model = Model::fit(dict, reg.x, &reg.y, &train)?;
    Ok(ModelFile::new(reg.prep, model))
}

/// Predictions with the time label of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub times: Vec<String>,
    pub values: DMatrix<f64>,
}

fn check_nodes(panel: &TimeSeriesPanel, names: &[String], dims: &[usize]) -> Result<Vec<usize>> {
    let idx = node_indices(panel, names)?;
    for (k, &i) in idx.iter().enumerate() {
        if panel.dims()[i] != dims[k] {
            return Err(MvklError::dims("node columns", dims[k], panel.dims()[i]));
        }
    }
    Ok(idx)
}

/// Applies a saved model to a panel. Lagged models predict one step ahead
/// from row `lag` on.
pub fn predict_panel(file: &ModelFile, panel: &TimeSeriesPanel) -> Result<Prediction> {
    let p = &file.preprocessing;
    let in_idx = check_nodes(panel, &p.input_nodes, &p.input_dims)?;
    let (x_raw, times) = if p.lag == 0 {
        (gather(panel, &in_idx), panel.times().to_vec())
    } else {
        let sub = panel.permute_nodes(&in_idx)?;
        let target = p
            .output_nodes
            .first()
            .and_then(|n| sub.node_index(n))
            .ok_or_else(|| MvklError::Format("lagged model must predict one of its input nodes".into()))?;
        let design = granger::lag_embed(&sub, target, p.lag)?;
        let times = design.rows.iter().map(|&r| panel.times()[r].clone()).collect();
        (design.features().0, times)
    };
    if x_raw.ncols() != p.x_mean.len() {
        return Err(MvklError::dims("model inputs", p.x_mean.len(), x_raw.ncols()));
    }
    let mut values = file.model.predict(&normalize(&x_raw, &p.x_mean, &p.x_scale))?;
    uncenter(&mut values, &p.y_mean);
    Ok(Prediction { times, values })
}

fn node_model_file(panel: &TimeSeriesPanel, lag: usize, fit: &NodeFit) -> ModelFile {
    let prep = Preprocessing {
        input_nodes: panel.nodes().to_vec(),
        input_dims: panel.dims().to_vec(),
        output_nodes: vec![fit.node.clone()],
        output_dims: vec![fit.y_mean.len()],
        lag,
        x_mean: fit.x_mean.clone(),
        x_scale: fit.x_scale.clone(),
        y_mean: fit.y_mean.clone(),
    };
    ModelFile::new(prep, fit.model.clone())
}

/// Granger graph of a panel plus a model file per node. `workers`
/// overrides the configured worker count.
pub fn granger_panel(
    panel: &TimeSeriesPanel,
    cfg: &RunConfig,
    workers: Option<usize>,
) -> Result<(GrangerResult, Vec<ModelFile>)> {
    let train = cfg.train.to_config()?;
    let mut gcfg = cfg.granger.clone();
    if workers.is_some() {
        gcfg.workers = workers;
    }
    let result = granger::infer_graph(panel, &gcfg, &train)?;
    let files = result.fits.iter().map(|f| node_model_file(panel, gcfg.lag, f)).collect();
    Ok((result, files))
}

/// Benchmark trace: trains on the leading rows, tests on the trailing
/// `test_fraction` of the panel, for every `cg_eps x sdp_iter` variant.
pub fn bench_panel(panel: &TimeSeriesPanel, cfg: &RunConfig) -> Result<Vec<BenchRow>> {
    let train = cfg.train.to_config()?;
    let total = panel.len();
    let n_test = (total as f64 * cfg.data.test_fraction).floor() as usize;
    let n_train = total - n_test;
    if n_train < 2 {
        return Err(MvklError::InsufficientData(format!("{n_train} training rows")));
    }
    let reg = regression_setup(panel, cfg, n_train)?;
    let x_train = reg.x.rows(0, n_train).into_owned();
    let y_train = reg.y.rows(0, n_train).into_owned();
    let dict = regression_dictionary(&x_train, &reg.groups, &cfg.dictionary, train.seed)?;
    let gs = GramSet::build(&dict, &x_train)?;
    let variants = bench::variant_grid(&cfg.bench.cg_eps, &cfg.bench.sdp_iter);
    if n_test == 0 {
        return bench::run_bench(&gs, &y_train, None, &train, &variants);
    }
    let x_test = reg.x.rows(n_train, n_test).into_owned();
    let y_test = reg.y.rows(n_train, n_test).into_owned();
    let cross = kernel::cross_grams(&dict, &x_train, &x_test)?;
    let test = TestSet {
        cross: &cross,
        y: &y_test,
    };
    bench::run_bench(&gs, &y_train, Some(&test), &train, &variants)
}

/// RMSE of in-sample predictions against the panel's output columns.
pub fn training_rmse(file: &ModelFile, panel: &TimeSeriesPanel, pred: &Prediction) -> Result<trainer::Rmse> {
    let p = &file.preprocessing;
    let out_idx = check_nodes(panel, &p.output_nodes, &p.output_dims)?;
    let y = gather(panel, &out_idx);
    let y = y.rows(y.nrows() - pred.values.nrows(), pred.values.nrows()).into_owned();
    trainer::rmse(&pred.values, &y)
}
