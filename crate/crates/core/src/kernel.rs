//! Scalar kernel dictionaries and their Gram matrices.
//!
//! A dictionary holds `m` scalar kernels `k_1..k_m`. Training works with the
//! weighted sum `K_eta = sum_j eta_j K_j`, which is never formed explicitly:
//! [`GramSet::weighted_apply`] computes `K_eta M` kernel by kernel, and
//! factorized kernels (`K_j = Z_j Z_j^T`, e.g. random Fourier features) are
//! applied as `Z_j (Z_j^T M)`.
//!
//! The Gaussian kernel is `k(x, z) = exp(-|x - z|^2 / (2 bandwidth^2))`,
//! evaluated on the columns selected by its feature subset. An empty subset
//! selects every column.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MvklError, Result};
use crate::linalg;

/// Relative tolerance used when validating precomputed Gram matrices.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KernelKind {
    Gaussian {
        bandwidth: f64,
        #[serde(default)]
        features: Vec<usize>,
    },
    Linear {
        #[serde(default)]
        features: Vec<usize>,
    },
    /// Fixed `l x l` Gram matrix over the training sample.
    Precomputed { gram: DMatrix<f64> },
    /// Explicit factor `Z` with `K = Z Z^T` over the training sample.
    Factorized { factor: DMatrix<f64> },
    /// Gaussian kernel approximated with `dim` random Fourier features; see
    /// [`rff_factor`] for the exact feature map. Kept as a factor in training
    /// and regenerated from `seed` for prediction.
    FourierFeatures {
        bandwidth: f64,
        #[serde(default)]
        features: Vec<usize>,
        dim: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarKernelSpec {
    pub id: String,
    pub kind: KernelKind,
}

impl ScalarKernelSpec {
    pub fn gaussian(id: impl Into<String>, bandwidth: f64, features: Vec<usize>) -> Self {
        Self {
            id: id.into(),
            kind: KernelKind::Gaussian { bandwidth, features },
        }
    }

    pub fn linear(id: impl Into<String>, features: Vec<usize>) -> Self {
        Self {
            id: id.into(),
            kind: KernelKind::Linear { features },
        }
    }

    pub fn precomputed(id: impl Into<String>, gram: DMatrix<f64>) -> Self {
        Self {
            id: id.into(),
            kind: KernelKind::Precomputed { gram },
        }
    }

    pub fn factorized(id: impl Into<String>, factor: DMatrix<f64>) -> Self {
        Self {
            id: id.into(),
            kind: KernelKind::Factorized { factor },
        }
    }

    pub fn fourier(id: impl Into<String>, bandwidth: f64, features: Vec<usize>, dim: usize, seed: u64) -> Self {
        Self {
            id: id.into(),
            kind: KernelKind::FourierFeatures {
                bandwidth,
                features,
                dim,
                seed,
            },
        }
    }

    /// Checks the spec against an input dimension `d` and sample count `l`.
    pub fn validate(&self, d: usize, l: usize) -> Result<()> {
        let check_features = |features: &[usize]| -> Result<()> {
            if let Some(&bad) = features.iter().find(|&&f| f >= d) {
                return Err(MvklError::InvalidSpec(format!(
                    "kernel `{}`: feature index {bad} out of range for input dimension {d}",
                    self.id
                )));
            }
            Ok(())
        };
        let check_bandwidth = |bw: f64| -> Result<()> {
            if !(bw > 0.0 && bw.is_finite()) {
                return Err(MvklError::InvalidSpec(format!(
                    "kernel `{}`: bandwidth must be positive, got {bw}",
                    self.id
                )));
            }
            Ok(())
        };
        match &self.kind {
            KernelKind::Gaussian { bandwidth, features } => {
                check_bandwidth(*bandwidth)?;
                check_features(features)
            }
            KernelKind::Linear { features } => check_features(features),
            KernelKind::FourierFeatures {
                bandwidth,
                features,
                dim,
                ..
            } => {
                check_bandwidth(*bandwidth)?;
                if *dim == 0 {
                    return Err(MvklError::InvalidSpec(format!(
                        "kernel `{}`: feature count must be at least 1",
                        self.id
                    )));
                }
                check_features(features)
            }
            KernelKind::Precomputed { gram } => {
                if gram.nrows() != l || gram.ncols() != l {
                    return Err(MvklError::InvalidSpec(format!(
                        "kernel `{}`: precomputed Gram is {}x{}, sample count is {l}",
                        self.id,
                        gram.nrows(),
                        gram.ncols()
                    )));
                }
                validate_psd(gram, &self.id)
            }
            KernelKind::Factorized { factor } => {
                if factor.nrows() != l {
                    return Err(MvklError::InvalidSpec(format!(
                        "kernel `{}`: factor has {} rows, sample count is {l}",
                        self.id,
                        factor.nrows()
                    )));
                }
                Ok(())
            }
        }
    }
}

fn validate_psd(gram: &DMatrix<f64>, id: &str) -> Result<()> {
    if linalg::asymmetry(gram) > PSD_TOLERANCE * linalg::max_abs(gram).max(1.0) {
        return Err(MvklError::InvalidSpec(format!("kernel `{id}`: precomputed Gram is not symmetric")));
    }
    let eig = linalg::sym_eigen(gram);
    let top = eig.eigenvalues.max().max(1.0);
    let low = eig.eigenvalues.min();
    if low < -PSD_TOLERANCE * top {
        return Err(MvklError::InvalidSpec(format!(
            "kernel `{id}`: precomputed Gram is not PSD (min eigenvalue {low:.3e})"
        )));
    }
    Ok(())
}

/// Ordered set of scalar kernels plus the source group each one belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDictionary {
    specs: Vec<ScalarKernelSpec>,
    groups: Vec<String>,
}

impl KernelDictionary {
    /// Every kernel in its own group named after its id.
    pub fn new(specs: Vec<ScalarKernelSpec>) -> Result<Self> {
        let groups = specs.iter().map(|s| s.id.clone()).collect();
        Self::with_groups(specs, groups)
    }

    pub fn with_groups(specs: Vec<ScalarKernelSpec>, groups: Vec<String>) -> Result<Self> {
        if specs.is_empty() {
            return Err(MvklError::InvalidSpec("dictionary must hold at least one kernel".into()));
        }
        if groups.len() != specs.len() {
            return Err(MvklError::dims("dictionary groups", specs.len(), groups.len()));
        }
        let mut seen = HashMap::new();
        for (i, s) in specs.iter().enumerate() {
            if let Some(prev) = seen.insert(s.id.as_str(), i) {
                return Err(MvklError::InvalidSpec(format!(
                    "duplicate kernel id `{}` at positions {prev} and {i}",
                    s.id
                )));
            }
        }
        Ok(Self { specs, groups })
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn specs(&self) -> &[ScalarKernelSpec] {
        &self.specs
    }

    pub fn group_of(&self, kernel: usize) -> &str {
        &self.groups[kernel]
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    /// Indices of the kernels belonging to `group`.
    pub fn members(&self, group: &str) -> Vec<usize> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, g)| g.as_str() == group)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Gram matrix of one kernel: dense, or a factor `Z` with `K = Z Z^T`.
#[derive(Debug, Clone, PartialEq)]
pub enum GramRep {
    Dense(DMatrix<f64>),
    Factor(DMatrix<f64>),
}

impl GramRep {
    pub fn nrows(&self) -> usize {
        match self {
            GramRep::Dense(k) => k.nrows(),
            GramRep::Factor(z) => z.nrows(),
        }
    }

    /// `K M`.
    pub fn apply(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            GramRep::Dense(k) => k * m,
            GramRep::Factor(z) => z * (z.transpose() * m),
        }
    }

    /// Explicit `l x l` matrix; forms `Z Z^T` for factors.
    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            GramRep::Dense(k) => k.clone(),
            GramRep::Factor(z) => z * z.transpose(),
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            GramRep::Dense(k) => k.trace(),
            GramRep::Factor(z) => z.iter().map(|v| v * v).sum(),
        }
    }

    pub fn max_diagonal(&self) -> f64 {
        match self {
            GramRep::Dense(k) => k.diagonal().max(),
            GramRep::Factor(z) => z.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max),
        }
    }

    /// `sigma_1(K)` by power iteration.
    pub fn top_eigenvalue(&self) -> f64 {
        let n = self.nrows();
        match self {
            GramRep::Dense(k) => linalg::power_top_eigenvalue(n, 1e-9, 5000, |v| k * v),
            GramRep::Factor(z) => {
                // sigma_1(Z Z^T) = sigma_1(Z^T Z); iterate on the smaller side.
                if z.ncols() < n {
                    let gram = z.transpose() * z;
                    linalg::power_top_eigenvalue(z.ncols(), 1e-9, 5000, |v| &gram * v)
                } else {
                    linalg::power_top_eigenvalue(n, 1e-9, 5000, |v| z * (z.transpose() * v))
                }
            }
        }
    }
}

/// Gram representations of a whole dictionary on one training sample.
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct GramSet {
    mats: Vec<GramRep>,
    l: usize,
    top_eig: Vec<f64>,
}

impl GramSet {
    /// Assembles a set from existing representations; computes `sigma_1`
    /// of each.
    pub fn from_reps(mats: Vec<GramRep>) -> Result<Self> {
        let Some(first) = mats.first() else {
            return Err(MvklError::InvalidSpec("Gram set must hold at least one kernel".into()));
        };
        let l = first.nrows();
        for rep in &mats {
            if rep.nrows() != l {
                return Err(MvklError::dims("Gram set", l, rep.nrows()));
            }
            if let GramRep::Dense(k) = rep {
                if k.ncols() != l {
                    return Err(MvklError::dims("Gram set (square)", l, k.ncols()));
                }
            }
        }
        let top_eig = mats.par_iter().map(GramRep::top_eigenvalue).collect();
        Ok(Self { mats, l, top_eig })
    }

    pub fn from_dense(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        Self::from_reps(mats.into_iter().map(GramRep::Dense).collect())
    }

    /// Evaluates every kernel of `dict` on the rows of `x`. Gaussian kernels
    /// sharing a feature subset share one squared-distance matrix.
    pub fn build(dict: &KernelDictionary, x: &DMatrix<f64>) -> Result<Self> {
        let (l, d) = x.shape();
        if l == 0 {
            return Err(MvklError::InvalidInput("input matrix has no rows".into()));
        }
        for spec in dict.specs() {
            spec.validate(d, l)?;
        }
        let mut subsets: Vec<&[usize]> = Vec::new();
        for spec in dict.specs() {
            if let KernelKind::Gaussian { features, .. } = &spec.kind {
                if !subsets.contains(&features.as_slice()) {
                    subsets.push(features);
                }
            }
        }
        let distances: Vec<DMatrix<f64>> = subsets.par_iter().map(|f| squared_distances(x, x, f)).collect();
        let mats = dict
            .specs()
            .par_iter()
            .map(|spec| match &spec.kind {
                KernelKind::Gaussian { bandwidth, features } => {
                    let idx = subsets.iter().position(|s| *s == features.as_slice()).expect("subset cached");
                    Ok(GramRep::Dense(gaussian_from_distances(&distances[idx], *bandwidth)))
                }
                _ => gram(spec, x),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_reps(mats)
    }

    pub fn len(&self) -> usize {
        self.mats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mats.is_empty()
    }

    /// Sample count `l`.
    pub fn samples(&self) -> usize {
        self.l
    }

    pub fn mats(&self) -> &[GramRep] {
        &self.mats
    }

    pub fn top_eigenvalues(&self) -> &[f64] {
        &self.top_eig
    }

    /// `sigma*_1 = max_j sigma_1(K_j)`.
    pub fn max_top_eigenvalue(&self) -> f64 {
        self.top_eig.iter().copied().fold(0.0, f64::max)
    }

    /// `kappa = max_j max_i K_j(x_i, x_i)`.
    pub fn max_diagonal(&self) -> f64 {
        self.mats.iter().map(GramRep::max_diagonal).fold(0.0, f64::max)
    }

    fn check_weights(&self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.mats.len() {
            return Err(MvklError::dims("kernel weights", self.mats.len(), eta.len()));
        }
        if let Some(bad) = eta.iter().find(|w| !(**w >= 0.0)) {
            return Err(MvklError::InvalidInput(format!("kernel weights must be nonnegative, got {bad}")));
        }
        Ok(())
    }

    /// `(sum_j eta_j K_j) M` without forming the weighted sum.
    pub fn weighted_apply(&self, eta: &[f64], m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_weights(eta)?;
        if m.nrows() != self.l {
            return Err(MvklError::dims("weighted_apply operand rows", self.l, m.nrows()));
        }
        let mut out = DMatrix::zeros(self.l, m.ncols());
        for (rep, &w) in self.mats.iter().zip(eta) {
            if w == 0.0 {
                continue;
            }
            out += rep.apply(m) * w;
        }
        Ok(out)
    }

    /// `K_eta` as a reusable operator. Dense Grams are summed once when more
    /// than one carries weight; factor-backed sets stay lazy.
    pub fn weighted_operator<'a>(&'a self, eta: &'a [f64]) -> Result<WeightedGram<'a>> {
        self.check_weights(eta)?;
        let active = || self.mats.iter().zip(eta).filter(|(_, w)| **w != 0.0);
        if active().count() > 1 && active().all(|(r, _)| matches!(r, GramRep::Dense(_))) {
            let mut k = DMatrix::zeros(self.l, self.l);
            for (rep, &w) in active() {
                if let GramRep::Dense(g) = rep {
                    k += g * w;
                }
            }
            return Ok(WeightedGram::Summed(k));
        }
        Ok(WeightedGram::Lazy { gs: self, eta })
    }

    /// Explicit `K_eta`. Opt-in: this is the only place factors get expanded.
    pub fn materialize(&self, eta: &[f64]) -> Result<DMatrix<f64>> {
        self.check_weights(eta)?;
        let mut out = DMatrix::zeros(self.l, self.l);
        for (rep, &w) in self.mats.iter().zip(eta) {
            if w != 0.0 {
                out += rep.to_dense() * w;
            }
        }
        Ok(out)
    }
}

/// `K_eta` prepared for repeated products.
#[derive(Debug)]
pub enum WeightedGram<'a> {
    Summed(DMatrix<f64>),
    Lazy { gs: &'a GramSet, eta: &'a [f64] },
}

impl WeightedGram<'_> {
    pub fn apply(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            WeightedGram::Summed(k) => {
                if m.nrows() != k.ncols() {
                    return Err(MvklError::dims("weighted_apply operand rows", k.ncols(), m.nrows()));
                }
                Ok(k * m)
            }
            WeightedGram::Lazy { gs, eta } => gs.weighted_apply(eta, m),
        }
    }
}

/// `max_j sigma_1(K_j)` of a Gram set.
pub fn max_top_eigenvalue(gs: &GramSet) -> f64 {
    gs.max_top_eigenvalue()
}

fn column_selection(features: &[usize], d: usize) -> Vec<usize> {
    if features.is_empty() {
        (0..d).collect()
    } else {
        features.to_vec()
    }
}

fn squared_distances(a: &DMatrix<f64>, b: &DMatrix<f64>, features: &[usize]) -> DMatrix<f64> {
    let cols = column_selection(features, a.ncols());
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        cols.iter()
            .map(|&c| {
                let diff = a[(i, c)] - b[(j, c)];
                diff * diff
            })
            .sum()
    })
}

fn gaussian_from_distances(sq: &DMatrix<f64>, bandwidth: f64) -> DMatrix<f64> {
    let scale = 1.0 / (2.0 * bandwidth * bandwidth);
    sq.map(|v| (-v * scale).exp())
}

fn linear_cross(a: &DMatrix<f64>, b: &DMatrix<f64>, features: &[usize]) -> DMatrix<f64> {
    let cols = column_selection(features, a.ncols());
    DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| cols.iter().map(|&c| a[(i, c)] * b[(j, c)]).sum())
}

/// Gram matrix of one kernel on the rows of `x`. Returns a factor for
/// factorized and Fourier-feature kernels.
pub fn gram(spec: &ScalarKernelSpec, x: &DMatrix<f64>) -> Result<GramRep> {
    let (l, d) = x.shape();
    if l == 0 {
        return Err(MvklError::InvalidInput("input matrix has no rows".into()));
    }
    spec.validate(d, l)?;
    Ok(match &spec.kind {
        KernelKind::Gaussian { bandwidth, features } => {
            GramRep::Dense(gaussian_from_distances(&squared_distances(x, x, features), *bandwidth))
        }
        KernelKind::Linear { features } => GramRep::Dense(linear_cross(x, x, features)),
        KernelKind::Precomputed { gram } => GramRep::Dense(gram.clone()),
        KernelKind::Factorized { factor } => GramRep::Factor(factor.clone()),
        KernelKind::FourierFeatures {
            bandwidth,
            features,
            dim,
            seed,
        } => GramRep::Factor(fourier_map(x, features, *bandwidth, *dim, *seed)),
    })
}

/// Cross-Gram `t x l` matrix with entries `k(x_new_i, x_train_j)`.
pub fn gram_cross(spec: &ScalarKernelSpec, x_train: &DMatrix<f64>, x_new: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x_train.ncols() != x_new.ncols() {
        return Err(MvklError::dims("gram_cross feature dimension", x_train.ncols(), x_new.ncols()));
    }
    let d = x_train.ncols();
    match &spec.kind {
        KernelKind::Precomputed { .. } | KernelKind::Factorized { .. } => {
            return Err(MvklError::Unsupported(format!(
                "kernel `{}` is defined only on the training sample; it has no cross-Gram",
                spec.id
            )))
        }
        _ => spec.validate(d, x_train.nrows())?,
    }
    Ok(match &spec.kind {
        KernelKind::Gaussian { bandwidth, features } => {
            gaussian_from_distances(&squared_distances(x_new, x_train, features), *bandwidth)
        }
        KernelKind::Linear { features } => linear_cross(x_new, x_train, features),
        KernelKind::FourierFeatures {
            bandwidth,
            features,
            dim,
            seed,
        } => {
            let z_new = fourier_map(x_new, features, *bandwidth, *dim, *seed);
            let z_train = fourier_map(x_train, features, *bandwidth, *dim, *seed);
            z_new * z_train.transpose()
        }
        KernelKind::Precomputed { .. } | KernelKind::Factorized { .. } => unreachable!(),
    })
}

/// Random Fourier features for the Gaussian kernel on all columns of `x`.
///
/// Frequencies are drawn as `w_k ~ N(0, I / bandwidth^2)` from a ChaCha8
/// stream seeded with `seed`. With `h = dim / 2` frequencies the map is
/// `z(x) = sqrt(2 / dim) [cos(w_1.x), sin(w_1.x), ..., cos(w_h.x), sin(w_h.x)]`,
/// so `z(x).z(x) = 1` exactly when `dim` is even. For odd `dim` one extra
/// column `sqrt(2 / dim) cos(w.x + b)` with `b ~ U[0, 2pi)` is appended;
/// the estimator stays unbiased and row norms stay below 2.
pub fn rff_factor(x: &DMatrix<f64>, bandwidth: f64, dim: usize, seed: u64) -> Result<DMatrix<f64>> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(MvklError::InvalidSpec(format!("bandwidth must be positive, got {bandwidth}")));
    }
    if dim == 0 {
        return Err(MvklError::InvalidSpec("feature count must be at least 1".into()));
    }
    Ok(fourier_map(x, &[], bandwidth, dim, seed))
}

fn fourier_map(x: &DMatrix<f64>, features: &[usize], bandwidth: f64, dim: usize, seed: u64) -> DMatrix<f64> {
    let cols = column_selection(features, x.ncols());
    let pairs = dim / 2;
    let extra = dim % 2 == 1;
    let n_freq = pairs + usize::from(extra);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let freqs = DMatrix::from_fn(cols.len(), n_freq, |_, _| {
        let g: f64 = StandardNormal.sample(&mut rng);
        g / bandwidth
    });
    let phase = if extra {
        Uniform::new(0.0, std::f64::consts::TAU).expect("valid range").sample(&mut rng)
    } else {
        0.0
    };
    let sub = DMatrix::from_fn(x.nrows(), cols.len(), |i, c| x[(i, cols[c])]);
    let proj = sub * freqs;
    let scale = (2.0 / dim as f64).sqrt();
    let mut z = DMatrix::zeros(x.nrows(), dim);
    for i in 0..x.nrows() {
        for k in 0..pairs {
            let a = proj[(i, k)];
            z[(i, 2 * k)] = scale * a.cos();
            z[(i, 2 * k + 1)] = scale * a.sin();
        }
        if extra {
            z[(i, dim - 1)] = scale * (proj[(i, pairs)] + phase).cos();
        }
    }
    z
}

/// Median of pairwise Euclidean distances over the selected columns,
/// ignoring zero distances. Falls back to 1 for degenerate samples.
pub fn median_pairwise_distance(x: &DMatrix<f64>, features: &[usize]) -> f64 {
    let sq = squared_distances(x, x, features);
    let mut d: Vec<f64> = Vec::with_capacity(x.nrows() * x.nrows() / 2);
    for i in 0..x.nrows() {
        for j in (i + 1)..x.nrows() {
            let v = sq[(i, j)];
            if v > 0.0 {
                d.push(v.sqrt());
            }
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    if d.len().is_multiple_of(2) {
        0.5 * (d[mid - 1] + d[mid])
    } else {
        d[mid]
    }
}

/// `count` bandwidths `median * 2^e` with exponents evenly spaced on
/// `[-half_span, half_span]`. The default grid is 13 values over `2^-6..2^6`.
pub fn bandwidth_grid(median: f64, count: usize, half_span: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![median],
        _ => (0..count)
            .map(|k| {
                let e = -half_span + 2.0 * half_span * k as f64 / (count - 1) as f64;
                median * e.exp2()
            })
            .collect(),
    }
}

/// Cross-Gram matrices of a whole dictionary, for prediction.
pub fn cross_grams(dict: &KernelDictionary, x_train: &DMatrix<f64>, x_new: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    dict.specs()
        .par_iter()
        .map(|s| gram_cross(s, x_train, x_new))
        .collect()
}

/// `(sum_j eta_j Kx_j) M` over precomputed cross-Gram matrices.
pub fn cross_apply(cross: &[DMatrix<f64>], eta: &[f64], m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cross.len() != eta.len() {
        return Err(MvklError::dims("cross-Gram weights", cross.len(), eta.len()));
    }
    let t = cross.first().map_or(0, |k| k.nrows());
    let mut out = DMatrix::zeros(t, m.ncols());
    for (k, &w) in cross.iter().zip(eta) {
        if w == 0.0 {
            continue;
        }
        if k.ncols() != m.nrows() {
            return Err(MvklError::dims("cross-Gram operand rows", k.ncols(), m.nrows()));
        }
        out += k * m * w;
    }
    Ok(out)
}
