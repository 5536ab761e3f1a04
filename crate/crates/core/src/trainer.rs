//! Block coordinate descent over coefficients `C`, kernel weights `eta` and
//! output kernel `L`.
//!
//! The objective is
//!
//! ```text
//! F(C, eta, L) = (1/l) |K_eta C L - Y|_F^2 + lambda tr(C^T K_eta C L)
//! ```
//!
//! with `eta` restricted to the penalty's constraint set and `L` to the
//! spectahedron of trace `tau`. Each outer sweep runs the weight update
//! (from the component norms of the current fit), then the coefficient solve
//! warm-started from the previous `C`, then the Frank-Wolfe output kernel
//! solve warm-started from the previous `L`. The weight update always sees a
//! freshly solved `C`, which keeps `F` non-increasing from sweep to sweep up
//! to the inexactness of the inner solvers.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MvklError, Result};
use crate::kernel::{self, GramSet, KernelDictionary};
use crate::linalg::frob_dot;
use crate::spectahedron::{self, FwConfig, LQuadratic, OutputKernel};
use crate::sylvester::{self, CgOptions, CgReport};
use crate::weights::{self, Penalty, WeightVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Learn kernel weights only; `L = I_n` stays fixed.
    Ikl,
    /// Learn the output kernel only; weights stay one-hot on `okl_kernel`.
    Okl,
    /// Learn both.
    Iokl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lambda: f64,
    /// Trace budget for `L`; `None` means the output dimension `n`.
    pub tau: Option<f64>,
    pub penalty: Penalty,
    pub mode: Mode,
    pub cg_eps: f64,
    pub cg_max_iter: usize,
    pub sdp_iter: usize,
    pub outer_max: usize,
    /// Stop once the relative objective change of a sweep is below this.
    pub outer_tol: f64,
    /// Stop after the first sweep that ends past this many seconds.
    pub max_seconds: Option<f64>,
    pub eta_smoothing: f64,
    pub seed: u64,
    /// Kernel kept at weight one in OKL mode.
    pub okl_kernel: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            tau: None,
            penalty: Penalty::Lp { p: 1.0 },
            mode: Mode::Iokl,
            cg_eps: 1e-6,
            cg_max_iter: 1000,
            sdp_iter: 100,
            outer_max: 50,
            outer_tol: 1e-6,
            max_seconds: None,
            eta_smoothing: weights::DEFAULT_SMOOTHING,
            seed: 0,
            okl_kernel: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if !(v > 0.0 && v.is_finite()) {
                return Err(MvklError::InvalidInput(format!("{name} must be positive, got {v}")));
            }
            Ok(())
        };
        positive("lambda", self.lambda)?;
        if let Some(tau) = self.tau {
            positive("tau", tau)?;
        }
        if let Some(secs) = self.max_seconds {
            positive("max_seconds", secs)?;
        }
        positive("cg_eps", self.cg_eps)?;
        if !(self.outer_tol >= 0.0) {
            return Err(MvklError::InvalidInput(format!("outer_tol must be nonnegative, got {}", self.outer_tol)));
        }
        if !(self.eta_smoothing >= 0.0) {
            return Err(MvklError::InvalidInput(format!(
                "eta_smoothing must be nonnegative, got {}",
                self.eta_smoothing
            )));
        }
        self.penalty.validate()
    }

    /// Trace budget for output dimension `n`.
    pub fn tau_for(&self, n: usize) -> f64 {
        self.tau.unwrap_or(n as f64)
    }
}

/// The three blocks of the optimization variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitState {
    pub weights: WeightVector,
    pub coefficients: DMatrix<f64>,
    pub output_kernel: OutputKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub outer_iter: usize,
    pub seconds: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub state: FitState,
    /// Objective at the start (`outer_iter = 0`) and after every sweep.
    pub trace: Vec<TracePoint>,
    pub last_cg: Option<CgReport>,
}

/// `F(C, eta, L)`, or `+inf` when `eta` violates the penalty's constraint.
pub fn objective(
    c: &DMatrix<f64>,
    l_out: &DMatrix<f64>,
    eta: &[f64],
    gs: &GramSet,
    y: &DMatrix<f64>,
    lambda: f64,
    penalty: &Penalty,
) -> Result<f64> {
    if !weights::is_feasible(eta, penalty) {
        return Ok(f64::INFINITY);
    }
    let a = gs.weighted_apply(eta, c)?;
    if l_out.nrows() != c.ncols() || y.shape() != c.shape() {
        return Err(MvklError::dims(
            "objective",
            format!("{}x{}", c.nrows(), c.ncols()),
            format!("Y {}x{}, L {}x{}", y.nrows(), y.ncols(), l_out.nrows(), l_out.ncols()),
        ));
    }
    let al = &a * l_out;
    let data = (&al - y).norm_squared() / gs.samples() as f64;
    // tr(C^T K_eta C L) = <C, K_eta C L>
    Ok(data + lambda * frob_dot(c, &al))
}

fn initial_state(gs: &GramSet, n: usize, cfg: &TrainConfig, tau: f64) -> Result<FitState> {
    let m = gs.len();
    let weights = match cfg.mode {
        Mode::Okl => {
            if cfg.okl_kernel >= m {
                return Err(MvklError::InvalidInput(format!(
                    "okl_kernel {} out of range for {m} kernels",
                    cfg.okl_kernel
                )));
            }
            WeightVector::one_hot(m, cfg.okl_kernel, cfg.penalty)
        }
        _ => WeightVector::uniform(m, cfg.penalty),
    };
    let output_kernel = match cfg.mode {
        Mode::Ikl => OutputKernel::from_trusted(DMatrix::identity(n, n), n as f64),
        _ => OutputKernel::scaled_identity(n, tau)?,
    };
    Ok(FitState {
        weights,
        coefficients: DMatrix::zeros(gs.samples(), n),
        output_kernel,
    })
}

fn check_init(init: &FitState, gs: &GramSet, n: usize) -> Result<()> {
    if init.weights.len() != gs.len() {
        return Err(MvklError::dims("initial weights", gs.len(), init.weights.len()));
    }
    if init.coefficients.shape() != (gs.samples(), n) {
        return Err(MvklError::dims(
            "initial coefficients",
            format!("{}x{n}", gs.samples()),
            format!("{}x{}", init.coefficients.nrows(), init.coefficients.ncols()),
        ));
    }
    if init.output_kernel.matrix().nrows() != n {
        return Err(MvklError::dims("initial output kernel", n, init.output_kernel.matrix().nrows()));
    }
    Ok(())
}

/// Runs block coordinate descent. `init` warm-starts all three blocks.
pub fn fit(gs: &GramSet, y: &DMatrix<f64>, cfg: &TrainConfig, init: Option<&FitState>) -> Result<FitResult> {
    fit_observed(gs, y, cfg, init, |_, _, _| {})
}

/// [`fit`] with a callback receiving `(outer_iter, state, objective)` after
/// initialization and after each sweep.
pub fn fit_observed<F>(gs: &GramSet, y: &DMatrix<f64>, cfg: &TrainConfig, init: Option<&FitState>, mut observe: F) -> Result<FitResult>
where
    F: FnMut(usize, &FitState, f64),
{
    cfg.validate()?;
    let l = gs.samples();
    if y.nrows() != l {
        return Err(MvklError::dims("targets", l, y.nrows()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(MvklError::InvalidInput("targets contain non-finite values".into()));
    }
    let n = y.ncols();
    let tau = cfg.tau_for(n);
    let mut state = match init {
        Some(s) => {
            check_init(s, gs, n)?;
            let mut s = s.clone();
            s.weights.penalty = cfg.penalty;
            if cfg.mode != Mode::Ikl {
                s.output_kernel = OutputKernel::new(s.output_kernel.into_matrix(), tau)?;
            }
            s
        }
        None => initial_state(gs, n, cfg, tau)?,
    };
    let shift = cfg.lambda * l as f64;
    let sigma_top = gs.max_top_eigenvalue();
    let fw = FwConfig {
        max_iter: cfg.sdp_iter,
        curvature: spectahedron::default_curvature(tau, sigma_top).max(f64::MIN_POSITIVE),
        ..FwConfig::default()
    };
    let cg = CgOptions {
        eps: cfg.cg_eps,
        max_iter: cfg.cg_max_iter,
    };

    let started = Instant::now();
    let eval = |s: &FitState| {
        objective(
            &s.coefficients,
            s.output_kernel.matrix(),
            &s.weights.eta,
            gs,
            y,
            cfg.lambda,
            &cfg.penalty,
        )
    };
    let mut value = eval(&state)?;
    let mut trace = vec![TracePoint {
        outer_iter: 0,
        seconds: 0.0,
        objective: value,
    }];
    observe(0, &state, value);
    let mut last_cg = None;

    for iter in 1..=cfg.outer_max {
        let ctx = |e: MvklError| e.with_context(format!("outer iteration {iter}"));

        if cfg.mode != Mode::Okl && state.coefficients.iter().any(|v| *v != 0.0) {
            let alpha = weights::component_norms(
                &state.coefficients,
                gs,
                state.output_kernel.matrix(),
                &state.weights.eta,
            )?;
            if alpha.iter().any(|a| *a > 0.0) {
                let updated = weights::update_eta(&alpha, &cfg.penalty)?;
                state.weights = weights::smooth_feasible(&updated, cfg.eta_smoothing)?;
            }
        }

        let (c, report) = sylvester::solve_sylvester_cg(
            gs,
            &state.weights.eta,
            state.output_kernel.matrix(),
            shift,
            y,
            &state.coefficients,
            cg,
        )
        .map_err(ctx)?;
        state.coefficients = c;
        last_cg = Some(report);

        if cfg.mode != Mode::Ikl {
            let a = gs.weighted_apply(&state.weights.eta, &state.coefficients)?;
            let b = state.coefficients.transpose() * &a;
            let q = LQuadratic::new(&a, &b, y, cfg.lambda, l)?;
            let sol = spectahedron::solve_l_quadratic(&q, tau, &state.output_kernel, &fw).map_err(ctx)?;
            state.output_kernel = sol.kernel;
        }

        let next = eval(&state)?;
        if !next.is_finite() {
            return Err(MvklError::NumericalFailure(format!("objective became {next} at outer iteration {iter}")));
        }
        let seconds = started.elapsed().as_secs_f64();
        trace.push(TracePoint {
            outer_iter: iter,
            seconds,
            objective: next,
        });
        observe(iter, &state, next);
        let change = (value - next).abs() / value.abs().max(f64::MIN_POSITIVE);
        value = next;
        if change < cfg.outer_tol || cfg.max_seconds.is_some_and(|m| seconds >= m) {
            break;
        }
    }
    Ok(FitResult { state, trace, last_cg })
}

/// A trained model: the dictionary, the training inputs it was fitted on,
/// the learned blocks and the configuration echo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub dictionary: KernelDictionary,
    pub x_train: DMatrix<f64>,
    pub state: FitState,
    pub config: TrainConfig,
    pub trace: Vec<TracePoint>,
}

impl Model {
    /// Builds the Gram set of `dictionary` on `x` and fits.
    pub fn fit(dictionary: KernelDictionary, x: DMatrix<f64>, y: &DMatrix<f64>, cfg: &TrainConfig) -> Result<Self> {
        let gs = GramSet::build(&dictionary, &x)?;
        let result = fit(&gs, y, cfg, None)?;
        Ok(Self::from_result(dictionary, x, result, cfg))
    }

    pub fn from_result(dictionary: KernelDictionary, x_train: DMatrix<f64>, result: FitResult, cfg: &TrainConfig) -> Self {
        let mut config = cfg.clone();
        config.tau = Some(result.state.output_kernel.tau());
        Self {
            dictionary,
            x_train,
            state: result.state,
            config,
            trace: result.trace,
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.state.weights.eta
    }

    pub fn output_kernel(&self) -> &DMatrix<f64> {
        self.state.output_kernel.matrix()
    }

    pub fn coefficients(&self) -> &DMatrix<f64> {
        &self.state.coefficients
    }

    /// `Y_hat = (sum_j eta_j Kx_j) C L` with `Kx_j` the cross-Gram of kernel
    /// `j` between `x_new` and the training inputs.
    pub fn predict(&self, x_new: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x_new.ncols() != self.x_train.ncols() {
            return Err(MvklError::dims("prediction features", self.x_train.ncols(), x_new.ncols()));
        }
        let cross = kernel::cross_grams(&self.dictionary, &self.x_train, x_new)?;
        predict_with_cross(&cross, &self.state)
    }
}

/// Prediction from precomputed cross-Gram matrices.
pub fn predict_with_cross(cross: &[DMatrix<f64>], state: &FitState) -> Result<DMatrix<f64>> {
    let kc = kernel::cross_apply(cross, &state.weights.eta, &state.coefficients)?;
    Ok(kc * state.output_kernel.matrix())
}

/// Training-set fit `K_eta C L`.
pub fn training_fit(gs: &GramSet, state: &FitState) -> Result<DMatrix<f64>> {
    Ok(gs.weighted_apply(&state.weights.eta, &state.coefficients)? * state.output_kernel.matrix())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub per_output: Vec<f64>,
    pub mean: f64,
}

/// Root-mean-square error per output column, and their mean.
pub fn rmse(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<Rmse> {
    if pred.shape() != truth.shape() {
        return Err(MvklError::dims(
            "rmse",
            format!("{}x{}", truth.nrows(), truth.ncols()),
            format!("{}x{}", pred.nrows(), pred.ncols()),
        ));
    }
    if pred.nrows() == 0 {
        return Err(MvklError::InvalidInput("rmse of an empty sample".into()));
    }
    let rows = pred.nrows() as f64;
    let per_output: Vec<f64> = (0..pred.ncols())
        .map(|j| ((pred.column(j) - truth.column(j)).norm_squared() / rows).sqrt())
        .collect();
    let mean = per_output.iter().sum::<f64>() / per_output.len().max(1) as f64;
    Ok(Rmse { per_output, mean })
}
