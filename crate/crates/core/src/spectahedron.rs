//! Output kernel subproblem over the bounded-trace spectahedron.
//!
//! Minimizes `g(L) = (1/l) |A L - Y|_F^2 + lambda tr(B^T L)` over symmetric
//! PSD `L` with `tr(L) <= tau`, where in training `A = K_eta C` and
//! `B = C^T A`. The solver is a Frank-Wolfe (Hazan) method: each step finds
//! an approximate minimal eigenvector `v` of the gradient, moves towards the
//! atom `tau v v^T` (or towards `0` when the gradient is positive definite,
//! which is what makes the trace an inequality), and picks the step by exact
//! line search on the quadratic.
//!
//! The gradient used everywhere is the symmetric gradient of `g` as written
//! above, `sym((2/l) A^T (A L - Y) + lambda B)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{MvklError, Result};
use crate::linalg::{self, frob_dot};

/// Denominators of the exact line search at or below this are treated as a
/// flat direction.
const FLAT_CURVATURE: f64 = 1e-14;

/// A symmetric PSD matrix with trace at most `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputKernel {
    matrix: DMatrix<f64>,
    tau: f64,
}

impl OutputKernel {
    /// Validates membership in the spectahedron and stores an exactly
    /// symmetrized copy.
    pub fn new(matrix: DMatrix<f64>, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(MvklError::InvalidInput(format!("trace budget must be positive, got {tau}")));
        }
        if matrix.nrows() != matrix.ncols() {
            return Err(MvklError::InvalidInput("output kernel must be square".into()));
        }
        let asym = linalg::asymmetry(&matrix);
        if asym > 1e-10 {
            return Err(MvklError::InvalidInput(format!("output kernel asymmetry {asym:.3e} exceeds 1e-10")));
        }
        let matrix = linalg::symmetrize(&matrix);
        let eig = linalg::sym_eigen(&matrix).eigenvalues;
        let (low, top) = if eig.is_empty() { (0.0, 0.0) } else { (eig.min(), eig.max()) };
        if low < -1e-8 * top.max(1.0) {
            return Err(MvklError::InvalidInput(format!("output kernel is not PSD (min eigenvalue {low:.3e})")));
        }
        let trace = matrix.trace();
        if trace > tau * (1.0 + 1e-8) {
            return Err(MvklError::InvalidInput(format!("output kernel trace {trace} exceeds budget {tau}")));
        }
        Ok(Self { matrix, tau })
    }

    /// `(tau / n) I`.
    pub fn scaled_identity(n: usize, tau: f64) -> Result<Self> {
        Self::new(DMatrix::identity(n, n) * (tau / n as f64), tau)
    }

    pub(crate) fn from_trusted(matrix: DMatrix<f64>, tau: f64) -> Self {
        Self { matrix, tau }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Frank-Wolfe settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwConfig {
    pub max_iter: usize,
    /// Curvature constant `C_g`; the eigenvector at step `k` is computed to
    /// precision `max(C_g / k^2, eig_floor)`.
    pub curvature: f64,
    /// Stop when the Frank-Wolfe gap drops below `stop_tolerance * max(1, |g|)`,
    /// or when five consecutive steps each decrease `g` by less than that.
    pub stop_tolerance: f64,
    pub eig_floor: f64,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            curvature: 1.0,
            stop_tolerance: 1e-9,
            eig_floor: 1e-10,
        }
    }
}

impl FwConfig {
    /// Precision handed to the eigensolver at step `k >= 1`.
    pub fn eig_precision(&self, k: usize) -> f64 {
        (self.curvature / (k as f64 * k as f64)).max(self.eig_floor)
    }
}

/// `C_g = (tau sigma*_1)^2`, an upper bound on the curvature of `g` over the
/// spectahedron for weights on the unit simplex.
pub fn default_curvature(tau: f64, sigma_top: f64) -> f64 {
    (tau * sigma_top).powi(2)
}

/// Diameter `sqrt(2) tau` of the spectahedron in the Frobenius norm.
pub fn spectahedron_diameter(tau: f64) -> f64 {
    std::f64::consts::SQRT_2 * tau
}

/// `ceil(16 (tau sigma*_1)^2 / eps)` Frank-Wolfe steps guarantee
/// suboptimality `eps / 2`.
pub fn hazan_iteration_bound(tau: f64, sigma_top: f64, eps: f64) -> Result<u64> {
    for (name, v) in [("tau", tau), ("sigma_top", sigma_top), ("eps", eps)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MvklError::InvalidInput(format!("{name} must be positive, got {v}")));
        }
    }
    Ok((16.0 * (tau * sigma_top).powi(2) / eps).ceil() as u64)
}

/// The quadratic `g` with `A^T A`, `A^T Y` and `|Y|^2` precomputed, so each
/// evaluation costs `O(n^3)` regardless of `l`.
#[derive(Debug, Clone)]
pub struct LQuadratic {
    ata: DMatrix<f64>,
    aty: DMatrix<f64>,
    yy: f64,
    b: DMatrix<f64>,
    lambda: f64,
    inv_l: f64,
}

impl LQuadratic {
    pub fn new(a: &DMatrix<f64>, b: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64, l: usize) -> Result<Self> {
        let n = a.ncols();
        if y.shape() != a.shape() {
            return Err(MvklError::dims(
                "L-subproblem targets",
                format!("{}x{}", a.nrows(), n),
                format!("{}x{}", y.nrows(), y.ncols()),
            ));
        }
        if b.shape() != (n, n) {
            return Err(MvklError::dims("L-subproblem linear term", format!("{n}x{n}"), format!("{}x{}", b.nrows(), b.ncols())));
        }
        if l == 0 {
            return Err(MvklError::InvalidInput("sample count must be positive".into()));
        }
        Ok(Self {
            ata: a.transpose() * a,
            aty: a.transpose() * y,
            yy: y.norm_squared(),
            b: b.clone(),
            lambda,
            inv_l: 1.0 / l as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.nrows()
    }

    fn check(&self, m: &DMatrix<f64>) -> Result<()> {
        let n = self.dim();
        if m.shape() != (n, n) {
            return Err(MvklError::dims("output kernel", format!("{n}x{n}"), format!("{}x{}", m.nrows(), m.ncols())));
        }
        Ok(())
    }

    pub fn value(&self, l_out: &DMatrix<f64>) -> f64 {
        let quad = frob_dot(l_out, &(&self.ata * l_out));
        let data = quad - 2.0 * frob_dot(&self.aty, l_out) + self.yy;
        self.inv_l * data + self.lambda * frob_dot(&self.b, l_out)
    }

    /// Unsymmetrized gradient `(2/l)(A^T A L - A^T Y) + lambda B`.
    fn raw_gradient(&self, l_out: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.ata * l_out - &self.aty) * (2.0 * self.inv_l) + &self.b * self.lambda
    }

    pub fn gradient(&self, l_out: &DMatrix<f64>) -> DMatrix<f64> {
        linalg::symmetrize(&self.raw_gradient(l_out))
    }

    /// Minimizer of `g(L + alpha P)` over `alpha in [0, 1]`.
    pub fn line_search(&self, l_out: &DMatrix<f64>, dir: &DMatrix<f64>) -> f64 {
        let slope = frob_dot(&self.raw_gradient(l_out), dir);
        let curvature = 2.0 * self.inv_l * frob_dot(dir, &(&self.ata * dir));
        if curvature <= FLAT_CURVATURE {
            // g is (numerically) linear along P: go to whichever end is lower.
            return if slope < 0.0 { 1.0 } else { 0.0 };
        }
        (-slope / curvature).clamp(0.0, 1.0)
    }
}

/// `(1/l) |A L - Y|_F^2 + lambda tr(B^T L)`.
pub fn l_objective(a: &DMatrix<f64>, b: &DMatrix<f64>, y: &DMatrix<f64>, l_out: &DMatrix<f64>, lambda: f64, l: usize) -> Result<f64> {
    let q = LQuadratic::new(a, b, y, lambda, l)?;
    q.check(l_out)?;
    let resid = a * l_out - y;
    Ok(resid.norm_squared() / l as f64 + lambda * frob_dot(b, l_out))
}

/// Symmetric gradient of [`l_objective`] with respect to `L`.
pub fn l_gradient(a: &DMatrix<f64>, b: &DMatrix<f64>, y: &DMatrix<f64>, l_out: &DMatrix<f64>, lambda: f64, l: usize) -> Result<DMatrix<f64>> {
    let q = LQuadratic::new(a, b, y, lambda, l)?;
    q.check(l_out)?;
    Ok(q.gradient(l_out))
}

/// Exact line search for `g(L_k + alpha P)` on `[0, 1]`.
pub fn exact_line_search(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
    l: usize,
    l_k: &DMatrix<f64>,
    dir: &DMatrix<f64>,
) -> Result<f64> {
    let q = LQuadratic::new(a, b, y, lambda, l)?;
    q.check(l_k)?;
    q.check(dir)?;
    Ok(q.line_search(l_k, dir))
}

/// Approximate eigenpair for the smallest eigenvalue of symmetric `m`.
///
/// Power iteration on `s I - m` where `s` is the Gershgorin upper bound on
/// the largest eigenvalue. Stops when the eigen-residual `|m v - mu v|`
/// is at most `eps`.
pub fn approx_min_eigvec(m: &DMatrix<f64>, eps: f64) -> Result<(DVector<f64>, f64)> {
    linalg::check_symmetric(m, 1e-10, "eigensolver input")?;
    if m.nrows() == 0 {
        return Err(MvklError::InvalidInput("eigensolver input is empty".into()));
    }
    Ok(min_eigvec_from(m, eps, linalg::start_vector(m.nrows()), max_power_steps(m.nrows())))
}

fn max_power_steps(n: usize) -> usize {
    2000 + 100 * n
}

pub(crate) fn min_eigvec_from(m: &DMatrix<f64>, eps: f64, start: DVector<f64>, max_steps: usize) -> (DVector<f64>, f64) {
    let n = m.nrows();
    let shift = (0..n)
        .map(|i| m[(i, i)] + (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let mut v = start;
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        v = linalg::start_vector(n);
    } else {
        v /= norm;
    }
    let mut mv = m * &v;
    let mut mu = v.dot(&mv);
    for _ in 0..max_steps {
        let resid = (&mv - &v * mu).norm();
        if resid <= eps {
            break;
        }
        let w = &v * shift - &mv;
        let wn = w.norm();
        if wn == 0.0 || !wn.is_finite() {
            // v already spans the top eigenspace of shift*I - m.
            break;
        }
        v = w / wn;
        mv = m * &v;
        mu = v.dot(&mv);
    }
    (v, mu)
}

struct FwStep {
    gap: f64,
    /// Accepted iterate and its value; `None` when the exact step is zero
    /// or rounding turned it into an ascent.
    next: Option<(DMatrix<f64>, f64)>,
}

impl FwStep {
    fn stalled(&self, g: f64, threshold: f64) -> bool {
        self.gap <= threshold || self.next.as_ref().is_none_or(|(_, v)| g - v <= threshold)
    }
}

#[allow(clippy::too_many_arguments)]
fn fw_step(
    q: &LQuadratic,
    grad: &DMatrix<f64>,
    cur: &DMatrix<f64>,
    g: f64,
    v: &DVector<f64>,
    mu: f64,
    tau: f64,
    k: usize,
) -> Result<FwStep> {
    let (vertex, gap) = fw_vertex(grad, cur, v, mu, tau);
    let dir = &vertex - cur;
    let alpha = q.line_search(cur, &dir);
    if alpha <= 0.0 {
        return Ok(FwStep { gap, next: None });
    }
    let next = cur * (1.0 - alpha) + &vertex * alpha;
    let g_next = q.value(&next);
    if !g_next.is_finite() {
        return Err(MvklError::NumericalFailure(format!("L objective became {g_next} at step {k}")));
    }
    Ok(FwStep {
        gap,
        next: (g_next <= g).then_some((next, g_next)),
    })
}

fn fw_vertex(grad: &DMatrix<f64>, cur: &DMatrix<f64>, v: &DVector<f64>, mu: f64, tau: f64) -> (DMatrix<f64>, f64) {
    let n = grad.nrows();
    let vertex = if mu > 0.0 {
        DMatrix::zeros(n, n)
    } else {
        let unit = v / v.norm();
        &unit * unit.transpose() * tau
    };
    let gap = frob_dot(grad, cur) - frob_dot(grad, &vertex);
    (vertex, gap)
}

fn exact_min_eigpair(m: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let eig = linalg::sym_eigen(m);
    let (i, mu) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, e)| if e < best.1 { (i, e) } else { best });
    (eig.eigenvectors.column(i).into_owned(), mu)
}

/// Result of [`solve_l`]: the final iterate and `g` after every accepted step
/// (the first entry is `g(L0)`).
#[derive(Debug, Clone)]
pub struct FwSolution {
    pub kernel: OutputKernel,
    pub objective_trace: Vec<f64>,
    pub final_gap: f64,
}

/// Frank-Wolfe over `{L PSD, tr(L) <= tau}` starting from `l0`.
#[allow(clippy::too_many_arguments)]
pub fn solve_l(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    y: &DMatrix<f64>,
    lambda: f64,
    tau: f64,
    l: usize,
    l0: &OutputKernel,
    cfg: &FwConfig,
) -> Result<FwSolution> {
    let q = LQuadratic::new(a, b, y, lambda, l)?;
    solve_l_quadratic(&q, tau, l0, cfg)
}

pub fn solve_l_quadratic(q: &LQuadratic, tau: f64, l0: &OutputKernel, cfg: &FwConfig) -> Result<FwSolution> {
    solve_l_quadratic_observed(q, tau, l0, cfg, |_| {})
}

/// [`solve_l_quadratic`] with a callback receiving the start and every
/// accepted iterate.
pub fn solve_l_quadratic_observed<F>(
    q: &LQuadratic,
    tau: f64,
    l0: &OutputKernel,
    cfg: &FwConfig,
    mut observe: F,
) -> Result<FwSolution>
where
    F: FnMut(&DMatrix<f64>),
{
    if !(tau > 0.0) {
        return Err(MvklError::InvalidInput(format!("trace budget must be positive, got {tau}")));
    }
    q.check(l0.matrix())?;
    // Re-validate against this tau: the start may come from another budget.
    let start = OutputKernel::new(l0.matrix().clone(), tau)?;
    let n = q.dim();
    let mut cur = start.into_matrix();
    let mut g = q.value(&cur);
    let mut trace = vec![g];
    observe(&cur);
    let mut v = linalg::start_vector(n);
    let mut small_steps = 0;
    let mut gap = f64::INFINITY;

    for k in 1..=cfg.max_iter {
        let grad = q.gradient(&cur);
        let threshold = cfg.stop_tolerance * g.abs().max(1.0);
        let (vk, mu) = min_eigvec_from(&grad, cfg.eig_precision(k), v.clone(), max_power_steps(n));
        let mut step = fw_step(q, &grad, &cur, g, &vk, mu, tau, k)?;
        v = vk;
        if step.stalled(g, threshold) {
            // The residual test only certifies some eigenvector; before
            // treating a stall as convergence, redo the step exactly.
            let (ve, mue) = exact_min_eigpair(&grad);
            step = fw_step(q, &grad, &cur, g, &ve, mue, tau, k)?;
            v = ve;
        }
        gap = step.gap;
        if gap <= threshold {
            break;
        }
        let Some((next, g_next)) = step.next else {
            small_steps += 1;
            if small_steps >= 5 {
                break;
            }
            continue;
        };
        if g - g_next <= threshold {
            small_steps += 1;
        } else {
            small_steps = 0;
        }
        cur = next;
        g = g_next;
        trace.push(g);
        observe(&cur);
        if small_steps >= 5 {
            break;
        }
    }
    Ok(FwSolution {
        kernel: OutputKernel::from_trusted(cur, tau),
        objective_trace: trace,
        final_gap: gap,
    })
}
