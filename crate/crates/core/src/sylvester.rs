//! Solvers for the coefficient subproblem `K C L + shift * C = Y`.
//!
//! With `K = K_eta` (the weighted Gram sum) and `shift = lambda * l` this is
//! the Kronecker system `(K (x) L + shift I) vec(C^T) = vec(Y^T)` written in
//! matrix form. Two solvers are provided:
//!
//! * [`solve_sylvester_eig`] diagonalizes `K` and `L` and divides in the
//!   joint eigenbasis. Exact, `O(l^3 + n^3)`, and used as the reference.
//! * [`solve_sylvester_cg`] runs conjugate gradients on the operator
//!   `M -> K_eta M L + shift M` in `R^{l x n}` with the Frobenius inner
//!   product. It never forms the `nl x nl` matrix, applies `K_eta` through
//!   [`GramSet::weighted_apply`], and accepts a warm start.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MvklError, Result};
use crate::kernel::GramSet;
use crate::linalg::{self, frob_dot};

/// Relative symmetry tolerance for `K` and `L`.
const SYMMETRY_TOL: f64 = 1e-8;

/// Most negative eigenvalue of `L` the CG solver accepts.
const PSD_SLACK: f64 = 1e-6;

/// Outcome of a CG solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgReport {
    pub iterations: usize,
    pub final_relative_residual: f64,
    pub converged: bool,
    /// Worst-case condition number `phi` for this instance, when known.
    pub condition_bound: f64,
}

fn check_shift(shift: f64) -> Result<()> {
    if !(shift > 0.0 && shift.is_finite()) {
        return Err(MvklError::InvalidRegularization(shift));
    }
    Ok(())
}

/// Exact solution through eigendecompositions `K = T diag(s) T^T` and
/// `L = S diag(r) S^T`: `C = T X S^T` with
/// `X_ij = (T^T Y S)_ij / (s_i r_j + shift)`.
pub fn solve_sylvester_eig(k: &DMatrix<f64>, l_out: &DMatrix<f64>, shift: f64, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_shift(shift)?;
    linalg::check_symmetric(k, SYMMETRY_TOL, "input Gram matrix")?;
    linalg::check_symmetric(l_out, SYMMETRY_TOL, "output kernel")?;
    if y.nrows() != k.nrows() || y.ncols() != l_out.nrows() {
        return Err(MvklError::dims(
            "sylvester right-hand side",
            format!("{}x{}", k.nrows(), l_out.nrows()),
            format!("{}x{}", y.nrows(), y.ncols()),
        ));
    }
    let ek = linalg::sym_eigen(k);
    let el = linalg::sym_eigen(l_out);
    let t = &ek.eigenvectors;
    let s = &el.eigenvectors;
    let mut x = t.transpose() * y * s;
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            x[(i, j)] /= ek.eigenvalues[i] * el.eigenvalues[j] + shift;
        }
    }
    Ok(t * x * s.transpose())
}

/// Residual `K C L + shift C - Y` for a dense `K`.
pub fn sylvester_residual(k: &DMatrix<f64>, l_out: &DMatrix<f64>, shift: f64, y: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    k * c * l_out + c * shift - y
}

/// Stopping and iteration limits for [`solve_sylvester_cg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Stop once `|residual|_F <= eps * |Y|_F`.
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { eps: 1e-6, max_iter: 1000 }
    }
}

/// CG solve of `K_eta C L + shift C = Y` starting from `c0`.
pub fn solve_sylvester_cg(
    gs: &GramSet,
    eta: &[f64],
    l_out: &DMatrix<f64>,
    shift: f64,
    y: &DMatrix<f64>,
    c0: &DMatrix<f64>,
    opts: CgOptions,
) -> Result<(DMatrix<f64>, CgReport)> {
    solve_sylvester_cg_observed(gs, eta, l_out, shift, y, c0, opts, |_, _| {})
}

/// [`solve_sylvester_cg`] with a callback receiving `(k, C^(k))` for the
/// starting point (`k = 0`) and after every iteration.
#[allow(clippy::too_many_arguments)]
pub fn solve_sylvester_cg_observed<F>(
    gs: &GramSet,
    eta: &[f64],
    l_out: &DMatrix<f64>,
    shift: f64,
    y: &DMatrix<f64>,
    c0: &DMatrix<f64>,
    opts: CgOptions,
    mut observe: F,
) -> Result<(DMatrix<f64>, CgReport)>
where
    F: FnMut(usize, &DMatrix<f64>),
{
    check_shift(shift)?;
    if !(opts.eps > 0.0) {
        return Err(MvklError::InvalidInput(format!("CG tolerance must be positive, got {}", opts.eps)));
    }
    let l = gs.samples();
    let n = l_out.nrows();
    linalg::check_symmetric(l_out, SYMMETRY_TOL, "output kernel")?;
    if y.nrows() != l || y.ncols() != n {
        return Err(MvklError::dims("CG right-hand side", format!("{l}x{n}"), format!("{}x{}", y.nrows(), y.ncols())));
    }
    if c0.shape() != y.shape() {
        return Err(MvklError::dims(
            "CG warm start",
            format!("{l}x{n}"),
            format!("{}x{}", c0.nrows(), c0.ncols()),
        ));
    }
    let low = linalg::min_eigenvalue(l_out);
    if low < -PSD_SLACK {
        return Err(MvklError::InvalidInput(format!(
            "output kernel is not PSD (min eigenvalue {low:.3e})"
        )));
    }

    let eta_sum: f64 = eta.iter().sum();
    let trace = l_out.trace().max(0.0);
    let phi = 1.0 + gs.max_top_eigenvalue() * eta_sum.max(0.0) * trace / shift;

    let k_eta = gs.weighted_operator(eta)?;
    let apply = |m: &DMatrix<f64>| -> Result<DMatrix<f64>> { Ok(k_eta.apply(m)? * l_out + m * shift) };

    let y_norm = y.norm();
    let mut c = c0.clone();
    observe(0, &c);
    if y_norm == 0.0 {
        c.fill(0.0);
        return Ok((
            c,
            CgReport {
                iterations: 0,
                final_relative_residual: 0.0,
                converged: true,
                condition_bound: phi,
            },
        ));
    }
    let mut r = y - apply(&c)?;
    let mut rr = frob_dot(&r, &r);
    let target = opts.eps * y_norm;
    let mut iterations = 0;
    if rr.sqrt() > target {
        let mut p = r.clone();
        while iterations < opts.max_iter {
            let ap = apply(&p)?;
            let pap = frob_dot(&p, &ap);
            if !pap.is_finite() || pap <= 0.0 {
                return Err(MvklError::NumericalFailure(format!(
                    "CG curvature p^T A p = {pap:e} at iteration {iterations}"
                )));
            }
            let step = rr / pap;
            c += &p * step;
            r -= &ap * step;
            let rr_next = frob_dot(&r, &r);
            iterations += 1;
            observe(iterations, &c);
            if !rr_next.is_finite() {
                return Err(MvklError::NumericalFailure(format!("CG residual became {rr_next} at iteration {iterations}")));
            }
            if rr_next.sqrt() <= target {
                rr = rr_next;
                break;
            }
            p = &r + &p * (rr_next / rr);
            rr = rr_next;
        }
    }
    let rel = rr.sqrt() / y_norm;
    Ok((
        c,
        CgReport {
            iterations,
            final_relative_residual: rel,
            converged: rel <= opts.eps,
            condition_bound: phi,
        },
    ))
}

/// `phi = 1 + sigma*_1 tau / (l lambda)`, the condition number bound of the
/// Kronecker system when `eta` lies in the unit simplex and `tr(L) <= tau`.
pub fn condition_bound(sigma_top: f64, tau: f64, l: usize, lambda: f64) -> Result<f64> {
    for (name, v) in [("sigma_top", sigma_top), ("tau", tau), ("lambda", lambda)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(MvklError::InvalidInput(format!("{name} must be positive, got {v}")));
        }
    }
    if l == 0 {
        return Err(MvklError::InvalidInput("sample count must be positive".into()));
    }
    Ok(1.0 + sigma_top * tau / (l as f64 * lambda))
}

/// CG error bound `2 sqrt(phi) ((sqrt(phi) - 1) / (sqrt(phi) + 1))^k`,
/// relative to the initial error.
pub fn cg_error_factor(phi: f64, k: usize) -> f64 {
    let s = phi.sqrt();
    2.0 * s * ((s - 1.0) / (s + 1.0)).powi(k as i32)
}
