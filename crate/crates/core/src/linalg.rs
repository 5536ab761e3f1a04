//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{MvklError, Result};

/// Frobenius inner product `<a, b> = tr(a^T b)`.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Largest absolute asymmetry `max |m_ij - m_ji|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Checks squareness and symmetry up to `rel_tol * max(1, max|m|)`.
pub fn check_symmetric(m: &DMatrix<f64>, rel_tol: f64, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(MvklError::InvalidInput(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = asymmetry(m);
    if asym > rel_tol * max_abs(m).max(1.0) {
        return Err(MvklError::InvalidInput(format!(
            "{what} is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    Ok(())
}

/// Dense symmetric eigendecomposition of the symmetrized input.
pub fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen(m).eigenvalues.min()
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    sym_eigen(m).eigenvalues.max()
}

/// Deterministic unit start vector for power iterations. Not aligned with
/// any coordinate axis so that degenerate spectra still break ties
/// reproducibly.
pub fn start_vector(n: usize) -> DVector<f64> {
    let v = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.618_033_988_749_895).fract());
    let norm = v.norm();
    v / norm
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration with
/// Rayleigh quotients. `apply` computes the operator-vector product.
pub fn power_top_eigenvalue<F>(n: usize, rel_tol: f64, max_iter: usize, mut apply: F) -> f64
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    if n == 0 {
        return 0.0;
    }
    let mut v = start_vector(n);
    let mut estimate = 0.0;
    for _ in 0..max_iter {
        let w = apply(&v);
        let rq = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            return rq.max(0.0);
        }
        let next = w / norm;
        let converged = (rq - estimate).abs() <= rel_tol * 1e-3 * rq.abs().max(f64::MIN_POSITIVE);
        estimate = rq;
        v = next;
        if converged {
            break;
        }
    }
    estimate.max(0.0)
}
