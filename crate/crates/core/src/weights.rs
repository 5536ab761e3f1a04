//! Kernel weights from the variational form of the dictionary norm.
//!
//! For the squared `l_p` norm the weights solve
//! `min_eta sum_j alpha_j^2 / eta_j` subject to `eta >= 0`,
//! `sum_j eta_j^q <= 1` with `q = p / (2 - p)`, where `alpha_j` is the RKHS
//! norm of the `j`-th component function. The minimizer is
//! `eta_j = alpha_j^(2/(q+1)) / (sum_k alpha_k^(2q/(q+1)))^(1/q)`, which is
//! `alpha_j / sum_k alpha_k` at `q = 1` and the indicator of `alpha_j > 0`
//! at `q = inf`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{MvklError, Result};
use crate::kernel::GramSet;
use crate::linalg::frob_dot;

/// Constraint slack accepted for `sum_j eta_j^q <= 1`.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Default smoothing floor applied to the weights after every update.
pub const DEFAULT_SMOOTHING: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Penalty {
    /// Squared `l_p` norm over component norms, `1 <= p <= 2`.
    Lp { p: f64 },
    /// `(1 - mu) |alpha|_1 + mu |alpha|_2^2`, `0 <= mu <= 1`.
    Elastic { mu: f64 },
}

impl Penalty {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Penalty::Lp { p } if !(1.0..=2.0).contains(&p) => {
                Err(MvklError::InvalidInput(format!("l_p penalty needs 1 <= p <= 2, got {p}")))
            }
            Penalty::Elastic { mu } if !(0.0..=1.0).contains(&mu) => {
                Err(MvklError::InvalidInput(format!("elastic-net mixing needs 0 <= mu <= 1, got {mu}")))
            }
            _ => Ok(()),
        }
    }

    /// Exponent of the weight constraint, or `None` for the unconstrained
    /// elastic-net weights.
    pub fn constraint_exponent(&self) -> Option<f64> {
        match *self {
            Penalty::Lp { p } => Some(q_exponent(p)),
            Penalty::Elastic { .. } => None,
        }
    }
}

/// `q = p / (2 - p)`; `p = 2` maps to `f64::INFINITY`.
pub fn q_exponent(p: f64) -> f64 {
    if p >= 2.0 {
        f64::INFINITY
    } else {
        p / (2.0 - p)
    }
}

/// Kernel weights together with the penalty that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub eta: Vec<f64>,
    pub penalty: Penalty,
}

impl WeightVector {
    /// Weights `eta_j = c` with `sum_j eta_j^q = 1` for `l_p` penalties, and
    /// all ones for the elastic net.
    pub fn uniform(m: usize, penalty: Penalty) -> Self {
        let value = match penalty.constraint_exponent() {
            Some(q) if q.is_finite() => (m as f64).powf(-1.0 / q),
            _ => 1.0,
        };
        Self {
            eta: vec![value; m],
            penalty,
        }
    }

    pub fn one_hot(m: usize, index: usize, penalty: Penalty) -> Self {
        let mut eta = vec![0.0; m];
        eta[index] = 1.0;
        Self { eta, penalty }
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    /// Whether the weights satisfy the penalty's constraint set.
    pub fn is_feasible(&self) -> bool {
        is_feasible(&self.eta, &self.penalty)
    }
}

/// `sum_j eta_j^q`, the max for `q = inf`.
pub fn constraint_value(eta: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        eta.iter().copied().fold(0.0, f64::max)
    } else {
        eta.iter().map(|e| e.powf(q)).sum()
    }
}

pub fn is_feasible(eta: &[f64], penalty: &Penalty) -> bool {
    if eta.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
        return false;
    }
    match penalty.constraint_exponent() {
        Some(q) => constraint_value(eta, q) <= 1.0 + CONSTRAINT_TOL,
        None => true,
    }
}

/// Component norms `alpha_j = eta_prev_j sqrt(max(0, tr(C^T K_j C L)))`.
pub fn component_norms(c: &DMatrix<f64>, gs: &GramSet, l_out: &DMatrix<f64>, eta_prev: &[f64]) -> Result<Vec<f64>> {
    if eta_prev.len() != gs.len() {
        return Err(MvklError::dims("previous kernel weights", gs.len(), eta_prev.len()));
    }
    if c.nrows() != gs.samples() || c.ncols() != l_out.nrows() || l_out.nrows() != l_out.ncols() {
        return Err(MvklError::dims(
            "component norms",
            format!("C {}x{}", gs.samples(), l_out.nrows()),
            format!("C {}x{}", c.nrows(), c.ncols()),
        ));
    }
    let cl = c * l_out;
    Ok(gs
        .mats()
        .iter()
        .zip(eta_prev)
        .map(|(rep, &w)| {
            if w == 0.0 {
                return 0.0;
            }
            // tr(C^T K_j C L) = <K_j C, C L>
            let quad = frob_dot(&rep.apply(c), &cl);
            w * quad.max(0.0).sqrt()
        })
        .collect())
}

/// Minimizer of `sum_j alpha_j^2 / eta_j` over `eta >= 0`,
/// `sum_j eta_j^q <= 1`, `q = p / (2 - p)`. Coordinates with `alpha_j = 0`
/// get weight 0. An all-zero `alpha` yields the uniform feasible weights.
pub fn update_eta_lp(alpha: &[f64], p: f64) -> Result<WeightVector> {
    let penalty = Penalty::Lp { p };
    penalty.validate()?;
    check_norms(alpha)?;
    if alpha.iter().all(|a| *a == 0.0) {
        return Ok(WeightVector::uniform(alpha.len(), penalty));
    }
    let q = q_exponent(p);
    let eta = if q.is_infinite() {
        alpha.iter().map(|&a| if a > 0.0 { 1.0 } else { 0.0 }).collect()
    } else if q == 1.0 && alpha.iter().sum::<f64>().is_finite() {
        let total: f64 = alpha.iter().sum();
        alpha.iter().map(|a| a / total).collect()
    } else {
        // Rescale first so that powers of tiny or huge norms stay finite;
        // the minimizer is invariant to a common scale of alpha.
        let top = alpha.iter().copied().fold(0.0, f64::max);
        let scaled: Vec<f64> = alpha.iter().map(|a| a / top).collect();
        let num: Vec<f64> = scaled.iter().map(|a| a.powf(2.0 / (q + 1.0))).collect();
        let denom = scaled.iter().map(|a| a.powf(2.0 * q / (q + 1.0))).sum::<f64>().powf(1.0 / q);
        num.into_iter().map(|v| v / denom).collect()
    };
    Ok(WeightVector { eta, penalty })
}

/// `eta_j = alpha_j / (1 - mu + mu alpha_j)`.
pub fn update_eta_elastic(alpha: &[f64], mu: f64) -> Result<WeightVector> {
    let penalty = Penalty::Elastic { mu };
    penalty.validate()?;
    check_norms(alpha)?;
    let eta = alpha
        .iter()
        .map(|&a| {
            if a == 0.0 {
                0.0
            } else {
                a / (1.0 - mu + mu * a)
            }
        })
        .collect();
    Ok(WeightVector { eta, penalty })
}

/// Weight update for either penalty.
pub fn update_eta(alpha: &[f64], penalty: &Penalty) -> Result<WeightVector> {
    match *penalty {
        Penalty::Lp { p } => update_eta_lp(alpha, p),
        Penalty::Elastic { mu } => update_eta_elastic(alpha, mu),
    }
}

fn check_norms(alpha: &[f64]) -> Result<()> {
    if let Some(bad) = alpha.iter().find(|a| !(**a >= 0.0) || !a.is_finite()) {
        return Err(MvklError::InvalidInput(format!("component norms must be finite and nonnegative, got {bad}")));
    }
    Ok(())
}

/// `eta_j <- max(eta_j, floor)`.
pub fn smooth_eta(eta: &[f64], floor: f64) -> Result<Vec<f64>> {
    if !(floor >= 0.0) {
        return Err(MvklError::InvalidInput(format!("smoothing floor must be nonnegative, got {floor}")));
    }
    Ok(eta.iter().map(|e| e.max(floor)).collect())
}

/// Smooths and, for `l_p` penalties, rescales back onto the constraint set.
pub fn smooth_feasible(w: &WeightVector, floor: f64) -> Result<WeightVector> {
    let mut eta = smooth_eta(&w.eta, floor)?;
    if let Some(q) = w.penalty.constraint_exponent() {
        if q.is_finite() {
            let total = constraint_value(&eta, q);
            if total > 1.0 {
                let scale = total.powf(-1.0 / q);
                eta.iter_mut().for_each(|e| *e *= scale);
            }
        } else {
            eta.iter_mut().for_each(|e| *e = e.min(1.0));
        }
    }
    Ok(WeightVector { eta, penalty: w.penalty })
}

/// Regularizer value over component norms: `|alpha|_p^2` for `l_p`, and
/// `(1 - mu) |alpha|_1 + mu |alpha|_2^2` for the elastic net.
pub fn penalty_value(norms: &[f64], penalty: &Penalty) -> Result<f64> {
    penalty.validate()?;
    check_norms(norms)?;
    Ok(match *penalty {
        Penalty::Lp { p } => {
            let top = norms.iter().copied().fold(0.0, f64::max);
            if top == 0.0 {
                return Ok(0.0);
            }
            let s: f64 = norms.iter().map(|a| (a / top).powf(p)).sum();
            (top * s.powf(1.0 / p)).powi(2)
        }
        Penalty::Elastic { mu } => {
            let l1: f64 = norms.iter().sum();
            let l2: f64 = norms.iter().map(|a| a * a).sum();
            (1.0 - mu) * l1 + mu * l2
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn q_values() {
        assert_eq!(q_exponent(1.0), 1.0);
        assert!(q_exponent(2.0).is_infinite());
        assert_relative_eq!(q_exponent(1.7), 17.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lp_update_examples() {
        let w = update_eta_lp(&[3.0, 1.0], 1.0).unwrap();
        assert_relative_eq!(w.eta[0], 0.75, epsilon = 1e-15);
        assert_relative_eq!(w.eta[1], 0.25, epsilon = 1e-15);
        for p in [1.0, 1.3, 2.0] {
            assert_relative_eq!(update_eta_lp(&[0.4], p).unwrap().eta[0], 1.0, epsilon = 1e-14);
        }
        let w = update_eta_lp(&[0.0, 2.0, 5.0], 2.0).unwrap();
        assert_eq!(w.eta, vec![0.0, 1.0, 1.0]);
        let w = update_eta_lp(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(w.eta, vec![0.5, 0.5]);
        assert!(update_eta_lp(&[1.0], 2.5).is_err());
        assert!(update_eta_lp(&[-1.0], 1.0).is_err());
    }

    #[test]
    fn zero_norms_get_zero_weight() {
        let w = update_eta_lp(&[0.0, 1.0, 2.0], 1.5).unwrap();
        assert_eq!(w.eta[0], 0.0);
        assert!(w.eta[1] > 0.0);
    }

    #[test]
    fn elastic_examples() {
        let w = update_eta_elastic(&[0.5, 2.0, 0.0], 1.0).unwrap();
        assert_eq!(w.eta, vec![1.0, 1.0, 0.0]);
        assert_relative_eq!(update_eta_elastic(&[1.0], 0.5).unwrap().eta[0], 1.0);
        assert!(update_eta_elastic(&[1.0], 1.5).is_err());
        assert!(update_eta_elastic(&[1.0], -0.1).is_err());
    }

    #[test]
    fn smoothing() {
        assert_eq!(smooth_eta(&[0.0, 0.3], 0.0).unwrap(), vec![0.0, 0.3]);
        assert_eq!(smooth_eta(&[0.0, 0.0], 1e-8).unwrap(), vec![1e-8, 1e-8]);
        assert_eq!(smooth_eta(&[1e-12, 0.5], 1e-8).unwrap(), vec![1e-8, 0.5]);
        assert!(smooth_eta(&[1.0], -1.0).is_err());
        let w = WeightVector {
            eta: vec![1.0, 0.0, 0.0],
            penalty: Penalty::Lp { p: 1.0 },
        };
        let s = smooth_feasible(&w, 1e-3).unwrap();
        assert!(s.is_feasible());
        assert!(s.eta[1] > 0.0);
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(penalty_value(&[0.0, 0.0], &Penalty::Lp { p: 1.0 }).unwrap(), 0.0);
        assert_relative_eq!(penalty_value(&[1.0, 1.0], &Penalty::Lp { p: 1.0 }).unwrap(), 4.0);
        assert_relative_eq!(penalty_value(&[3.0, 4.0], &Penalty::Lp { p: 2.0 }).unwrap(), 25.0, epsilon = 1e-12);
        assert_relative_eq!(penalty_value(&[1.0, 2.0], &Penalty::Elastic { mu: 0.5 }).unwrap(), 0.5 * 3.0 + 0.5 * 5.0);
    }

    #[test]
    fn uniform_is_on_constraint() {
        for p in [1.0, 1.5, 1.9] {
            let w = WeightVector::uniform(7, Penalty::Lp { p });
            assert_relative_eq!(constraint_value(&w.eta, q_exponent(p)), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn variational_value_equals_squared_norm() {
        // min_eta sum alpha^2 / eta = |alpha|_p^2
        let alpha = [0.3, 1.2, 0.7, 2.0];
        for p in [1.0, 1.25, 1.5, 1.8] {
            let w = update_eta_lp(&alpha, p).unwrap();
            let v: f64 = alpha.iter().zip(&w.eta).map(|(a, e)| a * a / e).sum();
            assert_relative_eq!(v, penalty_value(&alpha, &Penalty::Lp { p }).unwrap(), max_relative = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn lp_update_feasible_and_order_preserving(
            alpha in proptest::collection::vec(0.0f64..10.0, 1..12),
            p in 1.0f64..1.99,
        ) {
            prop_assume!(alpha.iter().any(|a| *a > 0.0));
            let w = update_eta_lp(&alpha, p).unwrap();
            let q = q_exponent(p);
            prop_assert!(constraint_value(&w.eta, q) <= 1.0 + CONSTRAINT_TOL);
            prop_assert!((constraint_value(&w.eta, q) - 1.0).abs() <= 1e-8);
            for i in 0..alpha.len() {
                for j in 0..alpha.len() {
                    if alpha[i] < alpha[j] {
                        prop_assert!(w.eta[i] <= w.eta[j]);
                    }
                }
            }
        }

        #[test]
        fn lp_update_permutation_equivariant(
            alpha in proptest::collection::vec(0.01f64..10.0, 2..8),
            p in 1.0f64..2.0,
            rot in 0usize..8,
        ) {
            let k = rot % alpha.len();
            let mut rotated = alpha.clone();
            rotated.rotate_left(k);
            let a = update_eta_lp(&alpha, p).unwrap().eta;
            let mut b = update_eta_lp(&rotated, p).unwrap().eta;
            b.rotate_right(k);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-14 * x.abs().max(1.0));
            }
        }

        #[test]
        fn elastic_update_monotone(a in 0.0f64..10.0, da in 0.0f64..5.0, mu in 0.0f64..1.0) {
            let lo = update_eta_elastic(&[a], mu).unwrap().eta[0];
            let hi = update_eta_elastic(&[a + da], mu).unwrap().eta[0];
            prop_assert!(hi >= lo - 1e-15);
        }
    }
}
