//! Rademacher complexity bounds for the learned hypothesis classes.
//!
//! The class is indexed by the Hölder exponent `p` of the kernel-weight
//! penalty; the bounds use its conjugate `q` (`1/p + 1/q = 1`). `u_j` is
//! `sqrt(tr(K_j ⊗ L))`, the size of kernel `j` on the sample. For the
//! separable family with `K_j(x, x) <= kappa` and `tr L <= tau`,
//! `u_j <= sqrt(l kappa tau)`.

use serde::Serialize;

use crate::error::{MvklError, Result};

/// Constant of the Khintchine-Kahane step.
pub const ETA0: f64 = 23.0 / 22.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundPart {
    /// Valid for every `p`; linear in `m`.
    A,
    /// Needs an integer conjugate exponent `q`.
    B,
    /// `p = 1` only; grows like `sqrt(log m)`.
    C,
}

/// Conjugate exponent of `p`: `1 -> inf`, `inf -> 1`.
pub fn conjugate_exponent(p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(MvklError::InvalidInput(format!("Hölder exponent must be >= 1, got {p}")));
    }
    Ok(if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    })
}

fn integer_q(p: f64) -> Result<u32> {
    let q = conjugate_exponent(p)?;
    let r = q.round();
    if !q.is_finite() || (q - r).abs() > 1e-9 * q || r < 1.0 {
        return Err(MvklError::Unsupported(format!(
            "part B needs an integer conjugate exponent; p = {p} gives q = {q}"
        )));
    }
    Ok(r as u32)
}

fn check_common(lambda_norm: f64, l: usize) -> Result<()> {
    if !(lambda_norm.is_finite() && lambda_norm >= 0.0) {
        return Err(MvklError::InvalidInput(format!("norm radius must be finite and >= 0, got {lambda_norm}")));
    }
    if l == 0 {
        return Err(MvklError::InsufficientData("bounds need at least one sample".into()));
    }
    Ok(())
}

fn r_norm(u: &[f64], r: f64) -> f64 {
    u.iter().map(|v| v.powf(r)).sum::<f64>().powf(1.0 / r)
}

/// Bound from the per-kernel sizes `u`.
pub fn general_bound(lambda_norm: f64, p: f64, u: &[f64], l: usize, part: BoundPart) -> Result<f64> {
    check_common(lambda_norm, l)?;
    if u.is_empty() || u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(MvklError::InvalidInput("kernel sizes must be a nonempty list of finite values >= 0".into()));
    }
    let lf = l as f64;
    match part {
        BoundPart::A => {
            conjugate_exponent(p)?;
            Ok(lambda_norm * u.iter().sum::<f64>() / lf)
        }
        BoundPart::B => {
            let q = integer_q(p)? as f64;
            Ok(lambda_norm / lf * (ETA0 * q).sqrt() * r_norm(u, q))
        }
        BoundPart::C => {
            require_lasso(p)?;
            let m = u.len() as f64;
            let r_max = ((4.0 * m.ln()).ceil() as usize).max(1);
            Ok((1..=r_max)
                .map(|r| lambda_norm / lf * (ETA0 * r as f64).sqrt() * r_norm(u, r as f64))
                .fold(f64::INFINITY, f64::min))
        }
    }
}

fn require_lasso(p: f64) -> Result<()> {
    if p != 1.0 {
        return Err(MvklError::Unsupported(format!("part C holds for p = 1 only, got p = {p}")));
    }
    Ok(())
}

/// Closed-form bound for `m` separable kernels.
pub fn separable_bound(
    lambda_norm: f64,
    p: f64,
    m: usize,
    kappa: f64,
    tau: f64,
    l: usize,
    part: BoundPart,
) -> Result<f64> {
    check_common(lambda_norm, l)?;
    if m == 0 {
        return Err(MvklError::InvalidInput("dictionary must hold at least one kernel".into()));
    }
    if !(kappa.is_finite() && kappa >= 0.0 && tau.is_finite() && tau >= 0.0) {
        return Err(MvklError::InvalidInput("kappa and tau must be finite and >= 0".into()));
    }
    let mf = m as f64;
    let base = kappa * tau / l as f64;
    match part {
        BoundPart::A => {
            conjugate_exponent(p)?;
            Ok(lambda_norm * mf * base.sqrt())
        }
        BoundPart::B => {
            let q = integer_q(p)? as f64;
            Ok(lambda_norm * mf.powf(1.0 / q) * (ETA0 * q * base).sqrt())
        }
        BoundPart::C => {
            require_lasso(p)?;
            if m == 1 {
                Ok(lambda_norm * (ETA0 * base).sqrt())
            } else {
                let r = (2.0 * mf.ln()).ceil();
                Ok(lambda_norm * (ETA0 * std::f64::consts::E * r * base).sqrt())
            }
        }
    }
}

/// Part C for the separable family with the minimization over `r` carried
/// out instead of the closed-form choice `r = ceil(2 ln m)`.
pub fn separable_bound_minimized(lambda_norm: f64, m: usize, kappa: f64, tau: f64, l: usize) -> Result<f64> {
    check_common(lambda_norm, l)?;
    let u = vec![(l as f64 * kappa * tau).sqrt(); m];
    general_bound(lambda_norm, 1.0, &u, l, BoundPart::C)
}

/// All parts that apply to a fitted setting; inapplicable parts are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub m: usize,
    pub l: usize,
    pub p: f64,
    pub kappa: f64,
    pub tau: f64,
    pub lambda_norm: f64,
    pub part_a: f64,
    pub part_b: Option<f64>,
    pub part_c: Option<f64>,
    pub part_c_minimized: Option<f64>,
}

pub fn bound_report(lambda_norm: f64, p: f64, m: usize, kappa: f64, tau: f64, l: usize) -> Result<BoundReport> {
    let part_a = separable_bound(lambda_norm, p, m, kappa, tau, l, BoundPart::A)?;
    let part_b = separable_bound(lambda_norm, p, m, kappa, tau, l, BoundPart::B).ok();
    let (part_c, part_c_minimized) = if p == 1.0 {
        (
            Some(separable_bound(lambda_norm, p, m, kappa, tau, l, BoundPart::C)?),
            Some(separable_bound_minimized(lambda_norm, m, kappa, tau, l)?),
        )
    } else {
        (None, None)
    };
    Ok(BoundReport {
        m,
        l,
        p,
        kappa,
        tau,
        lambda_norm,
        part_a,
        part_b,
        part_c,
        part_c_minimized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_kernel_single_sample() {
        let c = separable_bound(1.0, 1.0, 1, 1.0, 1.0, 1, BoundPart::C).unwrap();
        assert_relative_eq!(c, 1.02247, epsilon = 1e-5);
        let b = separable_bound(1.0, f64::INFINITY, 1, 1.0, 1.0, 1, BoundPart::B).unwrap();
        assert_relative_eq!(b, c, epsilon = 1e-12);
    }

    #[test]
    fn part_a_value() {
        let a = separable_bound(1.0, 1.0, 4, 1.0, 1.0, 100, BoundPart::A).unwrap();
        assert_relative_eq!(a, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn part_b_rejects_fractional_q() {
        assert!(matches!(
            separable_bound(1.0, 1.7, 4, 1.0, 1.0, 10, BoundPart::B),
            Err(MvklError::Unsupported(_))
        ));
        assert!(separable_bound(1.0, 2.0, 4, 1.0, 1.0, 10, BoundPart::B).is_ok());
        assert!(separable_bound(1.0, 2.0, 4, 1.0, 1.0, 10, BoundPart::C).is_err());
    }

    #[test]
    fn general_matches_separable_part_a_and_b() {
        let (m, l, kappa, tau) = (5, 20, 1.0, 3.0);
        let u = vec![(l as f64 * kappa * tau).sqrt(); m];
        for (p, part) in [(1.0, BoundPart::A), (2.0, BoundPart::B), (1.5, BoundPart::B)] {
            let g = general_bound(1.3, p, &u, l, part).unwrap();
            let s = separable_bound(1.3, p, m, kappa, tau, l, part).unwrap();
            assert_relative_eq!(g, s, max_relative = 1e-12);
        }
    }

    #[test]
    fn minimized_never_exceeds_closed_form() {
        for m in [1, 2, 3, 8, 50, 1000] {
            let closed = separable_bound(1.0, 1.0, m, 1.0, 1.0, 10, BoundPart::C).unwrap();
            let min = separable_bound_minimized(1.0, m, 1.0, 1.0, 10).unwrap();
            assert!(min <= closed * (1.0 + 1e-12), "m = {m}: {min} > {closed}");
        }
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_exponent(2.0).unwrap(), 2.0);
        assert!(conjugate_exponent(1.0).unwrap().is_infinite());
        assert_eq!(conjugate_exponent(f64::INFINITY).unwrap(), 1.0);
        assert!(conjugate_exponent(0.5).is_err());
    }
}
