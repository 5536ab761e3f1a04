//! Objective-versus-time traces for solver accuracy settings.
//!
//! Each variant reruns training with its own CG tolerance and Frank-Wolfe
//! budget and records the objective and held-out RMSE after every outer
//! iteration. Test errors are computed after training from state snapshots
//! so they do not count toward the timings.

use nalgebra::DMatrix;

use crate::error::{MvklError, Result};
use crate::io::BenchRow;
use crate::kernel::GramSet;
use crate::trainer::{self, FitState, TrainConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchVariant {
    pub label: String,
    pub cg_eps: f64,
    pub sdp_iter: usize,
}

impl BenchVariant {
    pub fn new(cg_eps: f64, sdp_iter: usize) -> Self {
        Self {
            label: format!("cg_eps={cg_eps:e};sdp_iter={sdp_iter}"),
            cg_eps,
            sdp_iter,
        }
    }
}

/// Cartesian product of tolerances and iteration budgets.
pub fn variant_grid(cg_eps: &[f64], sdp_iter: &[usize]) -> Vec<BenchVariant> {
    cg_eps
        .iter()
        .flat_map(|&e| sdp_iter.iter().map(move |&s| BenchVariant::new(e, s)))
        .collect()
}

/// Held-out data for a benchmark: cross Grams `K_j(X_test, X_train)` and
/// the test responses (already shifted by the training mean).
pub struct TestSet<'a> {
    pub cross: &'a [DMatrix<f64>],
    pub y: &'a DMatrix<f64>,
}

/// Runs every variant from the same initialization.
pub fn run_bench(
    gs: &GramSet,
    y: &DMatrix<f64>,
    test: Option<&TestSet<'_>>,
    base: &TrainConfig,
    variants: &[BenchVariant],
) -> Result<Vec<BenchRow>> {
    if variants.is_empty() {
        return Err(MvklError::InvalidInput("benchmark needs at least one variant".into()));
    }
    let mut rows = Vec::new();
    for v in variants {
        let cfg = TrainConfig {
            cg_eps: v.cg_eps,
            sdp_iter: v.sdp_iter,
            ..base.clone()
        };
        let mut snapshots: Vec<FitState> = Vec::new();
        let result = trainer::fit_observed(gs, y, &cfg, None, |_, s, _| {
            if test.is_some() {
                snapshots.push(s.clone());
            }
        })?;
        for (k, point) in result.trace.iter().enumerate() {
            let test_rmse = match test {
                Some(t) => trainer::rmse(&trainer::predict_with_cross(t.cross, &snapshots[k])?, t.y)?.mean,
                None => f64::NAN,
            };
            rows.push(BenchRow {
                variant: v.label.clone(),
                outer_iter: point.outer_iter,
                seconds: point.seconds,
                objective: point.objective,
                test_rmse,
            });
        }
    }
    Ok(rows)
}

/// Lowest final objective over all variants.
pub fn best_final_objective(rows: &[BenchRow]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (k, r) in rows.iter().enumerate() {
        let last = rows.get(k + 1).is_none_or(|n| n.variant != r.variant);
        if last {
            best = Some(best.map_or(r.objective, |b| b.min(r.objective)));
        }
    }
    best
}

/// First time at which `variant` gets within `rel` of `target`.
pub fn time_to_reach(rows: &[BenchRow], variant: &str, target: f64, rel: f64) -> Option<f64> {
    rows.iter()
        .filter(|r| r.variant == variant)
        .find(|r| r.objective <= target + rel * target.abs())
        .map(|r| r.seconds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variant: &str, it: usize, secs: f64, obj: f64) -> BenchRow {
        BenchRow {
            variant: variant.into(),
            outer_iter: it,
            seconds: secs,
            objective: obj,
            test_rmse: 0.0,
        }
    }

    #[test]
    fn grid_labels() {
        let g = variant_grid(&[1e-2, 1e-6], &[5, 50]);
        assert_eq!(g.len(), 4);
        assert_eq!(g[0].label, "cg_eps=1e-2;sdp_iter=5");
        assert_eq!(g[3].sdp_iter, 50);
    }

    #[test]
    fn target_times() {
        let rows = vec![
            row("a", 0, 0.0, 10.0),
            row("a", 1, 1.0, 2.0),
            row("a", 2, 2.0, 1.005),
            row("b", 0, 0.0, 10.0),
            row("b", 1, 3.0, 1.0),
        ];
        assert_eq!(best_final_objective(&rows), Some(1.0));
        assert_eq!(time_to_reach(&rows, "a", 1.0, 0.01), Some(2.0));
        assert_eq!(time_to_reach(&rows, "b", 1.0, 0.01), Some(3.0));
        assert_eq!(time_to_reach(&rows, "a", 0.5, 0.01), None);
    }
}
