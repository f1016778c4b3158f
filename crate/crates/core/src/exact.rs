//! Closed-form reference trajectories.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::DiscGrid;
use crate::metrics::{bigbang_factor, expanding_hyperbolic};
use crate::scalar::Real;
use crate::solver::{FlowState, PolicyRecord, Trajectory};

/// Big-bang flow `ln(2/(1-|x|²)) + ½ ln(2t)` at the given times (all `> 0`).
pub fn bigbang_trajectory<T: Real>(grid: &Arc<DiscGrid<T>>, times: &[T]) -> Result<Trajectory<T>> {
    let snapshots =
        times.iter().map(|&t| Ok(FlowState { t, u: bigbang_factor(grid, t)? })).collect::<Result<Vec<_>>>()?;
    finish(snapshots, "bigbang".into())
}

/// Expanding hyperbolic flow on the disc of radius `a` at the given times (all `>= 0`).
pub fn expanding_trajectory<T: Real>(grid: &Arc<DiscGrid<T>>, a: T, times: &[T]) -> Result<Trajectory<T>> {
    let snapshots =
        times.iter().map(|&t| Ok(FlowState { t, u: expanding_hyperbolic(grid, a, t)? })).collect::<Result<Vec<_>>>()?;
    finish(snapshots, format!("expanding:a={a}"))
}

fn finish<T: Real>(snapshots: Vec<FlowState<T>>, label: String) -> Result<Trajectory<T>> {
    if snapshots.is_empty() {
        return Err(Error::Usage("exact trajectory needs at least one time".into()));
    }
    let mut traj = Trajectory::from_snapshots(snapshots, PolicyRecord::Prescribed)?;
    traj.metadata.insert("exact".into(), label);
    Ok(traj)
}

/// `n` equally spaced times `t0, t0 + dt, ..., t1`.
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;

    #[test]
    fn rejects_bad_times() {
        let g = build_grid::<f64>(1.0, 16, 1, 1.5, 0.02).unwrap();
        assert!(bigbang_trajectory(&g, &[0.0, 0.5]).is_err());
        assert!(bigbang_trajectory(&g, &[0.5, 0.25]).is_err());
        assert!(expanding_trajectory(&g, 1.0, &[]).is_err());
        let tr = expanding_trajectory(&g, 1.0, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(tr.len(), 3);
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
