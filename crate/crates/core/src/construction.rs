//! Exhaustion construction of the instantaneously complete flow.
//!
//! For each `k` in the plan, the initial metric is blended with the complete
//! hyperbolic factor `h_k` of curvature `-k²` on `D_k = {|x| < k/(k+1)}`,
//! flowed on a truncated grid of `D_k`, and the family is compared on common
//! domains. The last member is the limit candidate.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Reduce, ScalarField};
use crate::grid::{DiscGrid, GridSpec};
use crate::metrics::{
    check_curvature_upper, exhaustion_radius, sample_initial, smoothed_max_initial, ConformalMetric, CutoffSpec,
    InitialSpec,
};
use crate::scalar::Real;
use crate::solver::{run, BoundaryKind, FlowConfig, Trajectory};
use crate::verifiers::report::{CheckDomain, MarginTracker, VerifierReport};

/// Initial metric that can be evaluated on any exhausting grid.
pub trait InitialData<T: Real>: Sync {
    fn sample_on(&self, grid: &Arc<DiscGrid<T>>) -> Result<ConformalMetric<T>>;
    fn describe(&self) -> String;
}

impl<T: Real> InitialData<T> for InitialSpec {
    fn sample_on(&self, grid: &Arc<DiscGrid<T>>) -> Result<ConformalMetric<T>> {
        sample_initial(self, grid)
    }

    fn describe(&self) -> String {
        self.to_string()
    }
}

/// Sampled data is interpolated; its grid must cover the target grid.
impl<T: Real> InitialData<T> for ConformalMetric<T> {
    fn sample_on(&self, grid: &Arc<DiscGrid<T>>) -> Result<ConformalMetric<T>> {
        let u = self.u.resample(grid)?;
        check_curvature_upper(&u, -T::one(), "resampled initial metric")?;
        Ok(ConformalMetric::new(u, self.complete))
    }

    fn describe(&self) -> String {
        format!("sampled field on radius {}", self.grid().outer_radius())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionPlan {
    pub k_list: Vec<usize>,
    pub eta: f64,
    pub horizon: f64,
    /// Convergence threshold on `sup |u_k - u_k'|` for the last pair.
    pub limit_tol: f64,
    pub snapshot_times: Vec<f64>,
    /// `n_r(k) = n_r_base + n_r_per_k * k`.
    pub n_r_base: usize,
    pub n_r_per_k: usize,
    pub n_theta: usize,
    pub clustering: f64,
    pub collar: f64,
    /// Comparisons between family members and against the limit use `r <= reference_radius`.
    pub reference_radius: f64,
}

impl Default for ExhaustionPlan {
    fn default() -> Self {
        Self {
            k_list: vec![2, 4, 8, 16, 24],
            eta: 0.1,
            horizon: 1.0,
            limit_tol: 1e-2,
            snapshot_times: (1..=20).map(|i| i as f64 * 0.05).collect(),
            n_r_base: 64,
            n_r_per_k: 8,
            n_theta: 1,
            clustering: 1.5,
            collar: 0.02,
            reference_radius: 0.8,
        }
    }
}

impl ExhaustionPlan {
    pub fn validate(&self) -> Result<()> {
        if self.k_list.is_empty() {
            return Err(Error::Usage("exhaustion plan needs a non-empty k list".into()));
        }
        if self.k_list[0] == 0 || self.k_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("k list must be strictly increasing and start at k >= 1".into()));
        }
        CutoffSpec::new(self.eta)?;
        if !(self.limit_tol > 0.0) {
            return Err(Error::Config(format!("limit_tol must be positive, got {}", self.limit_tol)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.reference_radius > 0.0 && self.reference_radius < 1.0) {
            return Err(Error::Config(format!("reference radius must lie in (0, 1), got {}", self.reference_radius)));
        }
        for &k in &self.k_list {
            self.grid_spec(k).validate()?;
        }
        Ok(())
    }

    pub fn grid_spec(&self, k: usize) -> GridSpec {
        GridSpec::new(
            exhaustion_radius::<f64>(k),
            self.n_r_base + self.n_r_per_k * k,
            self.n_theta,
            self.clustering,
            self.collar,
        )
    }

    pub fn cutoff(&self) -> Result<CutoffSpec> {
        CutoffSpec::new(self.eta)
    }

    fn flow_config(&self, cfg: &FlowConfig) -> FlowConfig {
        let times: Vec<f64> = self.snapshot_times.iter().copied().filter(|&t| t <= self.horizon).collect();
        cfg.clone().with_snapshots(times)
    }
}

/// Flow `u_k` on `D_k` from the smoothed maximum of `u0` and `h_k`.
///
/// The truncation ring follows the constant-curvature `-k²` evolution, the
/// curvature of the `h_k` branch that `ū_k` equals near the rim.
pub fn approximate_flow<T: Real>(
    u0: &dyn InitialData<T>,
    k: usize,
    plan: &ExhaustionPlan,
    cfg: &FlowConfig,
) -> Result<Trajectory<T>> {
    let grid = Arc::new(DiscGrid::<T>::new(plan.grid_spec(k))?);
    let init = u0.sample_on(&grid)?;
    let bar = smoothed_max_initial(&init, k, plan.cutoff()?)?;
    let kk = T::from_usize_lossy(k);
    let mut traj =
        run(&bar.u, BoundaryKind::ConstantCurvature { c0: kk * kk }, T::lit(plan.horizon), &plan.flow_config(cfg))?;
    traj.metadata.insert("k".into(), k.to_string());
    traj.metadata.insert("eta".into(), plan.eta.to_string());
    traj.metadata.insert("initial".into(), u0.describe());
    Ok(traj)
}

/// Worst `u_hi - u_lo` per snapshot for one consecutive pair (positive values violate monotonicity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMonotonicity {
    pub k_lo: usize,
    pub k_hi: usize,
    pub tolerance: f64,
    pub worst_increase: Vec<(f64, f64)>,
}

/// `sup |u_lo - u_hi|` on `r <= reference_radius` per snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairConvergence {
    pub k_lo: usize,
    pub k_hi: usize,
    pub r_max: f64,
    pub sup_change: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct ConstructionResult<T: Real> {
    pub plan: ExhaustionPlan,
    pub family: Vec<(usize, Trajectory<T>)>,
    /// The last family member; compare on `r <= plan.reference_radius`.
    pub limit: Trajectory<T>,
    pub monotonicity: Vec<PairMonotonicity>,
    pub history: Vec<PairConvergence>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSummary {
    pub plan: ExhaustionPlan,
    pub initial: String,
    pub monotonicity: Vec<PairMonotonicity>,
    pub history: Vec<PairConvergence>,
    pub monotone: bool,
    pub converged: bool,
    pub steps: BTreeMap<usize, String>,
}

impl<T: Real> ConstructionResult<T> {
    pub fn is_monotone(&self) -> bool {
        self.monotonicity.iter().all(|m| m.worst_increase.iter().all(|&(_, v)| v <= m.tolerance))
    }

    pub fn trajectory(&self, k: usize) -> Option<&Trajectory<T>> {
        self.family.iter().find(|(kk, _)| *kk == k).map(|(_, t)| t)
    }

    pub fn summary(&self) -> ConstructionSummary {
        ConstructionSummary {
            plan: self.plan.clone(),
            initial: self.limit.metadata.get("initial").cloned().unwrap_or_default(),
            monotonicity: self.monotonicity.clone(),
            history: self.history.clone(),
            monotone: self.is_monotone(),
            converged: self.converged,
            steps: self
                .family
                .iter()
                .map(|(k, t)| (*k, t.metadata.get("steps").cloned().unwrap_or_default()))
                .collect(),
        }
    }
}

struct PairTables {
    worst_increase: Vec<(f64, f64)>,
    sup_change: Vec<(f64, f64)>,
    tolerance: f64,
    r_max: f64,
}

fn compare_pair<T: Real>(lo: &Trajectory<T>, hi: &Trajectory<T>, reference_radius: f64) -> Result<PairTables> {
    let g_lo = lo.grid().ok_or_else(|| Error::Usage("empty trajectory".into()))?.clone();
    let h = g_lo.max_spacing().to_f64_lossy();
    let r_max = T::lit(reference_radius).min(g_lo.outer_radius());
    let near: Vec<usize> = g_lo.interior_within(r_max).collect();
    let mut incr = Vec::new();
    let mut change = Vec::new();
    for (s_lo, s_hi) in lo.snapshots.iter().zip(&hi.snapshots) {
        let up = s_hi.u.resample(&g_lo)?;
        let d = up.sub(&s_lo.u)?;
        let worst = d.reduce_over(g_lo.interior_nodes(), Reduce::Max).to_f64_lossy();
        incr.push((s_lo.t.to_f64_lossy(), worst));
        change.push((s_lo.t.to_f64_lossy(), d.reduce_over(near.iter().copied(), Reduce::SupNorm).to_f64_lossy()));
    }
    Ok(PairTables { worst_increase: incr, sup_change: change, tolerance: 10.0 * h * h, r_max: r_max.to_f64_lossy() })
}

/// Runs the whole family and records monotonicity and convergence without
/// failing on either.
pub fn construct_family<T: Real>(
    u0: &dyn InitialData<T>,
    plan: &ExhaustionPlan,
    cfg: &FlowConfig,
) -> Result<ConstructionResult<T>> {
    plan.validate()?;
    cfg.validate()?;
    let family = plan
        .k_list
        .par_iter()
        .map(|&k| approximate_flow(u0, k, plan, cfg).map(|t| (k, t)))
        .collect::<Result<Vec<_>>>()?;
    let mut monotonicity = Vec::new();
    let mut history = Vec::new();
    for w in family.windows(2) {
        let ((k_lo, lo), (k_hi, hi)) = (&w[0], &w[1]);
        let PairTables { worst_increase, sup_change, tolerance, r_max } = compare_pair(lo, hi, plan.reference_radius)?;
        monotonicity.push(PairMonotonicity { k_lo: *k_lo, k_hi: *k_hi, tolerance, worst_increase });
        history.push(PairConvergence { k_lo: *k_lo, k_hi: *k_hi, r_max, sup_change });
    }
    let converged = match history.last() {
        Some(last) => last.sup_change.iter().all(|&(_, c)| c < plan.limit_tol),
        None => false,
    };
    let limit = family.last().expect("non-empty k list").1.clone();
    Ok(ConstructionResult { plan: plan.clone(), family, limit, monotonicity, history, converged })
}

/// Runs the family and insists on monotone decrease in `k` and on
/// convergence of the last pair at every positive snapshot.
pub fn construct_limit<T: Real>(
    u0: &dyn InitialData<T>,
    plan: &ExhaustionPlan,
    cfg: &FlowConfig,
) -> Result<ConstructionResult<T>> {
    let result = construct_family(u0, plan, cfg)?;
    for m in &result.monotonicity {
        if let Some(&(t, v)) = m.worst_increase.iter().find(|&&(_, v)| v > m.tolerance) {
            return Err(Error::ConstructionInvariant(format!(
                "u_{} exceeds u_{} by {v:.3e} at t = {t} (tolerance {:.3e})",
                m.k_hi, m.k_lo, m.tolerance
            )));
        }
    }
    if !result.converged {
        let history = result.history.last().map(|h| h.sup_change.iter().map(|&(_, c)| c).collect()).unwrap_or_default();
        return Err(Error::Convergence { history });
    }
    Ok(result)
}

/// Checks `candidate <= limit` up to `10 h² (1 + |limit|)` at every snapshot.
pub fn maximality_check<T: Real>(
    candidate: &Trajectory<T>,
    limit: &Trajectory<T>,
    domain: CheckDomain,
) -> Result<VerifierReport> {
    if candidate.len() != limit.len() {
        return Err(Error::Usage(format!("candidate has {} snapshots, limit has {}", candidate.len(), limit.len())));
    }
    let grid = limit.grid().ok_or_else(|| Error::Usage("empty limit trajectory".into()))?.clone();
    let nodes = domain.nodes(&grid);
    let h = domain.spacing(&grid).to_f64_lossy();
    let mut tracker = MarginTracker::new();
    for (c, l) in candidate.snapshots.iter().zip(&limit.snapshots) {
        if (c.t - l.t).abs() > T::lit(1e-12) * (T::one() + l.t.abs()) {
            return Err(Error::Usage(format!("snapshot times differ: {} vs {}", c.t, l.t)));
        }
        let cu: ScalarField<T> = c.u.resample(&grid)?;
        let (cv, lv) = (cu.values(), l.u.values());
        tracker.push_field(
            &grid,
            &nodes,
            l.t.to_f64_lossy(),
            h,
            |p| (lv[p] - cv[p]).to_f64_lossy(),
            |p| lv[p].to_f64_lossy(),
        );
    }
    Ok(tracker.finish("maximality", domain.describe(&grid)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_validation() {
        let plan = ExhaustionPlan::default();
        plan.validate().unwrap();
        assert_eq!(plan.grid_spec(24).n_r, 64 + 8 * 24);
        let empty = ExhaustionPlan { k_list: vec![], ..ExhaustionPlan::default() };
        assert!(matches!(empty.validate(), Err(Error::Usage(_))));
        let unsorted = ExhaustionPlan { k_list: vec![4, 2], ..ExhaustionPlan::default() };
        assert!(unsorted.validate().is_err());
        let bad_eta = ExhaustionPlan { eta: 0.0, ..ExhaustionPlan::default() };
        assert!(bad_eta.validate().is_err());
    }
}
