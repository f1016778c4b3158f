use std::sync::Arc;

use crate::construction::{construct_family, ExhaustionPlan, InitialData};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::DiscGrid;
use crate::metrics::gauss_curvature;
use crate::scalar::Real;
use crate::solver::{FlowConfig, Trajectory};

use super::barriers::barrier_b;
use super::report::{default_tolerance, CheckDomain, MarginTracker, VerifierReport};

fn paired<'a, T: Real>(a: &'a Trajectory<T>, b: &'a Trajectory<T>) -> Result<Arc<DiscGrid<T>>> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::Usage(format!(
            "trajectories must share snapshot times ({} vs {} snapshots)",
            a.len(),
            b.len()
        )));
    }
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        if (x.t - y.t).abs() > T::lit(1e-12) * (T::one() + x.t.abs()) {
            return Err(Error::Usage(format!("snapshot times differ: {} vs {}", x.t, y.t)));
        }
    }
    let ga = a.grid().expect("non-empty").clone();
    let gb = b.grid().expect("non-empty");
    if !ga.same_layout(gb) {
        return Err(Error::Usage("trajectories live on different grids".into()));
    }
    Ok(ga)
}

/// Ordering `v >= u` propagates from `t = 0` when the ring data of `v`
/// dominates that of `u` (the finite stand-in for `v -> ∞` at the rim).
pub fn direct_comparison<T: Real>(
    traj_u: &Trajectory<T>,
    traj_v: &Trajectory<T>,
    domain: CheckDomain,
) -> Result<VerifierReport> {
    let grid = paired(traj_u, traj_v)?;
    let h = domain.spacing(&grid).to_f64_lossy();
    let hh = grid.max_spacing().to_f64_lossy();
    let (u0, v0) = (traj_u.snapshots[0].u.values(), traj_v.snapshots[0].u.values());
    for p in 0..grid.num_nodes() {
        let (a, b) = (u0[p].to_f64_lossy(), v0[p].to_f64_lossy());
        if b < a - default_tolerance(hh, a) {
            return Err(Error::Precondition {
                what: "initial ordering v(0) >= u(0)".into(),
                node: p,
                r: grid.r(p).to_f64_lossy(),
                value: b - a,
            });
        }
    }
    for (su, sv) in traj_u.snapshots.iter().zip(&traj_v.snapshots) {
        let (u, v) = (su.u.values(), sv.u.values());
        if let Some(p) = grid.ring_nodes().find(|&p| v[p] < u[p]) {
            return Err(Error::Precondition {
                what: format!("ring dominance v >= u at t = {}", su.t),
                node: p,
                r: grid.r(p).to_f64_lossy(),
                value: (v[p] - u[p]).to_f64_lossy(),
            });
        }
    }
    let nodes = domain.nodes(&grid);
    let mut tracker = MarginTracker::new();
    for (su, sv) in traj_u.snapshots.iter().zip(&traj_v.snapshots).skip(1) {
        let (u, v) = (su.u.values(), sv.u.values());
        tracker.push_field(
            &grid,
            &nodes,
            su.t.to_f64_lossy(),
            h,
            |p| (v[p] - u[p]).to_f64_lossy(),
            |p| v[p].to_f64_lossy(),
        );
    }
    Ok(tracker.finish("direct-comparison", domain.describe(&grid)))
}

/// `g1 <= g2` from `Q = u1 - u2 <= 0` at `t = 0`, under
/// (i) `|K[g2]| <= C`, (ii) `K[g1] <= C`, (iii) `Q <= C`, all on every snapshot,
/// and the completeness proxy for `g2` (ring dominance of the big-bang flow).
pub fn geometric_comparison<T: Real>(
    traj1: &Trajectory<T>,
    traj2: &Trajectory<T>,
    c: f64,
    domain: CheckDomain,
) -> Result<VerifierReport> {
    let grid = paired(traj1, traj2)?;
    let nodes = domain.nodes(&grid);
    let h = domain.spacing(&grid).to_f64_lossy();
    let hyp = |which: &str, detail: String| Error::Hypothesis { which: which.into(), detail };
    for (s1, s2) in traj1.snapshots.iter().zip(&traj2.snapshots) {
        let t = s1.t.to_f64_lossy();
        let (k1, k2) = (gauss_curvature(&s1.u), gauss_curvature(&s2.u));
        let (u1, u2) = (s1.u.values(), s2.u.values());
        for &p in &nodes {
            let r = grid.r(p).to_f64_lossy();
            let (a, b) = (k1.values()[p].to_f64_lossy(), k2.values()[p].to_f64_lossy());
            if b.abs() > c + default_tolerance(h, b) {
                return Err(hyp("(i) |K[g2]| <= C", format!("|K| = {:.6e} > {c} at t = {t}, r = {r:.6}", b.abs())));
            }
            if a > c + default_tolerance(h, a) {
                return Err(hyp("(ii) K[g1] <= C", format!("K = {a:.6e} > {c} at t = {t}, r = {r:.6}")));
            }
            let q = (u1[p] - u2[p]).to_f64_lossy();
            if q > c + default_tolerance(h, u1[p].to_f64_lossy()) {
                return Err(hyp("(iii) Q <= C", format!("Q = {q:.6e} > {c} at t = {t}, r = {r:.6}")));
            }
        }
        if s2.t > T::zero() {
            if let Some(p) = grid.ring_nodes().find(|&p| u2[p] < barrier_b(grid.r(p), s2.t)) {
                return Err(hyp(
                    "g2 complete",
                    format!("ring value {:.6e} below the big-bang flow at t = {t}, node {p}", u2[p].to_f64_lossy()),
                ));
            }
        }
    }
    let (u1, u2) = (traj1.snapshots[0].u.values(), traj2.snapshots[0].u.values());
    for &p in &nodes {
        let q = (u1[p] - u2[p]).to_f64_lossy();
        if q > default_tolerance(h, u2[p].to_f64_lossy()) {
            return Err(Error::Precondition {
                what: "Q(0) <= 0".into(),
                node: p,
                r: grid.r(p).to_f64_lossy(),
                value: q,
            });
        }
    }
    let mut tracker = MarginTracker::new();
    for (s1, s2) in traj1.snapshots.iter().zip(&traj2.snapshots) {
        let (u1, u2) = (s1.u.values(), s2.u.values());
        tracker.push_field(
            &grid,
            &nodes,
            s1.t.to_f64_lossy(),
            h,
            |p| (u2[p] - u1[p]).to_f64_lossy(),
            |p| u2[p].to_f64_lossy(),
        );
    }
    Ok(tracker
        .finish("geometric-comparison", domain.describe(&grid))
        .with_note("completeness of g2 checked through ring dominance of the big-bang flow"))
}

/// Two independent exhaustion paths from the same initial metric.
///
/// Passes iff `sup |u_A - u_B|` on `r <= min reference radius` stays below
/// `limit_tol_A + limit_tol_B + 10 h²`.
pub fn uniqueness_experiment<T: Real>(
    u0: &dyn InitialData<T>,
    plan_a: &ExhaustionPlan,
    plan_b: &ExhaustionPlan,
    cfg: &FlowConfig,
) -> Result<VerifierReport> {
    let (a, b) = rayon::join(|| construct_family(u0, plan_a, cfg), || construct_family(u0, plan_b, cfg));
    let (a, b) = (a?, b?);
    let mut report = compare_limits(
        &a.limit,
        &b.limit,
        plan_a.reference_radius.min(plan_b.reference_radius),
        plan_a.limit_tol + plan_b.limit_tol,
    )?;
    let same = if plan_a == plan_b { "; plans are identical" } else { "" };
    report.note = Some(format!("path A converged: {}, path B converged: {}{same}", a.converged, b.converged));
    Ok(report)
}

/// Sup-difference of two limit trajectories resampled onto the grid of `a`.
pub fn compare_limits<T: Real>(
    a: &Trajectory<T>,
    b: &Trajectory<T>,
    r_max: f64,
    limit_tol: f64,
) -> Result<VerifierReport> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!("limits have {} and {} snapshots", a.len(), b.len())));
    }
    let grid = a.grid().ok_or_else(|| Error::Usage("empty trajectory".into()))?.clone();
    let domain = CheckDomain::Radius { r_max };
    let nodes = domain.nodes(&grid);
    let h = domain.spacing(&grid).to_f64_lossy();
    let tol = limit_tol + 10.0 * h * h;
    let mut tracker = MarginTracker::new();
    for (sa, sb) in a.snapshots.iter().zip(&b.snapshots) {
        if (sa.t - sb.t).abs() > T::lit(1e-12) {
            return Err(Error::Usage(format!("snapshot times differ: {} vs {}", sa.t, sb.t)));
        }
        let vb: ScalarField<T> = sb.u.resample(&grid)?;
        let (x, y) = (sa.u.values(), vb.values());
        for &p in &nodes {
            let loc = super::report::Location {
                t: sa.t.to_f64_lossy(),
                r: grid.r(p).to_f64_lossy(),
                theta: grid.theta(p).to_f64_lossy(),
            };
            tracker.push(-(x[p] - y[p]).abs().to_f64_lossy(), tol, loc);
        }
    }
    Ok(tracker.finish("uniqueness", domain.describe(&grid)))
}
