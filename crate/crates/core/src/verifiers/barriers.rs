use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::metrics::{bigbang_profile, expanding_profile, gauss_curvature};
use crate::scalar::Real;
use crate::solver::Trajectory;

use super::report::{CheckDomain, MarginTracker, VerifierReport};

/// Lower barrier (B): the big-bang flow of the unit disc.
pub fn barrier_b<T: Real>(r: T, t: T) -> T {
    bigbang_profile(r, t)
}

/// Upper barrier (C): the expanding hyperbolic flow of the unit disc.
pub fn barrier_c<T: Real>(r: T, t: T) -> T {
    expanding_profile(r, T::one(), t)
}

/// Measured constants of an admissible flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityParams {
    /// `max K` over every snapshot.
    pub c_upper: f64,
    /// `(eps, -min K over snapshots with t >= eps)`.
    pub c_eps: Vec<(f64, f64)>,
}

fn nonempty<T: Real>(traj: &Trajectory<T>) -> Result<()> {
    if traj.is_empty() {
        return Err(Error::Usage("trajectory has no snapshots".into()));
    }
    Ok(())
}

/// Curvature bounds of the flow, and the completeness proxy: ring values
/// dominate the big-bang flow at every positive snapshot.
pub fn admissibility_report<T: Real>(
    traj: &Trajectory<T>,
    eps_list: &[f64],
    domain: CheckDomain,
) -> Result<(AdmissibilityParams, VerifierReport)> {
    nonempty(traj)?;
    let grid = traj.grid().expect("non-empty").clone();
    let nodes = domain.nodes(&grid);
    let mut c_upper = f64::NEG_INFINITY;
    let mut mins = Vec::with_capacity(traj.len());
    for s in &traj.snapshots {
        let k = gauss_curvature(&s.u);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in &nodes {
            let v = k.values()[p].to_f64_lossy();
            lo = lo.min(v);
            hi = hi.max(v);
        }
        c_upper = c_upper.max(hi);
        mins.push((s.t.to_f64_lossy(), lo));
    }
    let c_eps = eps_list
        .iter()
        .map(|&eps| {
            let lo = mins.iter().filter(|(t, _)| *t >= eps).map(|&(_, m)| m).fold(f64::INFINITY, f64::min);
            (eps, -lo)
        })
        .collect();

    let h = grid.max_spacing().to_f64_lossy();
    let ring: Vec<usize> = grid.ring_nodes().collect();
    let mut tracker = MarginTracker::new();
    for s in traj.snapshots.iter().filter(|s| s.t > T::zero()) {
        let u = s.u.values();
        let t = s.t;
        tracker.push_field(
            &grid,
            &ring,
            t.to_f64_lossy(),
            h,
            |p| (u[p] - barrier_b(grid.r(p), t)).to_f64_lossy(),
            |p| u[p].to_f64_lossy(),
        );
    }
    let report = tracker
        .finish("admissibility:completeness-proxy", "truncation ring")
        .with_note("completeness is certified only through ring dominance of the big-bang flow");
    Ok((AdmissibilityParams { c_upper, c_eps }, report))
}

/// The four barriers for a flow from `u0` with `K[u0] <= -1`:
/// (A) `K >= -1/(2t)`, (B) `u >= big-bang`, (C) `u <= expanding hyperbolic`,
/// (D) `u >= u0 - C t`.
///
/// `u0` is the state at the first snapshot time `t0`; (D) uses the elapsed
/// time `t - t0`, so trajectories that start at `t0 > 0` are handled.
pub fn barrier_report<T: Real>(
    traj: &Trajectory<T>,
    u0: &ScalarField<T>,
    c_upper: f64,
    domain: CheckDomain,
) -> Result<[VerifierReport; 4]> {
    nonempty(traj)?;
    let grid = traj.grid().expect("non-empty").clone();
    let u0 = u0.resample(&grid)?;
    let nodes = domain.nodes(&grid);
    let h = domain.spacing(&grid).to_f64_lossy();
    let cc = T::lit(c_upper);
    let t0 = traj.snapshots[0].t;
    let mut trackers: [MarginTracker; 4] = Default::default();
    for s in &traj.snapshots {
        let t = s.t;
        let tf = t.to_f64_lossy();
        let u = s.u.values();
        let u0v = u0.values();
        if t > T::zero() {
            let k = gauss_curvature(&s.u);
            let kv = k.values();
            let floor = -T::one() / (T::lit(2.0) * t);
            trackers[0].push_field(&grid, &nodes, tf, h, |p| (kv[p] - floor).to_f64_lossy(), |p| kv[p].to_f64_lossy());
            trackers[1].push_field(
                &grid,
                &nodes,
                tf,
                h,
                |p| (u[p] - barrier_b(grid.r(p), t)).to_f64_lossy(),
                |p| u[p].to_f64_lossy(),
            );
        }
        trackers[2].push_field(
            &grid,
            &nodes,
            tf,
            h,
            |p| (barrier_c(grid.r(p), t) - u[p]).to_f64_lossy(),
            |p| u[p].to_f64_lossy(),
        );
        trackers[3].push_field(
            &grid,
            &nodes,
            tf,
            h,
            |p| (u[p] - u0v[p] + cc * (t - t0)).to_f64_lossy(),
            |p| u[p].to_f64_lossy(),
        );
    }
    let d = domain.describe(&grid);
    let [a, b, c, dd] = trackers;
    Ok([
        a.finish("barrier-A:curvature-floor", d.clone()),
        b.finish("barrier-B:big-bang-lower", d.clone()),
        c.finish("barrier-C:expanding-upper", d.clone()),
        dd.finish("barrier-D:linear-lower", d).with_note(format!("C = {c_upper}")),
    ])
}

/// `-1/(2t) <= K <= -1/(2t+1)` at every positive snapshot.
///
/// The report carries the worse of the two sides; the note records both.
pub fn curvature_sandwich<T: Real>(traj: &Trajectory<T>, domain: CheckDomain) -> Result<VerifierReport> {
    nonempty(traj)?;
    let grid = traj.grid().expect("non-empty").clone();
    let nodes = domain.nodes(&grid);
    let h = domain.spacing(&grid).to_f64_lossy();
    let mut lower = MarginTracker::new();
    let mut upper = MarginTracker::new();
    for s in traj.snapshots.iter().filter(|s| s.t > T::zero()) {
        let t = s.t.to_f64_lossy();
        let k = gauss_curvature(&s.u);
        let kv = k.values();
        lower.push_field(&grid, &nodes, t, h, |p| kv[p].to_f64_lossy() + 1.0 / (2.0 * t), |p| kv[p].to_f64_lossy());
        upper.push_field(
            &grid,
            &nodes,
            t,
            h,
            |p| -1.0 / (2.0 * t + 1.0) - kv[p].to_f64_lossy(),
            |p| kv[p].to_f64_lossy(),
        );
    }
    let d = domain.describe(&grid);
    let lo = lower.finish("curvature-sandwich:lower", d.clone());
    let hi = upper.finish("curvature-sandwich:upper", d.clone());
    let note = format!(
        "lower margin {:.6e} (tol {:.3e}), upper margin {:.6e} (tol {:.3e})",
        lo.margin, lo.tolerance, hi.margin, hi.tolerance
    );
    let worse = if lo.margin + lo.tolerance <= hi.margin + hi.tolerance { lo } else { hi };
    let mut report = VerifierReport { check: "curvature-sandwich".into(), ..worse };
    report.note = Some(note);
    Ok(report)
}
