use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::scalar::Real;
use crate::solver::{FlowState, Trajectory};

use super::report::{CheckDomain, Location, MarginTracker, VerifierReport};

/// Cubic Lagrange interpolation in time through the four snapshots nearest `s`.
pub fn interpolate_time<T: Real>(traj: &Trajectory<T>, s: T) -> Result<ScalarField<T>> {
    let n = traj.len();
    if n < 4 {
        return Err(Error::Usage(format!("time interpolation needs at least 4 snapshots, got {n}")));
    }
    let (t0, t1) = (traj.snapshots[0].t, traj.snapshots[n - 1].t);
    let slack = T::lit(1e-12) * (T::one() + t1.abs());
    if s < t0 - slack || s > t1 + slack {
        return Err(Error::Usage(format!("time {s} lies outside the snapshot range [{t0}, {t1}]")));
    }
    if let Some(exact) = traj.snapshots.iter().find(|x| x.t == s) {
        return Ok(exact.u.clone());
    }
    let i = traj.snapshots.partition_point(|x| x.t <= s);
    let start = i.saturating_sub(2).min(n - 4);
    let w = &traj.snapshots[start..start + 4];
    let mut weights = [T::one(); 4];
    for (k, wk) in weights.iter_mut().enumerate() {
        for m in 0..4 {
            if m != k {
                *wk = *wk * (s - w[m].t) / (w[k].t - w[m].t);
            }
        }
    }
    let grid = w[0].u.grid().clone();
    let values =
        (0..grid.num_nodes()).map(|p| (0..4).fold(T::zero(), |acc, k| acc + weights[k] * w[k].u.values()[p])).collect();
    ScalarField::new(grid, values)
}

/// Residual `u_t - e^{-2u} Δu` at each interior snapshot, by centred
/// non-uniform differences over consecutive triples.
pub fn flow_residual<T: Real>(traj: &Trajectory<T>) -> Result<Vec<(T, ScalarField<T>)>> {
    if traj.len() < 3 {
        return Err(Error::Usage(format!("residual needs at least 3 snapshots, got {}", traj.len())));
    }
    let mut out = Vec::with_capacity(traj.len() - 2);
    for j in 1..traj.len() - 1 {
        let (a, b, c) = (&traj.snapshots[j - 1], &traj.snapshots[j], &traj.snapshots[j + 1]);
        let (h1, h2) = (b.t - a.t, c.t - b.t);
        let (c0, c1, c2) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
        let grid = b.u.grid();
        let (ua, ub, uc) = (a.u.values(), b.u.values(), c.u.values());
        let mut res = vec![T::zero(); grid.num_nodes()];
        for p in grid.interior_nodes() {
            let dt = c0 * ua[p] + c1 * ub[p] + c2 * uc[p];
            res[p] = dt - (-(ub[p] + ub[p])).exp() * grid.laplacian_at(ub, p);
        }
        out.push((b.t, ScalarField::new(grid.clone(), res)?));
    }
    Ok(out)
}

fn max_step<T: Real>(traj: &Trajectory<T>) -> f64 {
    traj.snapshots.windows(2).map(|w| (w[1].t - w[0].t).to_f64_lossy()).fold(0.0, f64::max)
}

/// Compares a measured residual with `expected(t)`; tolerance `10 (h² + Δt²)`.
fn residual_report<T: Real>(
    traj: &Trajectory<T>,
    expected: impl Fn(f64) -> f64,
    check: &str,
    domain: CheckDomain,
) -> Result<VerifierReport> {
    let grid = traj.grid().expect("non-empty").clone();
    let nodes = domain.nodes(&grid);
    let h = domain.spacing(&grid).to_f64_lossy();
    let dt = max_step(traj);
    let tol = 10.0 * (h * h + dt * dt);
    let mut tracker = MarginTracker::new();
    for (t, res) in flow_residual(traj)? {
        let tf = t.to_f64_lossy();
        let e = expected(tf);
        for &p in &nodes {
            let loc = Location { t: tf, r: grid.r(p).to_f64_lossy(), theta: grid.theta(p).to_f64_lossy() };
            tracker.push(-(res.values()[p].to_f64_lossy() - e).abs(), tol, loc);
        }
    }
    Ok(tracker.finish(check, domain.describe(&grid)))
}

/// Output of a time reparametrization: the new trajectory and its residual report.
#[derive(Clone, Debug)]
pub struct TransformResult<T: Real> {
    pub trajectory: Trajectory<T>,
    pub residual: VerifierReport,
    /// `ṽ(0) >= u0`, when initial data was supplied.
    pub lower_bound: Option<VerifierReport>,
}

fn reparametrize<T: Real>(
    traj: &Trajectory<T>,
    times: &[T],
    source_time: impl Fn(T) -> T,
    offset: impl Fn(T) -> T,
) -> Result<Trajectory<T>> {
    let snapshots = times
        .iter()
        .map(|&t| Ok(FlowState { t, u: interpolate_time(traj, source_time(t))?.add_scalar(offset(t)) }))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Trajectory::from_snapshots(snapshots, traj.policy.clone())?;
    out.metadata = traj.metadata.clone();
    Ok(out)
}

fn covered_times<T: Real>(traj: &Trajectory<T>, candidates: &[T], source_time: impl Fn(T) -> T) -> Vec<T> {
    let (t0, t1) = (traj.snapshots[0].t, traj.snapshots[traj.len() - 1].t);
    let slack = T::lit(1e-12) * (T::one() + t1.abs());
    candidates
        .iter()
        .copied()
        .filter(|&t| {
            let s = source_time(t);
            s >= t0 - slack && s <= t1 + slack
        })
        .collect()
}

/// `ṽ(t) = v(e^{-2Cδ}(t + δ)) + Cδ` on `[0, T - δ]`.
///
/// Output times are `0` followed by the input snapshot times that fall in
/// range. If `u0` is given, `ṽ(0) >= u0` is reported as well.
pub fn time_shift_transform<T: Real>(
    traj: &Trajectory<T>,
    c: f64,
    delta: f64,
    u0: Option<&ScalarField<T>>,
    domain: CheckDomain,
) -> Result<TransformResult<T>> {
    if traj.len() < 4 {
        return Err(Error::Usage(format!("time shift needs at least 4 snapshots, got {}", traj.len())));
    }
    let horizon = traj.snapshots[traj.len() - 1].t.to_f64_lossy();
    if !(delta > 0.0 && delta < horizon) {
        return Err(Error::Usage(format!("delta must lie in (0, {horizon}), got {delta}")));
    }
    if !(c >= 0.0) {
        return Err(Error::Config(format!("curvature bound C must be >= 0, got {c}")));
    }
    let scale = T::lit((-2.0 * c * delta).exp());
    let (cd, d) = (T::lit(c * delta), T::lit(delta));
    let source = move |t: T| scale * (t + d);
    let limit = T::lit(horizon - delta);
    let mut candidates = vec![T::zero()];
    candidates.extend(traj.times().into_iter().filter(|&t| t > T::zero() && t <= limit));
    let times = covered_times(traj, &candidates, source);
    if times.len() < 3 {
        return Err(Error::Usage("snapshots too sparse for the shifted time range".into()));
    }
    let out = reparametrize(traj, &times, source, |_| cd)?;
    let residual = residual_report(&out, |_| 0.0, "time-shift:residual", domain)?;
    let lower_bound = match u0 {
        None => None,
        Some(u0) if times[0] == T::zero() => {
            let grid = out.grid().expect("non-empty").clone();
            let base = u0.resample(&grid)?;
            let nodes = domain.nodes(&grid);
            let h = domain.spacing(&grid).to_f64_lossy();
            let (v, b) = (out.snapshots[0].u.values(), base.values());
            let mut tracker = MarginTracker::new();
            tracker.push_field(&grid, &nodes, 0.0, h, |p| (v[p] - b[p]).to_f64_lossy(), |p| v[p].to_f64_lossy());
            Some(tracker.finish("time-shift:initial-lower-bound", domain.describe(&grid)))
        }
        Some(_) => return Err(Error::Usage("snapshots do not cover the shifted initial time".into())),
    };
    Ok(TransformResult { trajectory: out, residual, lower_bound })
}

/// `v_ε(t) = v(ln(εt+1)/ε) + ½ ln(εt+1)`, a strict supersolution with
/// residual `ε/(2(εt+1))`.
///
/// Output times are the input snapshot times whose source time is covered.
pub fn supersolution_transform<T: Real>(
    traj: &Trajectory<T>,
    eps: f64,
    domain: CheckDomain,
) -> Result<TransformResult<T>> {
    if traj.len() < 4 {
        return Err(Error::Usage(format!("supersolution transform needs at least 4 snapshots, got {}", traj.len())));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {eps}")));
    }
    let e = T::lit(eps);
    let log1 = move |t: T| (e * t + T::one()).ln();
    let source = move |t: T| log1(t) / e;
    let times = covered_times(traj, &traj.times(), source);
    if times.len() < 3 {
        return Err(Error::Usage("snapshots too sparse for the transformed time range".into()));
    }
    let out = reparametrize(traj, &times, source, move |t| T::lit(0.5) * log1(t))?;
    let residual = residual_report(&out, |t| supersolution_residual(eps, t), "supersolution:residual", domain)?;
    Ok(TransformResult { trajectory: out, residual, lower_bound: None })
}

/// `ε/(2(εt+1))`.
pub fn supersolution_residual(eps: f64, t: f64) -> f64 {
    eps / (2.0 * (eps * t + 1.0))
}
