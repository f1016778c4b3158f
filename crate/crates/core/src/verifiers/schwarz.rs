use crate::error::{Error, Result};
use crate::metrics::ConformalMetric;
use crate::scalar::Real;

use super::report::{default_tolerance, CheckDomain, MarginTracker, VerifierReport};

/// Identity-map Schwarz inequality `u2 <= u1 + ½ ln(a1/a2)`.
///
/// Hypotheses: `g1` complete with `K[g1] >= -a1`, and `K[g2] <= -a2`. Both
/// curvature hypotheses are verified numerically before the conclusion is
/// checked; a failed hypothesis is an error, not a failed report.
pub fn schwarz_check<T: Real>(
    u1: &ConformalMetric<T>,
    a1: f64,
    u2: &ConformalMetric<T>,
    a2: f64,
    g1_complete: bool,
    domain: CheckDomain,
) -> Result<VerifierReport> {
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::Config(format!("curvature bounds must be positive, got a1 = {a1}, a2 = {a2}")));
    }
    if !g1_complete {
        return Err(Error::Hypothesis {
            which: "g1 complete".into(),
            detail: "first metric is flagged incomplete".into(),
        });
    }
    let grid = u1.grid().clone();
    let v2 = u2.u.resample(&grid)?;
    let nodes = domain.nodes(&grid);
    let h = domain.spacing(&grid).to_f64_lossy();

    let k1 = u1.curvature();
    let k2 = crate::metrics::gauss_curvature(&v2);
    for &p in &nodes {
        let (c1, c2) = (k1.values()[p].to_f64_lossy(), k2.values()[p].to_f64_lossy());
        if c1 < -a1 - default_tolerance(h, c1) {
            return Err(Error::Hypothesis {
                which: "K[g1] >= -a1".into(),
                detail: format!("K = {c1:.6e} < {} at r = {:.6}", -a1, grid.r(p).to_f64_lossy()),
            });
        }
        if c2 > -a2 + default_tolerance(h, c2) {
            return Err(Error::Hypothesis {
                which: "K[g2] <= -a2".into(),
                detail: format!("K = {c2:.6e} > {} at r = {:.6}", -a2, grid.r(p).to_f64_lossy()),
            });
        }
    }

    let shift = T::lit(0.5) * T::lit(a1 / a2).ln();
    let (x1, x2) = (u1.u.values(), v2.values());
    let mut tracker = MarginTracker::new();
    tracker.push_field(&grid, &nodes, 0.0, h, |p| (x1[p] + shift - x2[p]).to_f64_lossy(), |p| x2[p].to_f64_lossy());
    Ok(tracker.finish("schwarz", domain.describe(&grid)))
}
