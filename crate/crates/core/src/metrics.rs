//! Conformal factors, Gauss curvature, and initial data.
//!
//! A metric `e^{2u}|dz|²` is stored through its log conformal factor `u`.
//! The closed forms here are the constant-curvature discs and the two
//! self-similar flows built from them:
//!
//! * hyperbolic factor on the disc of radius `a` with curvature `-c`:
//!   `ln(2a / (√c (a² - |x|²)))`,
//! * big-bang flow `ln(2/(1-|x|²)) + ½ ln(2t)` (curvature `-1/(2t)`),
//! * expanding hyperbolic flow on radius `a`:
//!   `ln(2a/(a²-|x|²)) + ½ ln(2t+1)` (curvature `-1/(2t+1)`).

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::DiscGrid;
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct ConformalMetric<T: Real> {
    pub u: ScalarField<T>,
    /// Whether the continuum metric this field samples is complete.
    pub complete: bool,
}

impl<T: Real> ConformalMetric<T> {
    pub fn new(u: ScalarField<T>, complete: bool) -> Self {
        Self { u, complete }
    }

    pub fn grid(&self) -> &Arc<DiscGrid<T>> {
        self.u.grid()
    }

    pub fn curvature(&self) -> ScalarField<T> {
        gauss_curvature(&self.u)
    }
}

/// `ln(2a / (√c (a² - r²)))`.
pub fn hyperbolic_profile<T: Real>(r: T, a: T, c: T) -> T {
    (T::lit(2.0) * a / (c.sqrt() * (a * a - r * r))).ln()
}

/// `ln(2/(1-r²)) + ½ ln(2t)`.
pub fn bigbang_profile<T: Real>(r: T, t: T) -> T {
    (T::lit(2.0) / (T::one() - r * r)).ln() + T::lit(0.5) * (T::lit(2.0) * t).ln()
}

/// `ln(2a/(a²-r²)) + ½ ln(2t+1)`.
pub fn expanding_profile<T: Real>(r: T, a: T, t: T) -> T {
    (T::lit(2.0) * a / (a * a - r * r)).ln() + T::lit(0.5) * (T::lit(2.0) * t + T::one()).ln()
}

fn check_inside<T: Real>(grid: &DiscGrid<T>, a: T) -> Result<()> {
    if grid.outer_radius() >= a {
        return Err(Error::Domain(format!(
            "grid truncation radius {} does not lie inside disc of radius {}",
            grid.outer_radius(),
            a
        )));
    }
    Ok(())
}

/// Complete metric of constant curvature `-c` on the disc of radius `a`.
pub fn hyperbolic_factor<T: Real>(grid: &Arc<DiscGrid<T>>, a: T, c: T) -> Result<ScalarField<T>> {
    if !(a > T::zero() && c > T::zero()) {
        return Err(Error::Domain(format!("need a > 0 and c > 0, got a = {a}, c = {c}")));
    }
    check_inside(grid, a)?;
    Ok(ScalarField::from_radial(grid.clone(), |r| hyperbolic_profile(r, a, c)))
}

/// Big-bang flow at time `t > 0`; equals `hyperbolic_factor(1, 1/(2t))`.
pub fn bigbang_factor<T: Real>(grid: &Arc<DiscGrid<T>>, t: T) -> Result<ScalarField<T>> {
    if !(t > T::zero()) {
        return Err(Error::Domain(format!("big-bang flow needs t > 0, got {t}")));
    }
    check_inside(grid, T::one())?;
    Ok(ScalarField::from_radial(grid.clone(), |r| bigbang_profile(r, t)))
}

/// Expanding hyperbolic flow on the disc of radius `a` at time `t >= 0`.
pub fn expanding_hyperbolic<T: Real>(grid: &Arc<DiscGrid<T>>, a: T, t: T) -> Result<ScalarField<T>> {
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!("expanding flow needs t >= 0, got {t}")));
    }
    check_inside(grid, a)?;
    Ok(ScalarField::from_radial(grid.clone(), |r| expanding_profile(r, a, t)))
}

/// `K = -e^{-2u} Δu`.
///
/// Entries on the truncation ring ([`DiscGrid::ring_nodes`]) come from the
/// one-sided stencil and are boundary quality only.
pub fn gauss_curvature<T: Real>(u: &ScalarField<T>) -> ScalarField<T> {
    let lap = u.laplacian();
    let values = u.values().iter().zip(lap.values()).map(|(&ui, &li)| -(-(ui + ui)).exp() * li).collect();
    ScalarField::from_values_unchecked(u.grid().clone(), values)
}

/// Width of the quadratic blend in the cutoff `Ψ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSpec {
    pub eta: f64,
}

impl CutoffSpec {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("cutoff width eta must be positive, got {eta}")));
        }
        Ok(Self { eta })
    }
}

/// `Ψ(s) = 0` for `s <= -η`, `(s+η)²/(4η)` on `(-η, η)`, `s` for `s >= η`.
pub fn psi<T: Real>(s: T, spec: CutoffSpec) -> T {
    let eta = T::lit(spec.eta);
    if s <= -eta {
        T::zero()
    } else if s >= eta {
        s
    } else {
        (s + eta) * (s + eta) / (T::lit(4.0) * eta)
    }
}

pub fn psi_prime<T: Real>(s: T, spec: CutoffSpec) -> T {
    let eta = T::lit(spec.eta);
    if s <= -eta {
        T::zero()
    } else if s >= eta {
        T::one()
    } else {
        (s + eta) / (T::lit(2.0) * eta)
    }
}

/// Radius of the `k`-th exhausting disc, `1 - 1/(k+1)`.
pub fn exhaustion_radius<T: Real>(k: usize) -> T {
    T::one() - T::one() / T::from_usize_lossy(k + 1)
}

/// Node-wise tolerance for curvature preconditions: `10 h² (1 + |K|)`.
pub fn curvature_precondition_tol<T: Real>(grid: &DiscGrid<T>, k: T) -> T {
    let h = grid.max_spacing();
    T::lit(10.0) * h * h * (T::one() + k.abs())
}

/// Verifies `K[u] <= bound` at interior nodes up to the discretization tolerance.
pub fn check_curvature_upper<T: Real>(u: &ScalarField<T>, bound: T, what: &str) -> Result<()> {
    check_curvature_upper_within(u, bound, u.grid().outer_radius(), what)
}

/// [`check_curvature_upper`] restricted to interior nodes with `r <= r_max`.
pub fn check_curvature_upper_within<T: Real>(u: &ScalarField<T>, bound: T, r_max: T, what: &str) -> Result<()> {
    let k = gauss_curvature(u);
    let g = u.grid();
    let mut worst: Option<(usize, T)> = None;
    for p in g.interior_within(r_max) {
        let excess = k.values()[p] - bound - curvature_precondition_tol(g, k.values()[p]);
        if excess > T::zero() && worst.is_none_or(|(_, w)| excess > w) {
            worst = Some((p, excess));
        }
    }
    match worst {
        None => Ok(()),
        Some((p, _)) => Err(Error::Precondition {
            what: format!("{what}: K <= {bound}"),
            node: p,
            r: g.r(p).to_f64_lossy(),
            value: k.values()[p].to_f64_lossy(),
        }),
    }
}

/// Smoothed maximum `ū_k = u0 + Ψ(h_k - u0)` of `u0` and the hyperbolic
/// factor of curvature `-k²` on `D_k`.
///
/// `u0` must live on a grid inside `D_k` and have `K <= -1`.
pub fn smoothed_max_initial<T: Real>(
    u0: &ConformalMetric<T>,
    k: usize,
    spec: CutoffSpec,
) -> Result<ConformalMetric<T>> {
    if k == 0 {
        return Err(Error::Config("exhaustion index k must be >= 1".into()));
    }
    let a = exhaustion_radius::<T>(k);
    let kk = T::from_usize_lossy(k);
    let hk = hyperbolic_factor(u0.grid(), a, kk * kk)?;
    check_curvature_upper(&u0.u, -T::one(), "initial metric")?;
    let u = u0.u.zip_with(&hk, |u, h| u + psi(h - u, spec))?;
    Ok(ConformalMetric::new(u, true))
}

/// Named initial metrics with `K <= -1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum InitialSpec {
    /// Hyperbolic metric of the disc of radius `R > 1`, restricted to the unit disc.
    RestrictedHyperbolic { big_r: f64 },
    /// `hyperbolic(R, 1) - amp (1 - |x|²)`; `K <= -1` for every `amp >= 0`.
    ScaledFlatLike { big_r: f64, amp: f64 },
    /// Complete hyperbolic metric of the unit disc.
    CompleteHyperbolic,
    /// Expanding hyperbolic flow on radius `a` at `t = 0` (curvature `-1`).
    ExpandingHyperbolic { a: f64 },
}

impl InitialSpec {
    pub fn is_complete(&self) -> bool {
        matches!(self, Self::CompleteHyperbolic | Self::ExpandingHyperbolic { .. })
    }

    /// Closed-form profile value at radius `r`.
    pub fn profile<T: Real>(&self, r: T) -> T {
        match *self {
            Self::RestrictedHyperbolic { big_r } => hyperbolic_profile(r, T::lit(big_r), T::one()),
            Self::ScaledFlatLike { big_r, amp } => {
                hyperbolic_profile(r, T::lit(big_r), T::one()) - T::lit(amp) * (T::one() - r * r)
            }
            Self::CompleteHyperbolic => hyperbolic_profile(r, T::one(), T::one()),
            Self::ExpandingHyperbolic { a } => hyperbolic_profile(r, T::lit(a), T::one()),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::RestrictedHyperbolic { big_r } if !(big_r > 1.0) => {
                Err(Error::Config(format!("restricted-hyperbolic needs R > 1, got {big_r}")))
            }
            Self::ScaledFlatLike { big_r, amp } if !(big_r > 1.0 && amp >= 0.0) => {
                Err(Error::Config(format!("scaled-flat-like needs R > 1 and amp >= 0, got R = {big_r}, amp = {amp}")))
            }
            Self::ExpandingHyperbolic { a } if !(a > 0.0 && a <= 1.0) => {
                Err(Error::Config(format!("expanding-hyperbolic needs 0 < a <= 1, got {a}")))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for InitialSpec {
    type Err = Error;

    /// Parses descriptors such as `restricted-hyperbolic:R=2.0`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, params) = match s.split_once(':') {
            Some((n, p)) => (n.trim(), p.trim()),
            None => (s.trim(), ""),
        };
        let mut kv = Vec::new();
        for item in params.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (k, v) =
                item.split_once('=').ok_or_else(|| Error::Usage(format!("malformed parameter '{item}' in '{s}'")))?;
            let v: f64 = v.trim().parse().map_err(|_| Error::Usage(format!("parameter {k} is not a number: '{v}'")))?;
            kv.push((k.trim().to_string(), v));
        }
        let take = |key: &str, default: Option<f64>, kv: &mut Vec<(String, f64)>| -> Result<f64> {
            match kv.iter().position(|(k, _)| k == key) {
                Some(i) => Ok(kv.remove(i).1),
                None => default.ok_or_else(|| Error::Usage(format!("'{name}' requires parameter {key}"))),
            }
        };
        let spec = match name {
            "restricted-hyperbolic" => Self::RestrictedHyperbolic { big_r: take("R", Some(2.0), &mut kv)? },
            "scaled-flat-like" => {
                Self::ScaledFlatLike { big_r: take("R", Some(2.0), &mut kv)?, amp: take("amp", Some(0.5), &mut kv)? }
            }
            "complete-hyperbolic" => Self::CompleteHyperbolic,
            "expanding-hyperbolic" => Self::ExpandingHyperbolic { a: take("a", Some(1.0), &mut kv)? },
            other => return Err(Error::Usage(format!("unknown initial metric '{other}'"))),
        };
        if let Some((k, _)) = kv.first() {
            return Err(Error::Usage(format!("unknown parameter '{k}' for '{name}'")));
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RestrictedHyperbolic { big_r } => write!(f, "restricted-hyperbolic:R={big_r}"),
            Self::ScaledFlatLike { big_r, amp } => write!(f, "scaled-flat-like:R={big_r},amp={amp}"),
            Self::CompleteHyperbolic => write!(f, "complete-hyperbolic"),
            Self::ExpandingHyperbolic { a } => write!(f, "expanding-hyperbolic:a={a}"),
        }
    }
}

/// Samples a named initial metric on `grid` and checks `K <= -1`.
///
/// Complete profiles are only checked on `r <= 0.8 a`: next to the rim the
/// finite-difference curvature of a blowing-up profile is not resolved.
pub fn sample_initial<T: Real>(spec: &InitialSpec, grid: &Arc<DiscGrid<T>>) -> Result<ConformalMetric<T>> {
    spec.validate()?;
    let reach = match *spec {
        InitialSpec::RestrictedHyperbolic { big_r } | InitialSpec::ScaledFlatLike { big_r, .. } => big_r,
        InitialSpec::CompleteHyperbolic => 1.0,
        InitialSpec::ExpandingHyperbolic { a } => a,
    };
    check_inside(grid, T::lit(reach))?;
    let u = ScalarField::from_radial(grid.clone(), |r| spec.profile(r));
    u.ensure_finite()?;
    let r_max = if spec.is_complete() { T::lit(0.8) * grid.outer_radius() } else { grid.outer_radius() };
    check_curvature_upper_within(&u, -T::one(), r_max, &format!("generated metric {spec}"))?;
    Ok(ConformalMetric::new(u, spec.is_complete()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Reduce;
    use crate::grid::build_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hyperbolic_factor_matches_exhaustion_formula() {
        // h_k(x) = ln((2/(k+1)) / ((1 - 1/(k+1))² - |x|²)) against the generic closed form.
        for k in [1usize, 2, 5, 24] {
            let kf = k as f64;
            let a = exhaustion_radius::<f64>(k);
            for r in [0.0, 0.1, 0.3] {
                let direct = ((2.0 / (kf + 1.0)) / ((1.0 - 1.0 / (kf + 1.0)).powi(2) - r * r)).ln();
                assert_abs_diff_eq!(hyperbolic_profile(r, a, kf * kf), direct, epsilon = 1e-13);
            }
        }
        assert_abs_diff_eq!(hyperbolic_profile(0.0, 0.5, 1.0), 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(hyperbolic_profile(0.0, 1.0, 1.0), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn bigbang_and_expanding_closed_forms() {
        let g = build_grid::<f64>(1.0, 32, 1, 2.0, 0.02).unwrap();
        let bb = bigbang_factor(&g, 0.5).unwrap();
        let h = hyperbolic_factor(&g, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(bb.values()[0], 2f64.ln(), epsilon = 1e-15);
        assert!(bb.sub(&h).unwrap().reduce(Reduce::SupNorm) < 1e-14);
        let e0 = expanding_hyperbolic(&g, 1.0, 0.0).unwrap();
        assert!(e0.sub(&h).unwrap().reduce(Reduce::SupNorm) < 1e-14);
        let e1 = expanding_hyperbolic(&g, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(e1.values()[0], 2f64.ln() + 0.5 * 3f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(e1.values()[0], 1.242_453_324_894, epsilon = 1e-12);
        assert!(bigbang_factor(&g, 0.0).is_err());
        // c = 1/(2t) with t = 1/2 coincides with c = 1.
        let hc = hyperbolic_factor(&g, 1.0, 1.0 / (2.0 * 0.5)).unwrap();
        assert!(hc.sub(&h).unwrap().reduce(Reduce::SupNorm) == 0.0);
    }

    #[test]
    fn flat_and_paraboloid_curvature() {
        let g = build_grid::<f64>(1.0, 64, 32, 1.0, 0.05).unwrap();
        let flat = ScalarField::constant(g.clone(), 0.0);
        assert_eq!(gauss_curvature(&flat).reduce(Reduce::SupNorm), 0.0);
        // u = -|x|², Δu = -4, K = 4 e^{2|x|²}.
        let u = ScalarField::from_radial(g.clone(), |r| -r * r);
        let k = gauss_curvature(&u);
        for p in g.interior_nodes() {
            let r = g.r(p);
            assert_abs_diff_eq!(k.values()[p], 4.0 * (2.0 * r * r).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn psi_branches() {
        let spec = CutoffSpec::new(0.1).unwrap();
        assert_eq!(psi(-0.2, spec), 0.0);
        assert_eq!(psi_prime(-0.2, spec), 0.0);
        assert_eq!(psi(0.2, spec), 0.2);
        assert_eq!(psi_prime(0.2, spec), 1.0);
        assert_abs_diff_eq!(psi(0.0, spec), 0.025, epsilon = 1e-16);
        assert!(CutoffSpec::new(0.0).is_err());
    }

    #[test]
    fn parses_descriptors() {
        let s: InitialSpec = "restricted-hyperbolic:R=2.0".parse().unwrap();
        assert_eq!(s, InitialSpec::RestrictedHyperbolic { big_r: 2.0 });
        assert_eq!(s.to_string().parse::<InitialSpec>().unwrap(), s);
        let f: InitialSpec = "scaled-flat-like:R=3,amp=0.25".parse().unwrap();
        assert_eq!(f, InitialSpec::ScaledFlatLike { big_r: 3.0, amp: 0.25 });
        assert!("mystery".parse::<InitialSpec>().is_err());
        assert!("restricted-hyperbolic:R=0.5".parse::<InitialSpec>().is_err());
        assert!("restricted-hyperbolic:Q=3".parse::<InitialSpec>().is_err());
        assert!("restricted-hyperbolic:R".parse::<InitialSpec>().is_err());
    }

    #[test]
    fn sample_corpus() {
        let g = build_grid::<f64>(1.0, 96, 1, 2.0, 0.02).unwrap();
        let rh = sample_initial(&InitialSpec::RestrictedHyperbolic { big_r: 2.0 }, &g).unwrap();
        assert!(!rh.complete);
        assert_abs_diff_eq!(rh.u.values()[0], 0.0, epsilon = 1e-15);
        let k = rh.curvature();
        let worst = k.reduce_over(g.interior_nodes(), Reduce::Max);
        assert!((worst + 1.0).abs() < 1e-3);
        let flat = sample_initial(&InitialSpec::ScaledFlatLike { big_r: 2.0, amp: 0.5 }, &g).unwrap();
        assert!(flat.u.values()[0] < rh.u.values()[0]);
        let ch = sample_initial(&InitialSpec::CompleteHyperbolic, &g).unwrap();
        assert!(ch.complete);
        let bb = bigbang_factor(&g, 0.5).unwrap();
        assert!(ch.u.sub(&bb).unwrap().reduce(Reduce::SupNorm) < 1e-14);
    }

    #[test]
    fn curvature_precondition_names_worst_node() {
        let g = build_grid::<f64>(0.8, 32, 1, 1.0, 0.05).unwrap();
        let flat = ConformalMetric::new(ScalarField::constant(g.clone(), 0.0), false);
        let err = smoothed_max_initial(&flat, 4, CutoffSpec::new(0.1).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Precondition { .. }));
    }
}
