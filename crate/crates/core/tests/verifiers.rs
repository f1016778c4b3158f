use proptest::prelude::*;

use ricci_disc::construction::ExhaustionPlan;
use ricci_disc::exact::{bigbang_trajectory, expanding_trajectory, linspace};
use ricci_disc::field::ScalarField;
use ricci_disc::grid::build_grid;
use ricci_disc::metrics::{hyperbolic_factor, ConformalMetric, InitialSpec};
use ricci_disc::solver::{FlowConfig, FlowState, PolicyRecord, Trajectory};
use ricci_disc::verifiers::{
    admissibility_report, barrier_b, barrier_c, curvature_sandwich, direct_comparison, geometric_comparison,
    interpolate_time, schwarz_check, supersolution_residual, time_shift_transform, uniqueness_experiment, CheckDomain,
    Location, MarginTracker, ReportBundle, VerifierReport,
};
use ricci_disc::{Error, Reduce};

fn radial(n_r: usize) -> std::sync::Arc<ricci_disc::DiscGrid> {
    build_grid::<f64>(1.0, n_r, 1, 1.5, 0.02).unwrap()
}

#[test]
fn admissibility_of_the_bigbang_flow() {
    let g = radial(256);
    let times = linspace(0.1, 1.0, 10);
    let traj = bigbang_trajectory(&g, &times).unwrap();
    let (params, proxy) = admissibility_report(&traj, &[0.1, 0.5], CheckDomain::default()).unwrap();
    let h = CheckDomain::default().spacing(&g);
    let tol = 10.0 * h * h;
    assert!((params.c_upper + 0.5).abs() <= tol, "{}", params.c_upper);
    for (eps, c) in params.c_eps {
        assert!((c - 1.0 / (2.0 * eps)).abs() <= tol * (1.0 + c), "eps {eps}: {c}");
    }
    assert!(proxy.pass);
    assert_eq!(proxy.margin, 0.0);
}

#[test]
fn admissibility_of_the_expanding_flow() {
    let g = radial(256);
    let traj = expanding_trajectory(&g, 1.0, &linspace(0.0, 1.0, 11)).unwrap();
    let (params, proxy) = admissibility_report(&traj, &[0.0, 0.5], CheckDomain::default()).unwrap();
    let h = CheckDomain::default().spacing(&g);
    assert!((params.c_upper + 1.0 / 3.0).abs() <= 10.0 * h * h);
    assert!((params.c_eps[0].1 - 1.0).abs() <= 20.0 * h * h);
    assert!((params.c_eps[1].1 - 0.5).abs() <= 20.0 * h * h);
    assert!(proxy.pass && proxy.margin > 0.0);
}

#[test]
fn flat_metric_fails_the_completeness_proxy() {
    let g = radial(64);
    let snaps = [0.0, 0.5, 1.0].iter().map(|&t| FlowState { t, u: ScalarField::constant(g.clone(), 0.0) }).collect();
    let traj = Trajectory::from_snapshots(snaps, PolicyRecord::Frozen).unwrap();
    let (_, proxy) = admissibility_report(&traj, &[], CheckDomain::default()).unwrap();
    assert!(!proxy.pass);
    let loc = proxy.location.unwrap();
    assert_eq!(loc.t, 1.0);
}

#[test]
fn sandwich_is_saturated_by_the_bigbang_flow() {
    let g = radial(256);
    let traj = bigbang_trajectory(&g, &[0.5, 1.0]).unwrap();
    let r = curvature_sandwich(&traj, CheckDomain::default()).unwrap();
    assert!(r.pass);
    assert!(r.margin.abs() <= r.tolerance, "{r:?}");
}

#[test]
fn comparison_preconditions() {
    let g = radial(48);
    let times = [0.0, 0.5, 1.0];
    let ex = expanding_trajectory(&g, 1.0, &times).unwrap();
    let mut lower = ex.clone();
    for s in &mut lower.snapshots {
        s.u = s.u.add_scalar(-0.2);
    }
    assert!(direct_comparison(&lower, &ex, CheckDomain::default()).unwrap().pass);
    assert!(matches!(direct_comparison(&ex, &lower, CheckDomain::default()), Err(Error::Precondition { .. })));

    let mut late = lower.clone();
    let last = late.snapshots.len() - 1;
    for p in g.ring_nodes() {
        late.snapshots[last].u.values_mut()[p] += 1.0;
    }
    match direct_comparison(&late, &ex, CheckDomain::default()) {
        Err(Error::Precondition { what, .. }) => assert!(what.contains("ring dominance")),
        other => panic!("{other:?}"),
    }

    let mut above = ex.clone();
    for s in &mut above.snapshots {
        s.u = s.u.add_scalar(0.1);
    }
    assert!(matches!(geometric_comparison(&above, &ex, 1.0, CheckDomain::default()), Err(Error::Precondition { .. })));
    let bb = bigbang_trajectory(&g, &[0.5, 1.0]).unwrap();
    assert!(matches!(geometric_comparison(&bb, &ex, 1.0, CheckDomain::default()), Err(Error::Usage(_))));
}

#[test]
fn schwarz_errors() {
    let g = radial(64);
    let h = ConformalMetric::new(hyperbolic_factor(&g, 1.0, 1.0).unwrap(), true);
    assert!(matches!(schwarz_check(&h, 0.0, &h, 1.0, true, CheckDomain::default()), Err(Error::Config(_))));
    assert!(matches!(schwarz_check(&h, 1.0, &h, 1.0, false, CheckDomain::default()), Err(Error::Hypothesis { .. })));
    let steep = ConformalMetric::new(hyperbolic_factor(&g, 1.0, 4.0).unwrap(), true);
    match schwarz_check(&steep, 1.0, &h, 1.0, true, CheckDomain::default()) {
        Err(Error::Hypothesis { which, .. }) => assert_eq!(which, "K[g1] >= -a1"),
        other => panic!("{other:?}"),
    }
    match schwarz_check(&h, 1.0, &h, 2.0, true, CheckDomain::default()) {
        Err(Error::Hypothesis { which, .. }) => assert_eq!(which, "K[g2] <= -a2"),
        other => panic!("{other:?}"),
    }
    let same = schwarz_check(&h, 1.0, &h, 1.0, true, CheckDomain::default()).unwrap();
    assert!(same.pass && same.margin == 0.0);
}

#[test]
fn time_shift_tends_to_the_identity() {
    let g = radial(128);
    let ex = expanding_trajectory(&g, 1.0, &linspace(0.0, 1.0, 101)).unwrap();
    let mut gaps = Vec::new();
    for delta in [0.1, 0.05, 0.025] {
        let out = time_shift_transform(&ex, 1.0, delta, None, CheckDomain::default()).unwrap();
        let v0 = &out.trajectory.snapshots[0].u;
        gaps.push(v0.sub(&ex.snapshots[0].u).unwrap().reduce(Reduce::SupNorm));
    }
    assert!(gaps.windows(2).all(|w| w[1] < 0.6 * w[0]), "{gaps:?}");
}

#[test]
fn time_shift_lower_bound() {
    let g = radial(128);
    let ex = expanding_trajectory(&g, 1.0, &linspace(0.0, 1.0, 101)).unwrap();
    let u0 = &ex.snapshots[0].u;
    let out = time_shift_transform(&ex, 1.0, 0.1, Some(u0), CheckDomain::default()).unwrap();
    let lb = out.lower_bound.unwrap();
    assert!(lb.pass && lb.margin > 0.0, "{lb:?}");
    assert!(out.residual.pass);
}

#[test]
fn interpolation_in_time_is_exact_for_cubics() {
    let g = radial(16);
    let times = [0.0, 0.3, 0.5, 0.9, 1.2];
    let cubic = |t: f64| 1.0 + t - 2.0 * t * t + 0.5 * t.powi(3);
    let snaps = times.iter().map(|&t| FlowState { t, u: ScalarField::constant(g.clone(), cubic(t)) }).collect();
    let traj = Trajectory::from_snapshots(snaps, PolicyRecord::Frozen).unwrap();
    for s in [0.1, 0.45, 0.7, 1.1] {
        let v = interpolate_time(&traj, s).unwrap().values()[0];
        assert!((v - cubic(s)).abs() < 1e-13, "{s}");
    }
    assert!(interpolate_time(&traj, 1.5).is_err());
}

#[test]
fn identical_plans_are_unique() {
    let plan = ExhaustionPlan {
        k_list: vec![2, 4],
        snapshot_times: vec![0.5, 1.0],
        n_r_base: 32,
        n_r_per_k: 4,
        ..ExhaustionPlan::default()
    };
    let spec: InitialSpec = "restricted-hyperbolic:R=2".parse().unwrap();
    let r = uniqueness_experiment::<f64>(&spec, &plan, &plan, &FlowConfig::default()).unwrap();
    assert!(r.pass);
    assert_eq!(r.margin, 0.0);
    assert!(r.note.unwrap().contains("identical"));
}

#[test]
fn bundle_round_trips_through_json() {
    let mut bundle = ReportBundle::default();
    bundle.push(VerifierReport::from_margin("a", 0.5, 1e-3, "full"));
    bundle.push(VerifierReport::from_margin("b", -0.5, 1e-3, "r <= 0.8").with_note("note").with_location(Location {
        t: 0.5,
        r: 0.25,
        theta: 0.0,
    }));
    assert!(!bundle.all_pass);
    let json = serde_json::to_string(&bundle).unwrap();
    let back: ReportBundle = serde_json::from_str(&json).unwrap();
    assert_eq!(back, bundle);
}

proptest! {
    #[test]
    fn barrier_gap_identity(r in 0.0f64..0.99, t in 1e-3f64..10.0) {
        let gap = barrier_c(r, t) - barrier_b(r, t);
        prop_assert!((gap - 0.5 * ((2.0 * t + 1.0) / (2.0 * t)).ln()).abs() < 1e-12);
        prop_assert!(gap > 0.0);
    }

    #[test]
    fn supersolution_residual_is_positive_and_decreasing(eps in 1e-4f64..10.0, t in 0.0f64..10.0) {
        let a = supersolution_residual(eps, t);
        prop_assert!(a > 0.0 && a <= eps / 2.0);
        prop_assert!(supersolution_residual(eps, t + 1.0) < a);
    }

    #[test]
    fn tracker_keeps_the_deciding_sample(samples in prop::collection::vec((-1.0f64..1.0, 0.0f64..0.5), 1..50)) {
        let mut tracker = MarginTracker::new();
        for (i, &(m, tol)) in samples.iter().enumerate() {
            tracker.push(m, tol, Location { t: i as f64, r: 0.0, theta: 0.0 });
        }
        let r = tracker.finish("x", "full");
        prop_assert_eq!(r.pass, r.margin >= -r.tolerance);
        prop_assert_eq!(r.pass, samples.iter().all(|&(m, tol)| m >= -tol));
        let best = samples.iter().map(|&(m, tol)| m + tol).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(r.margin + r.tolerance, best);
    }

    #[test]
    fn from_margin_verdict(m in -1.0f64..1.0, tol in 0.0f64..0.5) {
        let r = VerifierReport::from_margin("x", m, tol, "full");
        prop_assert_eq!(r.pass, m >= -tol);
        let back: VerifierReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        prop_assert_eq!(back, r);
    }
}
