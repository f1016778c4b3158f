use std::sync::Arc;

use proptest::prelude::*;

use ricci_disc::exact::{bigbang_trajectory, expanding_trajectory, linspace};
use ricci_disc::field::ScalarField;
use ricci_disc::grid::build_grid;
use ricci_disc::metrics::{bigbang_factor, bigbang_profile, expanding_hyperbolic, hyperbolic_factor};
use ricci_disc::solver::{curvature_evolution_residual, run, BoundaryKind, FlowConfig, Scheme};
use ricci_disc::{Error, Reduce};

fn sup_diff(a: &ScalarField<f64>, b: &ScalarField<f64>) -> f64 {
    a.sub(b).unwrap().reduce(Reduce::SupNorm)
}

#[test]
fn tracks_the_bigbang_flow() {
    let g = build_grid::<f64>(1.0, 128, 1, 1.5, 0.02).unwrap();
    let t0 = 0.25;
    let u0 = bigbang_factor(&g, t0).unwrap();
    let cfg = FlowConfig::default().with_snapshots(vec![0.25, 0.5, 0.75]);
    let traj = run(&u0, BoundaryKind::ConstantCurvature { c0: 1.0 / (2.0 * t0) }, 0.75, &cfg).unwrap();
    let h = g.max_spacing();
    for s in &traj.snapshots {
        let exact = bigbang_factor(&g, t0 + s.t).unwrap();
        let err = sup_diff(&s.u, &exact);
        assert!(err <= 2.0 * h * h, "t = {}: error {err}, 2h² = {}", s.t, 2.0 * h * h);
    }
}

#[test]
fn semi_implicit_converges_to_the_expanding_flow() {
    let mut errs = Vec::new();
    for n_r in [64, 128] {
        let g = build_grid::<f64>(1.0, n_r, 1, 1.5, 0.02).unwrap();
        let u0 = expanding_hyperbolic(&g, 1.0, 0.0).unwrap();
        let cfg =
            FlowConfig { scheme: Scheme::SemiImplicit, dt_max: 8.0 / (n_r * n_r) as f64, ..FlowConfig::default() };
        let traj = run(&u0, BoundaryKind::ConstantCurvature { c0: 1.0 }, 0.5, &cfg).unwrap();
        errs.push(sup_diff(&traj.last().unwrap().u, &expanding_hyperbolic(&g, 1.0, 0.5).unwrap()));
    }
    assert!(errs[1] < 1e-3, "{errs:?}");
    assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
}

#[test]
fn two_dimensional_grid_matches_radial_grid() {
    let radial = build_grid::<f64>(1.0, 48, 1, 1.5, 0.02).unwrap();
    let polar = build_grid::<f64>(1.0, 48, 16, 1.5, 0.02).unwrap();
    let cfg = FlowConfig::default();
    let kind = BoundaryKind::ConstantCurvature { c0: 1.0 };
    let a = run(&expanding_hyperbolic(&radial, 1.0, 0.0).unwrap(), kind.clone(), 0.1, &cfg).unwrap();
    let b = run(&expanding_hyperbolic(&polar, 1.0, 0.0).unwrap(), kind, 0.1, &cfg).unwrap();
    let (ua, ub) = (&a.last().unwrap().u, &b.last().unwrap().u);
    for p in 0..polar.num_nodes() {
        let i = polar.ring_of(p).0;
        let q = if p == 0 { 0 } else { radial.node(i, 0) };
        assert!((ub.values()[p] - ua.values()[q]).abs() < 1e-6, "node {p}");
    }
}

#[test]
fn scaling_identity() {
    // u_c(t) = u(e^{-2c} t) + c solves the flow from u0 + c.
    let g = build_grid::<f64>(1.0, 96, 1, 1.5, 0.02).unwrap();
    let c: f64 = 0.3;
    let s = (-2.0f64 * c).exp();
    let u0 = hyperbolic_factor(&g, 1.5, 1.0).unwrap();
    let times = vec![0.2, 0.4];
    let base = run(
        &u0,
        BoundaryKind::ConstantCurvature { c0: 1.0 },
        0.4 * s,
        &FlowConfig::default().with_snapshots(vec![0.2 * s, 0.4 * s]),
    )
    .unwrap();
    let lifted = run(
        &u0.add_scalar(c),
        BoundaryKind::ConstantCurvature { c0: s },
        0.4,
        &FlowConfig::default().with_snapshots(times.clone()),
    )
    .unwrap();
    let h = g.max_spacing();
    for (t, ts) in times.iter().zip([0.2 * s, 0.4 * s]) {
        let a = lifted.at_time(*t, 1e-12).unwrap();
        let b = base.at_time(ts, 1e-12).unwrap();
        let err = sup_diff(&a.u, &b.u.add_scalar(c));
        assert!(err <= h * h, "t = {t}: {err}");
    }
}

#[test]
fn negative_curvature_flows_increase() {
    let g = build_grid::<f64>(1.0, 64, 1, 1.5, 0.02).unwrap();
    let u0 = hyperbolic_factor(&g, 2.0, 1.0).unwrap();
    let cfg = FlowConfig::default().with_snapshots(linspace(0.05, 0.5, 10));
    let traj = run(&u0, BoundaryKind::ConstantCurvature { c0: 1.0 }, 0.5, &cfg).unwrap();
    for w in traj.snapshots.windows(2) {
        let d = w[1].u.sub(&w[0].u).unwrap().reduce(Reduce::Min);
        assert!(d >= -1e-12, "decrease {d} between t = {} and {}", w[0].t, w[1].t);
    }
}

#[test]
fn prescribed_ring_data() {
    let g = build_grid::<f64>(1.0, 96, 1, 1.5, 0.02).unwrap();
    let u0 = bigbang_factor(&g, 0.5).unwrap();
    let ring = BoundaryKind::Prescribed(Arc::new(|t: f64, r: f64, _| bigbang_profile(r, 0.5 + t)));
    let traj = run(&u0, ring, 0.5, &FlowConfig::default()).unwrap();
    let h = g.max_spacing();
    let err = sup_diff(&traj.last().unwrap().u, &bigbang_factor(&g, 1.0).unwrap());
    assert!(err <= 2.0 * h * h, "{err}");
    for p in g.ring_nodes() {
        assert_eq!(traj.last().unwrap().u.values()[p], bigbang_profile(g.r(p), 1.0));
    }
}

#[test]
fn single_precision_run() {
    let g = build_grid::<f32>(1.0, 48, 1, 1.5, 0.02).unwrap();
    let u0 = expanding_hyperbolic(&g, 1.0f32, 0.0).unwrap();
    let traj = run(&u0, BoundaryKind::ConstantCurvature { c0: 1.0f32 }, 0.25, &FlowConfig::default()).unwrap();
    let exact = expanding_hyperbolic(&g, 1.0f32, 0.25).unwrap();
    let err = traj.last().unwrap().u.sub(&exact).unwrap().reduce(Reduce::SupNorm);
    assert!(err < 5e-3, "{err}");
}

#[test]
fn curvature_residual_vanishes_on_exact_flows() {
    let mut worst = Vec::new();
    for (n_r, n_t) in [(128, 41), (256, 81)] {
        let g = build_grid::<f64>(1.0, n_r, 1, 1.5, 0.02).unwrap();
        let bb = bigbang_trajectory(&g, &linspace(0.5, 1.5, n_t)).unwrap();
        let ex = expanding_trajectory(&g, 1.0, &linspace(0.0, 1.0, n_t)).unwrap();
        let a = curvature_evolution_residual(&bb, 0.8).unwrap().iter().map(|x| x.1).fold(0.0, f64::max);
        let b = curvature_evolution_residual(&ex, 0.8).unwrap().iter().map(|x| x.1).fold(0.0, f64::max);
        worst.push(a.max(b));
    }
    assert!(worst[1] < worst[0] / 3.0, "{worst:?}");
    assert!(worst[1] < 1e-2, "{worst:?}");
}

#[test]
fn non_finite_values_are_reported_as_divergence() {
    let g = build_grid::<f64>(1.0, 32, 1, 1.5, 0.02).unwrap();
    let u0 = hyperbolic_factor(&g, 2.0, 1.0).unwrap();
    let ring = BoundaryKind::Prescribed(Arc::new(
        |t: f64, r: f64, _| if t > 0.05 { f64::NAN } else { hyperbolic_factor_profile(r) },
    ));
    match run(&u0, ring, 0.2, &FlowConfig::default()).unwrap_err() {
        Error::Divergence { t, node, .. } => {
            assert!(t > 0.05 && t < 0.07, "t = {t}");
            assert!(g.is_ring(node));
        }
        other => panic!("{other:?}"),
    }
}

fn hyperbolic_factor_profile(r: f64) -> f64 {
    ricci_disc::metrics::hyperbolic_profile(r, 2.0, 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ordering_is_preserved(amp in -0.3f64..0.3, lift in 0.0f64..0.3, gamma in 0.0f64..0.3, semi in any::<bool>()) {
        let g = build_grid::<f64>(1.0, 40, 1, 1.5, 0.05).unwrap();
        let rr = g.outer_radius();
        let bump = |r: f64| (1.0 - (r / rr).powi(2)).powi(2);
        let base = expanding_hyperbolic(&g, 1.0, 0.0).unwrap();
        let u0 = ScalarField::from_radial(g.clone(), |r| amp * bump(r) * (3.0 * r).cos()).zip_with(&base, |a, b| a + b).unwrap();
        let v0 = ScalarField::from_radial(g.clone(), |r| lift + gamma * bump(r)).zip_with(&u0, |a, b| a + b).unwrap();
        let scheme = if semi { Scheme::SemiImplicit } else { Scheme::ExplicitRk2 };
        let cfg = FlowConfig { scheme, ..FlowConfig::default() }.with_snapshots(linspace(0.05, 0.3, 6));
        let kind = BoundaryKind::ConstantCurvature { c0: 1.0 };
        let tu = run(&u0, kind.clone(), 0.3, &cfg).unwrap();
        let tv = run(&v0, kind, 0.3, &cfg).unwrap();
        for (a, b) in tu.snapshots.iter().zip(&tv.snapshots) {
            let d = b.u.sub(&a.u).unwrap().reduce(Reduce::Min);
            prop_assert!(d >= -1e-10, "t = {}: min(v - u) = {}", a.t, d);
        }
    }
}
