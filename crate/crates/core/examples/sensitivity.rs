//! Sensitivity of the exhaustion limit to the collar width and cutoff width.

use ricci_disc::construction::{construct_family, ExhaustionPlan};
use ricci_disc::field::Reduce;
use ricci_disc::grid::build_grid;
use ricci_disc::metrics::InitialSpec;
use ricci_disc::solver::FlowConfig;

fn main() -> ricci_disc::Result<()> {
    let spec: InitialSpec = "restricted-hyperbolic:R=2".parse()?;
    let cfg = FlowConfig::default();
    let base = ExhaustionPlan::default();
    let reference = build_grid::<f64>(0.8, 161, 1, 1.0, 1e-9)?;
    let variants = [
        ("collar 0.01", ExhaustionPlan { collar: 0.01, ..base.clone() }),
        ("eta 0.05, k 3,6,12,24", ExhaustionPlan { eta: 0.05, k_list: vec![3, 6, 12, 24], ..base.clone() }),
        ("n_r_per_k 12", ExhaustionPlan { n_r_per_k: 12, ..base.clone() }),
    ];
    let a = construct_family::<f64>(&spec, &base, &cfg)?;
    for (name, plan) in variants {
        let b = construct_family::<f64>(&spec, &plan, &cfg)?;
        let mut out = Vec::new();
        for (sa, sb) in a.limit.snapshots.iter().zip(&b.limit.snapshots) {
            let d = sa.u.resample(&reference)?.sub(&sb.u.resample(&reference)?)?.reduce(Reduce::SupNorm);
            out.push(format!("{:.2}:{d:.2e}", sa.t));
        }
        println!("{name}: {}", out.iter().step_by(2).cloned().collect::<Vec<_>>().join(" "));
    }
    Ok(())
}
