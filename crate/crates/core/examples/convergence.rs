//! Grid-refinement study on the expanding hyperbolic exact solution.

use std::time::Instant;

use ricci_disc::build_grid;
use ricci_disc::field::Reduce;
use ricci_disc::metrics::expanding_hyperbolic;
use ricci_disc::solver::{run, BoundaryKind, FlowConfig};

fn main() -> ricci_disc::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().unwrap()).collect();
    let clustering = args.first().copied().unwrap_or(2.0);
    let collar = args.get(1).copied().unwrap_or(0.02);
    let mut prev: Option<(f64, f64)> = None;
    for n_r in [64, 128, 256] {
        let g = build_grid::<f64>(1.0, n_r, 1, clustering, collar)?;
        let u0 = expanding_hyperbolic(&g, 1.0, 0.0)?;
        let start = Instant::now();
        let traj = run(&u0, BoundaryKind::ConstantCurvature { c0: 1.0 }, 1.0, &FlowConfig::default())?;
        let exact = expanding_hyperbolic(&g, 1.0, 1.0)?;
        let err = traj.last().unwrap().u.sub(&exact)?.reduce(Reduce::SupNorm);
        let h = g.max_spacing();
        let order = prev.map(|(e, hp)| (e / err).ln() / (hp / h).ln());
        println!(
            "n_r {n_r:4}  h {h:.3e}  err {err:.3e}  order {:?}  steps {}  {:.2?}",
            order,
            traj.metadata["steps"],
            start.elapsed()
        );
        prev = Some((err, h));
    }
    Ok(())
}
