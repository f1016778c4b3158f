//! Runs the exhaustion family from a named initial metric and prints the
//! monotonicity and convergence tables.

use std::time::Instant;

use ricci_disc::construction::{construct_family, ExhaustionPlan};
use ricci_disc::metrics::InitialSpec;
use ricci_disc::solver::FlowConfig;

fn main() -> ricci_disc::Result<()> {
    let mut args = std::env::args().skip(1);
    let spec: InitialSpec = args.next().unwrap_or_else(|| "restricted-hyperbolic:R=2".into()).parse()?;
    let mut plan = ExhaustionPlan::default();
    if let Some(c) = args.next() {
        plan.collar = c.parse().unwrap();
    }
    if let Some(e) = args.next() {
        plan.eta = e.parse().unwrap();
    }
    let start = Instant::now();
    let res = construct_family::<f64>(&spec, &plan, &FlowConfig::default())?;
    println!("elapsed {:.2?}", start.elapsed());
    for (m, h) in res.monotonicity.iter().zip(&res.history) {
        let worst = m.worst_increase.iter().map(|x| x.1).fold(f64::NEG_INFINITY, f64::max);
        let change: Vec<String> = h.sup_change.iter().step_by(4).map(|(t, c)| format!("{t:.2}:{c:.3e}")).collect();
        println!("{:>2}->{:<2} incr {worst:+.3e} tol {:.1e}  change {}", m.k_lo, m.k_hi, m.tolerance, change.join(" "));
    }
    println!("steps {:?}", res.summary().steps);
    Ok(())
}
