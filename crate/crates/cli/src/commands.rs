use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ricci_disc::construction::{construct_family, construct_limit, ExhaustionPlan};
use ricci_disc::exact::{bigbang_trajectory, expanding_trajectory};
use ricci_disc::io::{read_trajectory, write_construction, write_field_csv, write_trajectory};
use ricci_disc::metrics::{gauss_curvature, sample_initial, InitialSpec};
use ricci_disc::solver::{run, FlowConfig, Scheme};
use ricci_disc::verifiers::{
    admissibility_report, barrier_report, compare_limits, curvature_sandwich, direct_comparison, geometric_comparison,
    supersolution_transform, time_shift_transform, CheckDomain,
};
use ricci_disc::{BoundaryKind, DiscGrid, Error, GridSpec, ReportBundle, Result, Trajectory, VerifierReport};

use crate::config::Settings;

/// Verdict of a command that completed without error.
pub struct Outcome {
    pub pass: bool,
}

impl Outcome {
    fn ok() -> Self {
        Self { pass: true }
    }
}

fn grid(s: &Settings) -> Result<Arc<DiscGrid>> {
    let spec = GridSpec::new(
        s.get("grid.radius")?,
        s.get("grid.n_r")?,
        s.get("grid.n_theta")?,
        s.get("grid.clustering")?,
        s.get("grid.collar")?,
    );
    Ok(Arc::new(DiscGrid::new(spec)?))
}

fn flow(s: &Settings) -> Result<FlowConfig> {
    let scheme: Scheme = s.get("flow.scheme")?;
    let cfg = FlowConfig {
        scheme,
        cfl_safety: s.get("flow.cfl_safety")?,
        dt_max: s.get("flow.dt_max")?,
        snapshot_times: s.list("flow.snapshots")?,
        tolerance: s.get("flow.tolerance")?,
        max_linear_iterations: s.get("flow.max_linear_iterations")?,
        diagnostics_every: s.get("flow.diagnostics_every")?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn initial(s: &Settings, path: &str) -> Result<InitialSpec> {
    s.string(path)?.parse()
}

fn domain(s: &Settings, path: &str) -> Result<CheckDomain> {
    let raw = s.string(path)?;
    let (kind, value) = match raw.split_once(':') {
        Some((k, v)) => (k.trim(), Some(v.trim())),
        None => (raw.trim(), None),
    };
    let number = |v: Option<&str>| -> Result<f64> {
        v.and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Config(format!("'{path}' = '{raw}' needs a numeric parameter")))
    };
    match kind {
        "core" => Ok(CheckDomain::Core { fraction: number(value)? }),
        "radius" => Ok(CheckDomain::Radius { r_max: number(value)? }),
        "full" => Ok(CheckDomain::Full),
        _ => Err(Error::Config(format!("unknown domain '{raw}' for '{path}' (core:<f> | radius:<r> | full)"))),
    }
}

/// A trajectory directory, or a construction directory whose limit is used.
fn load(path: &Path) -> Result<Trajectory> {
    let summary = path.join("summary.json");
    let dir = if summary.exists() {
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary)?)?;
        let limit = value["limit"]
            .as_str()
            .ok_or_else(|| Error::Format { path: summary.clone(), detail: "missing \"limit\" entry".into() })?;
        path.join(limit)
    } else {
        path.to_path_buf()
    };
    let traj = read_trajectory(&dir)?;
    if traj.is_empty() {
        return Err(Error::Usage(format!("trajectory {} has no snapshots", dir.display())));
    }
    Ok(traj)
}

fn print_report(r: &VerifierReport) {
    let verdict = if r.pass { "PASS" } else { "FAIL" };
    println!("{verdict} {}: margin {:.6e}, tolerance {:.3e} ({})", r.check, r.margin, r.tolerance, r.domain);
}

fn write_bundle(out: &Path, bundle: &ReportBundle) -> Result<()> {
    fs::create_dir_all(out)?;
    let path = out.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(bundle)? + "\n")?;
    for r in &bundle.reports {
        print_report(r);
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn exact(s: &Settings, out: &Path) -> Result<Outcome> {
    let g = grid(s)?;
    let horizon: f64 = s.get("exact.horizon")?;
    let count: usize = s.get("exact.count")?;
    if !(horizon > 0.0 && horizon.is_finite()) || count == 0 {
        return Err(Error::Config(format!("exact needs horizon > 0 and count >= 1, got {horizon} and {count}")));
    }
    let positive: Vec<f64> = (1..=count).map(|i| horizon * i as f64 / count as f64).collect();
    let traj = match s.string("exact.solution")?.as_str() {
        "bigbang" => bigbang_trajectory(&g, &positive)?,
        "expanding" => {
            let mut times = vec![0.0];
            times.extend(positive);
            expanding_trajectory(&g, s.get("exact.a")?, &times)?
        }
        other => return Err(Error::Config(format!("unknown exact solution '{other}' (bigbang | expanding)"))),
    };
    write_trajectory(out, &traj)?;
    println!("wrote {} ({} snapshots)", out.display(), traj.len());
    Ok(Outcome::ok())
}

pub fn run_flow(s: &Settings, out: &Path) -> Result<Outcome> {
    let g = grid(s)?;
    let cfg = flow(s)?;
    let spec = initial(s, "run.initial")?;
    let horizon: f64 = s.get("run.horizon")?;
    let boundary = match s.string("run.boundary")?.as_str() {
        "constant-curvature" => BoundaryKind::ConstantCurvature { c0: s.get("run.c0")? },
        "frozen" => BoundaryKind::Frozen,
        other => return Err(Error::Config(format!("unknown boundary '{other}' (constant-curvature | frozen)"))),
    };
    let u0 = sample_initial(&spec, &g)?;
    let mut traj = run(&u0.u, boundary, horizon, &cfg)?;
    traj.metadata.insert("initial".into(), spec.to_string());
    write_trajectory(out, &traj)?;
    println!("wrote {} ({} snapshots, {} steps)", out.display(), traj.len(), traj.metadata["steps"]);
    Ok(Outcome::ok())
}

pub fn construct(s: &Settings, out: &Path) -> Result<Outcome> {
    let cfg = flow(s)?;
    let spec = initial(s, "plan.initial")?;
    let defaults = ExhaustionPlan::default();
    let plan = ExhaustionPlan {
        k_list: s.list("plan.k_list")?,
        eta: s.get("plan.eta")?,
        horizon: s.get("plan.horizon")?,
        limit_tol: s.get("plan.limit_tol")?,
        snapshot_times: match s.raw("plan.snapshots") {
            Some(_) => s.list("plan.snapshots")?,
            None => defaults.snapshot_times,
        },
        n_r_base: s.get("plan.n_r_base")?,
        n_r_per_k: s.get("plan.n_r_per_k")?,
        n_theta: s.get("plan.n_theta")?,
        clustering: s.get("plan.clustering")?,
        collar: s.get("plan.collar")?,
        reference_radius: s.get("plan.reference_radius")?,
    };
    plan.validate()?;
    let result = if s.flag("plan.strict")? {
        construct_limit(&spec, &plan, &cfg)?
    } else {
        construct_family(&spec, &plan, &cfg)?
    };
    write_construction(out, &result)?;
    let summary = result.summary();
    println!("monotone: {}, converged: {}", summary.monotone, summary.converged);
    if let Some(h) = summary.history.last() {
        let worst = h.sup_change.iter().map(|&(_, c)| c).fold(0.0, f64::max);
        println!("sup |u_{} - u_{}| on r <= {} = {worst:.6e}", h.k_lo, h.k_hi, h.r_max);
    }
    println!("wrote {}", out.display());
    Ok(Outcome::ok())
}

pub fn verify(s: &Settings, inputs: &[PathBuf], out: &Path) -> Result<Outcome> {
    let checks: Vec<String> = s.list("verify.checks")?;
    let dom = domain(s, "verify.domain")?;
    let eps: Vec<f64> = s.list("verify.eps")?;
    let known = ["admissibility", "barriers", "sandwich", "supersolution", "time-shift", "direct-comparison"];
    if let Some(bad) = checks.iter().find(|c| !known.contains(&c.as_str())) {
        return Err(Error::Config(format!("unknown check '{bad}' (known: {})", known.join(", "))));
    }
    if checks.is_empty() {
        return Err(Error::Config("verify.checks is empty".into()));
    }
    let pair = checks.iter().any(|c| c == "direct-comparison");
    let expected = if pair { 2 } else { 1 };
    if inputs.len() != expected {
        return Err(Error::Usage(format!("verify needs {expected} trajectory path(s), got {}", inputs.len())));
    }
    let traj = load(&inputs[0])?;
    let mut bundle = ReportBundle::new(Vec::new());
    for check in &checks {
        match check.as_str() {
            "admissibility" => bundle.push(admissibility_report(&traj, &eps, dom)?.1),
            "barriers" => {
                let g = traj.grid().expect("non-empty").clone();
                let u0 = match s.opt::<InitialSpec>("verify.initial")? {
                    Some(spec) => sample_initial(&spec, &g)?.u,
                    None => traj.snapshots[0].u.clone(),
                };
                let c_upper = match s.opt("verify.c_upper")? {
                    Some(c) => c,
                    None => admissibility_report(&traj, &[], dom)?.0.c_upper,
                };
                for r in barrier_report(&traj, &u0, c_upper, dom)? {
                    bundle.push(r);
                }
            }
            "sandwich" => {
                let mut positive = traj.clone();
                positive.snapshots.retain(|x| x.t > 0.0);
                bundle.push(curvature_sandwich(&positive, dom)?);
            }
            "supersolution" => {
                for &e in &eps {
                    bundle.push(supersolution_transform(&traj, e, dom)?.residual);
                }
            }
            "time-shift" => {
                let res = time_shift_transform(&traj, s.get("verify.c")?, s.get("verify.delta")?, None, dom)?;
                bundle.push(res.residual);
            }
            "direct-comparison" => bundle.push(direct_comparison(&traj, &load(&inputs[1])?, dom)?),
            _ => unreachable!(),
        }
    }
    write_bundle(out, &bundle)?;
    Ok(Outcome { pass: bundle.all_pass })
}

pub fn compare(s: &Settings, a: &Path, b: &Path, out: &Path) -> Result<Outcome> {
    let mode = s.string("compare.mode")?;
    let dom = domain(s, "compare.domain")?;
    let (ta, tb) = (load(a)?, load(b)?);
    let report = match mode.as_str() {
        "direct" => direct_comparison(&ta, &tb, dom)?,
        "geometric" => geometric_comparison(&ta, &tb, s.get("compare.c")?, dom)?,
        "uniqueness" => compare_limits(&ta, &tb, s.get("compare.r_max")?, s.get("compare.limit_tol")?)?,
        other => {
            return Err(Error::Config(format!("unknown compare mode '{other}' (direct | geometric | uniqueness)")))
        }
    };
    let bundle = ReportBundle::new(vec![report]);
    write_bundle(out, &bundle)?;
    Ok(Outcome { pass: bundle.all_pass })
}

pub fn export(s: &Settings, input: &Path, out: &Path) -> Result<Outcome> {
    let traj = load(input)?;
    let g = traj.grid().expect("non-empty").clone();
    fs::create_dir_all(out)?;
    match s.string("export.format")?.as_str() {
        "csv" => {
            for (i, snap) in traj.snapshots.iter().enumerate() {
                write_field_csv(&out.join(format!("snapshot_{i:04}.csv")), &snap.u)?;
            }
        }
        "columns" => {
            let theta: f64 = s.get("export.theta")?;
            let n = g.n_theta();
            let j = ((theta / g.dtheta()).round() as i64).rem_euclid(n as i64) as usize;
            let nodes: Vec<usize> = std::iter::once(0).chain((1..g.n_r()).map(|i| g.node(i, j))).collect();
            let mut w = BufWriter::new(fs::File::create(out.join("profiles.csv"))?);
            write!(w, "r")?;
            for snap in &traj.snapshots {
                write!(w, ",u(t={:.16e})", snap.t)?;
            }
            writeln!(w)?;
            for &p in &nodes {
                write!(w, "{:.16e}", g.r(p))?;
                for snap in &traj.snapshots {
                    write!(w, ",{:.16e}", snap.u.values()[p])?;
                }
                writeln!(w)?;
            }
            w.flush()?;
        }
        other => return Err(Error::Config(format!("unknown export format '{other}' (csv | columns)"))),
    }
    let mut w = BufWriter::new(fs::File::create(out.join("timeseries.csv"))?);
    writeln!(w, "t,min_u,max_u,min_K,max_K")?;
    for snap in &traj.snapshots {
        let k = gauss_curvature(&snap.u);
        let (mut min_u, mut max_u, mut min_k, mut max_k) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in g.interior_nodes() {
            let (u, c) = (snap.u.values()[p], k.values()[p]);
            min_u = min_u.min(u);
            max_u = max_u.max(u);
            min_k = min_k.min(c);
            max_k = max_k.max(c);
        }
        writeln!(w, "{:.16e},{min_u:.16e},{max_u:.16e},{min_k:.16e},{max_k:.16e}", snap.t)?;
    }
    w.flush()?;
    println!("wrote {}", out.display());
    Ok(Outcome::ok())
}
