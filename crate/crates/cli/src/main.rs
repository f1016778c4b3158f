//! `ricci-disc`: batch experiments for the conformal flow on the disc.
//!
//! Exit codes: 0 all checks passed, 1 a check failed, 2 usage or
//! configuration error, 3 numerical divergence.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use ricci_disc::Error;

use config::{Key, Settings};

const OUT_ENV: &str = "RICCI_DISC_OUT";

struct Spec {
    name: &'static str,
    about: &'static str,
    schema: &'static [&'static [Key]],
    inputs: &'static [&'static str],
    default_out: &'static str,
}

const COMMANDS: &[Spec] = &[
    Spec {
        name: "exact",
        about: "Write a closed-form reference trajectory (big-bang or expanding hyperbolic)",
        schema: &[config::GRID, config::EXACT, config::OUTPUT],
        inputs: &[],
        default_out: "exact",
    },
    Spec {
        name: "run",
        about: "Run the flow from a named initial metric",
        schema: &[config::GRID, config::FLOW, config::RUN, config::OUTPUT],
        inputs: &[],
        default_out: "run",
    },
    Spec {
        name: "construct",
        about: "Run the exhaustion family and record monotonicity and convergence",
        schema: &[config::PLAN, config::FLOW, config::OUTPUT],
        inputs: &[],
        default_out: "construct",
    },
    Spec {
        name: "verify",
        about: "Run verifiers on a trajectory (two for direct-comparison) and write report.json",
        schema: &[config::VERIFY, config::OUTPUT],
        inputs: &["TRAJECTORY"],
        default_out: "verify",
    },
    Spec {
        name: "compare",
        about: "Compare two trajectories (direct, geometric or uniqueness) and write report.json",
        schema: &[config::COMPARE, config::OUTPUT],
        inputs: &["A", "B"],
        default_out: "compare",
    },
    Spec {
        name: "export",
        about: "Export plot-ready CSV profiles and a curvature time series",
        schema: &[config::EXPORT, config::OUTPUT],
        inputs: &["TRAJECTORY"],
        default_out: "export",
    },
];

fn cli() -> Command {
    let mut root = Command::new("ricci-disc")
        .about("Conformal flow on the unit disc: solver runs, exhaustion construction and verifiers")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in COMMANDS {
        let mut cmd = Command::new(spec.name).about(spec.about).arg(
            Arg::new("config")
                .long("config")
                .short('c')
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("key = value config file with [section] headers"),
        );
        for (i, input) in spec.inputs.iter().enumerate() {
            let mut arg = Arg::new(*input).required(true).value_parser(clap::value_parser!(PathBuf));
            if spec.name == "verify" && i == 0 {
                arg = arg.num_args(1..=2).action(ArgAction::Append).help("trajectory or construction directory");
            }
            cmd = cmd.arg(arg);
        }
        for k in spec.schema.iter().flat_map(|keys| keys.iter()) {
            let path = k.path();
            let mut help = k.help.to_string();
            if let Some(d) = k.default.filter(|d| !d.is_empty()) {
                help.push_str(&format!(" [default: {d}]"));
            }
            cmd = cmd.arg(Arg::new(path.clone()).long(path).value_name("VALUE").help(help).help_heading(k.section));
        }
        root = root.subcommand(cmd);
    }
    root
}

fn overrides(spec: &Spec, m: &ArgMatches) -> Vec<(String, String)> {
    spec.schema
        .iter()
        .flat_map(|keys| keys.iter())
        .filter_map(|k| m.get_one::<String>(&k.path()).map(|v| (k.path(), v.clone())))
        .collect()
}

fn output_dir(spec: &Spec, settings: &Settings) -> PathBuf {
    let dir = PathBuf::from(settings.raw("output.dir").unwrap_or(spec.default_out));
    match std::env::var_os(OUT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(dir),
        _ => dir,
    }
}

fn dispatch(spec: &Spec, m: &ArgMatches) -> ricci_disc::Result<commands::Outcome> {
    let settings =
        Settings::resolve(spec.schema, m.get_one::<PathBuf>("config").map(PathBuf::as_path), overrides(spec, m))?;
    let out = output_dir(spec, &settings);
    let path = |name: &str| m.get_one::<PathBuf>(name).expect("required").clone();
    match spec.name {
        "exact" => commands::exact(&settings, &out),
        "run" => commands::run_flow(&settings, &out),
        "construct" => commands::construct(&settings, &out),
        "verify" => {
            let inputs: Vec<PathBuf> = m.get_many::<PathBuf>("TRAJECTORY").expect("required").cloned().collect();
            commands::verify(&settings, &inputs, &out)
        }
        "compare" => commands::compare(&settings, &path("A"), &path("B"), &out),
        "export" => commands::export(&settings, &path("TRAJECTORY"), &out),
        _ => unreachable!(),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::Solver { .. } => 3,
        Error::Precondition { .. }
        | Error::Hypothesis { .. }
        | Error::ConstructionInvariant(_)
        | Error::Convergence { .. } => 1,
        Error::Config(_)
        | Error::Domain(_)
        | Error::Usage(_)
        | Error::Format { .. }
        | Error::Io(_)
        | Error::Json(_) => 2,
    }
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let spec = COMMANDS.iter().find(|s| s.name == name).expect("registered subcommand");
    match dispatch(spec, sub) {
        Ok(outcome) if outcome.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_valid() {
        cli().debug_assert();
    }
}
