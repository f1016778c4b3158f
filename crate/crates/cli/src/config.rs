//! Flat `key = value` configuration with `[section]` headers.
//!
//! ```text
//! # comment
//! [grid]
//! n_r = 256
//! clustering = 1.5
//!
//! [flow]
//! scheme = semi-implicit
//! snapshots = 0.25, 0.5, 1.0
//! ```
//!
//! Every key is addressed as `section.key`; the same name is accepted as a
//! command-line flag (`--grid.n_r 256`). Keys that the command does not know
//! are rejected, as are duplicate keys within one file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ricci_disc::Error;

/// One recognised configuration key.
pub struct Key {
    pub section: &'static str,
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

impl Key {
    pub fn path(&self) -> String {
        format!("{}.{}", self.section, self.name)
    }
}

const fn key(section: &'static str, name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key { section, name, default, help }
}

pub const GRID: &[Key] = &[
    key("grid", "radius", Some("1.0"), "disc radius a"),
    key("grid", "n_r", Some("128"), "number of rings including the centre"),
    key("grid", "n_theta", Some("1"), "nodes per ring (1 = radially symmetric)"),
    key("grid", "clustering", Some("1.5"), "rim clustering exponent (>= 1)"),
    key("grid", "collar", Some("0.02"), "relative width of the truncation collar"),
];

pub const FLOW: &[Key] = &[
    key("flow", "scheme", Some("explicit-rk2"), "explicit-rk2 | semi-implicit"),
    key("flow", "cfl_safety", Some("0.4"), "fraction of the explicit stability limit"),
    key("flow", "dt_max", Some("0.01"), "largest time step"),
    key("flow", "tolerance", Some("1e-12"), "relative residual of the implicit linear solve"),
    key("flow", "max_linear_iterations", Some("2000"), "iteration cap of the implicit linear solve"),
    key("flow", "diagnostics_every", Some("256"), "steps between diagnostics rows"),
    key("flow", "snapshots", Some(""), "comma-separated snapshot times"),
];

pub const OUTPUT: &[Key] = &[key("output", "dir", None, "output directory, relative to $RICCI_DISC_OUT when set")];

pub const EXACT: &[Key] = &[
    key("exact", "solution", None, "bigbang | expanding"),
    key("exact", "a", Some("1.0"), "disc radius of the expanding solution"),
    key("exact", "horizon", Some("1.0"), "final time T"),
    key("exact", "count", Some("10"), "number of positive snapshot times, evenly spaced up to T"),
];

pub const RUN: &[Key] = &[
    key("run", "initial", None, "initial metric descriptor, e.g. restricted-hyperbolic:R=2"),
    key("run", "horizon", Some("1.0"), "final time T"),
    key("run", "boundary", Some("constant-curvature"), "constant-curvature | frozen"),
    key("run", "c0", Some("1.0"), "curvature magnitude followed by the ring values"),
];

pub const PLAN: &[Key] = &[
    key("plan", "initial", None, "initial metric descriptor"),
    key("plan", "k_list", Some("2, 4, 8, 16, 24"), "exhaustion indices"),
    key("plan", "eta", Some("0.1"), "cutoff width"),
    key("plan", "horizon", Some("1.0"), "final time T"),
    key("plan", "limit_tol", Some("0.01"), "convergence tolerance of the last pair"),
    key("plan", "snapshots", None, "comma-separated snapshot times (default 0.05, 0.1, ..., 1.0)"),
    key("plan", "n_r_base", Some("64"), "rings of the k = 0 grid"),
    key("plan", "n_r_per_k", Some("8"), "extra rings per unit of k"),
    key("plan", "n_theta", Some("1"), "nodes per ring"),
    key("plan", "clustering", Some("1.5"), "rim clustering exponent"),
    key("plan", "collar", Some("0.02"), "relative collar width"),
    key("plan", "reference_radius", Some("0.8"), "radius of the convergence and monotonicity checks"),
    key("plan", "strict", Some("false"), "fail unless the family is monotone and converged"),
];

pub const VERIFY: &[Key] = &[
    key("verify", "checks", Some("admissibility, barriers, sandwich"), "checks to run"),
    key("verify", "domain", Some("core:0.8"), "core:<fraction> | radius:<r> | full"),
    key("verify", "initial", None, "initial metric descriptor for barrier (D); default: first snapshot"),
    key("verify", "c_upper", None, "curvature upper bound C for barrier (D); default: measured"),
    key("verify", "eps", Some("0.1"), "epsilons for admissibility constants and the supersolution transform"),
    key("verify", "c", Some("1.0"), "curvature bound C of the time-shift transform"),
    key("verify", "delta", Some("0.1"), "shift delta of the time-shift transform"),
];

pub const COMPARE: &[Key] = &[
    key("compare", "mode", Some("direct"), "direct | geometric | uniqueness"),
    key("compare", "domain", Some("core:0.8"), "core:<fraction> | radius:<r> | full"),
    key("compare", "c", Some("1.0"), "curvature bound C of the geometric comparison"),
    key("compare", "r_max", Some("0.8"), "radius of the uniqueness comparison"),
    key("compare", "limit_tol", Some("0.0"), "extra tolerance of the uniqueness comparison"),
];

pub const EXPORT: &[Key] = &[
    key("export", "format", Some("csv"), "csv (one file per snapshot) | columns (one radial table)"),
    key("export", "theta", Some("0.0"), "ray angle of the columns format"),
];

/// Resolved `section.key -> value` map for one command.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<ConfigError> for Error {
    fn from(e: ConfigError) -> Self {
        Error::Config(e.0)
    }
}

type Res<T> = std::result::Result<T, ConfigError>;

/// Parses config text into `(section.key, value)` pairs, checking names against `schema`.
pub fn parse(text: &str, origin: &str, schema: &[&[Key]]) -> Res<Vec<(String, String)>> {
    let mut section: Option<String> = None;
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = || format!("{origin}:{}", n + 1);
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError(format!("{}: malformed section header '{line}'", at())))?
                .trim();
            if !schema.iter().any(|keys| keys.first().is_some_and(|k| k.section == name)) {
                return Err(ConfigError(format!("{}: unknown section [{name}] for this command", at())));
            }
            section = Some(name.to_string());
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("{}: expected 'key = value', found '{line}'", at())))?;
        let sec = section
            .as_deref()
            .ok_or_else(|| ConfigError(format!("{}: key '{}' appears before any [section]", at(), k.trim())))?;
        let path = format!("{sec}.{}", k.trim());
        if !schema.iter().flat_map(|keys| keys.iter()).any(|key| key.path() == path) {
            return Err(ConfigError(format!("{}: unknown key '{path}'", at())));
        }
        if out.iter().any(|(p, _)| *p == path) {
            return Err(ConfigError(format!("{}: duplicate key '{path}'", at())));
        }
        out.push((path, v.trim().to_string()));
    }
    Ok(out)
}

impl Settings {
    /// Defaults of `schema`, then the config file, then explicit overrides.
    pub fn resolve(
        schema: &[&[Key]],
        file: Option<&Path>,
        overrides: impl IntoIterator<Item = (String, String)>,
    ) -> Res<Self> {
        let mut values = BTreeMap::new();
        for k in schema.iter().flat_map(|keys| keys.iter()) {
            if let Some(d) = k.default {
                values.insert(k.path(), d.to_string());
            }
        }
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("cannot read config file {}: {e}", path.display())))?;
            values.extend(parse(&text, &path.display().to_string(), schema)?);
        }
        values.extend(overrides);
        Ok(Self { values })
    }

    pub fn raw(&self, path: &str) -> Option<&str> {
        self.values.get(path).map(String::as_str).filter(|s| !s.is_empty())
    }

    pub fn string(&self, path: &str) -> Res<String> {
        self.raw(path).map(str::to_string).ok_or_else(|| ConfigError(format!("missing required key '{path}'")))
    }

    pub fn get<T: FromStr>(&self, path: &str) -> Res<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.string(path)?;
        raw.parse().map_err(|e| ConfigError(format!("invalid value '{raw}' for '{path}': {e}")))
    }

    pub fn opt<T: FromStr>(&self, path: &str) -> Res<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.raw(path) {
            None => Ok(None),
            Some(_) => self.get(path).map(Some),
        }
    }

    pub fn list<T: FromStr>(&self, path: &str) -> Res<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let Some(raw) = self.raw(path) else {
            return Ok(Vec::new());
        };
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| ConfigError(format!("invalid entry '{s}' in '{path}': {e}"))))
            .collect()
    }

    pub fn flag(&self, path: &str) -> Res<bool> {
        match self.string(path)?.as_str() {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(ConfigError(format!("invalid boolean '{other}' for '{path}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_comments() {
        let text = "# top\n[grid]\nn_r = 64 # inline\n\n[flow]\nsnapshots = 0.1, 0.2\n";
        let kv = parse(text, "t", &[GRID, FLOW]).unwrap();
        assert_eq!(kv, vec![("grid.n_r".into(), "64".into()), ("flow.snapshots".into(), "0.1, 0.2".into())]);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(parse("[grid]\nn_rings = 3\n", "t", &[GRID]).is_err());
        assert!(parse("[plan]\neta = 3\n", "t", &[GRID]).is_err());
        assert!(parse("[grid]\nn_r = 3\nn_r = 4\n", "t", &[GRID]).is_err());
        assert!(parse("n_r = 3\n", "t", &[GRID]).is_err());
        assert!(parse("[grid\n", "t", &[GRID]).is_err());
    }

    #[test]
    fn overrides_win() {
        let s = Settings::resolve(&[GRID], None, [("grid.n_r".to_string(), "32".to_string())]).unwrap();
        assert_eq!(s.get::<usize>("grid.n_r").unwrap(), 32);
        assert_eq!(s.get::<f64>("grid.collar").unwrap(), 0.02);
        assert!(s.get::<usize>("grid.radius").is_err());
    }
}
