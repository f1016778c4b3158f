//! Persistence: binary field snapshots, CSV dumps, trajectory directories.
//!
//! A field file is a 64-byte little-endian header followed by one `f64` per
//! node:
//!
//! | offset | type  | content              |
//! |--------|-------|----------------------|
//! | 0      | [u8;4]| magic `RDF1`         |
//! | 4      | u32   | reserved (zero)      |
//! | 8      | f64   | radius `a`           |
//! | 16     | u64   | `n_r`                |
//! | 24     | u64   | `n_theta`            |
//! | 32     | f64   | clustering exponent  |
//! | 40     | f64   | collar               |
//! | 48     | f64   | time `t`             |
//! | 56     | u64   | node count           |

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::construction::ConstructionResult;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{DiscGrid, GridSpec};
use crate::solver::{FlowConfig, FlowState, PolicyRecord, StepDiagnostics, Trajectory};

pub const MAGIC: &[u8; 4] = b"RDF1";
pub const HEADER_LEN: usize = 64;
pub const FORMAT_VERSION: u32 = 1;

fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format { path: path.to_path_buf(), detail: detail.into() }
}

pub fn encode_field(field: &ScalarField<f64>, t: f64) -> Vec<u8> {
    let spec = field.grid().spec();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * field.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&0u32.to_le_bytes());
    buf.extend_from_slice(&spec.radius.to_le_bytes());
    buf.extend_from_slice(&(spec.n_r as u64).to_le_bytes());
    buf.extend_from_slice(&(spec.n_theta as u64).to_le_bytes());
    buf.extend_from_slice(&spec.clustering.to_le_bytes());
    buf.extend_from_slice(&spec.collar.to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&(field.len() as u64).to_le_bytes());
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

/// Header of a field file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldHeader {
    pub spec: GridSpec,
    pub t: f64,
    pub nodes: usize,
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().expect("8 bytes"))
}

fn u64_at(b: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(b[off..off + 8].try_into().expect("8 bytes"))
}

pub fn decode_header(bytes: &[u8], path: &Path) -> Result<FieldHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(format_err(path, format!("file is {} bytes, shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_err(path, "bad magic"));
    }
    let spec = GridSpec::new(
        f64_at(bytes, 8),
        u64_at(bytes, 16) as usize,
        u64_at(bytes, 24) as usize,
        f64_at(bytes, 32),
        f64_at(bytes, 40),
    );
    Ok(FieldHeader { spec, t: f64_at(bytes, 48), nodes: u64_at(bytes, 56) as usize })
}

/// Decodes a field; reuses `grid` when its layout matches the header.
pub fn decode_field(bytes: &[u8], path: &Path, grid: Option<&Arc<DiscGrid<f64>>>) -> Result<(ScalarField<f64>, f64)> {
    let header = decode_header(bytes, path)?;
    let grid = match grid {
        Some(g) if g.spec() == header.spec => g.clone(),
        _ => Arc::new(DiscGrid::new(header.spec).map_err(|e| format_err(path, e.to_string()))?),
    };
    if header.nodes != grid.num_nodes() {
        return Err(format_err(path, format!("header lists {} nodes, grid has {}", header.nodes, grid.num_nodes())));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * header.nodes {
        return Err(format_err(path, format!("expected {} value bytes, found {}", 8 * header.nodes, body.len())));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let field = ScalarField::new(grid, values).map_err(|e| format_err(path, e.to_string()))?;
    Ok((field, header.t))
}

pub fn write_field(path: &Path, field: &ScalarField<f64>, t: f64) -> Result<()> {
    fs::write(path, encode_field(field, t))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(ScalarField<f64>, f64)> {
    let bytes = fs::read(path)?;
    decode_field(&bytes, path, None)
}

/// `r,theta,value` rows with round-trip precision.
pub fn write_field_csv(path: &Path, field: &ScalarField<f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "r,theta,value")?;
    let g = field.grid();
    for (p, v) in field.values().iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e},{:.16e}", g.r(p), g.theta(p), v)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub t: f64,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: FlowConfig,
    pub policy: PolicyRecord,
    pub grid: GridSpec,
    pub snapshots: Vec<SnapshotEntry>,
    #[serde(default)]
    pub metadata: std::collections::BTreeMap<String, String>,
}

pub const MANIFEST: &str = "manifest.json";
pub const DIAGNOSTICS: &str = "diagnostics.csv";

/// Writes `manifest.json`, one `snapshot_NNNN.rdf` per snapshot and `diagnostics.csv`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory<f64>) -> Result<()> {
    let grid = traj.grid().ok_or_else(|| Error::Usage("cannot persist an empty trajectory".into()))?;
    fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(traj.len());
    for (i, s) in traj.snapshots.iter().enumerate() {
        let file = format!("snapshot_{i:04}.rdf");
        write_field(&dir.join(&file), &s.u, s.t)?;
        entries.push(SnapshotEntry { t: s.t, file });
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        config: traj.config.clone(),
        policy: traj.policy.clone(),
        grid: grid.spec(),
        snapshots: entries,
        metadata: traj.metadata.clone(),
    };
    fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    let mut w = BufWriter::new(fs::File::create(dir.join(DIAGNOSTICS))?);
    writeln!(w, "t,dt,min_u,max_u,min_K,max_K")?;
    for d in &traj.diagnostics {
        writeln!(w, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", d.t, d.dt, d.min_u, d.max_u, d.min_k, d.max_k)?;
    }
    w.flush()?;
    Ok(())
}

fn read_diagnostics(path: &Path) -> Result<Vec<StepDiagnostics>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()) {
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format_err(path, format!("line {}: {e}", n + 1)))?;
        if cols.len() != 6 {
            return Err(format_err(path, format!("line {}: expected 6 columns, found {}", n + 1, cols.len())));
        }
        out.push(StepDiagnostics {
            t: cols[0],
            dt: cols[1],
            min_u: cols[2],
            max_u: cols[3],
            min_k: cols[4],
            max_k: cols[5],
        });
    }
    Ok(out)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    let text =
        fs::read_to_string(&path).map_err(|e| format_err(&path, format!("cannot read trajectory manifest: {e}")))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| format_err(&path, e.to_string()))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(format_err(&path, format!("unsupported format_version {}", manifest.format_version)));
    }
    Ok(manifest)
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory<f64>> {
    let manifest = read_manifest(dir)?;
    let grid = Arc::new(DiscGrid::new(manifest.grid)?);
    let mut snapshots = Vec::with_capacity(manifest.snapshots.len());
    for e in &manifest.snapshots {
        let path = dir.join(&e.file);
        let bytes = fs::read(&path)?;
        let (u, t) = decode_field(&bytes, &path, Some(&grid))?;
        if t.to_bits() != e.t.to_bits() {
            return Err(format_err(&path, format!("snapshot time {t} disagrees with manifest {}", e.t)));
        }
        snapshots.push(FlowState { t, u });
    }
    let traj = Trajectory {
        config: manifest.config,
        policy: manifest.policy,
        snapshots,
        diagnostics: read_diagnostics(&dir.join(DIAGNOSTICS))?,
        metadata: manifest.metadata,
    };
    traj.validate()?;
    Ok(traj)
}

/// One trajectory directory per `k` (`k_0002`, ...) plus `summary.json`.
pub fn write_construction(dir: &Path, result: &ConstructionResult<f64>) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (k, traj) in &result.family {
        let sub = dir.join(format!("k_{k:04}"));
        write_trajectory(&sub, traj)?;
        written.push(sub);
    }
    let mut summary = serde_json::to_value(result.summary())?;
    if let (Some(obj), Some((k, _))) = (summary.as_object_mut(), result.family.last()) {
        obj.insert("limit".into(), serde_json::Value::String(format!("k_{k:04}")));
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(written)
}
