//! Text formats: TOML configs, headered snapshots, CSV time series, JSON
//! manifests. Every file is written to a temporary sibling and renamed into
//! place, so a failed write never leaves a partial file behind.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SimConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::field::CellField;
use crate::grid::{Grid, GridSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses and validates a TOML config. Unknown keys are errors.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let cfg: SimConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<SimConfig> {
    parse_config(&fs::read_to_string(path)?)
}

pub fn serialize_config(cfg: &SimConfig) -> Result<String> {
    toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))
}

/// Hex SHA-256 of the serialized config.
pub fn config_hash(cfg: &SimConfig) -> String {
    let text = serialize_config(cfg).unwrap_or_default();
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let result = (|| {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

#[derive(Serialize, Deserialize)]
struct SnapshotHeader {
    grid: GridSpec,
    t: f64,
    fields: Vec<String>,
    count: usize,
}

/// A snapshot read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotFile {
    pub t: f64,
    pub u: CellField,
    pub s: CellField,
}

/// One JSON header line `{grid, t, fields, count}` followed by `count` rows
/// `u S`, each value with 17 significant digits.
pub fn write_snapshot(path: &Path, t: f64, u: &CellField, s: &CellField) -> Result<()> {
    u.grid().check_same(s.grid())?;
    let header = SnapshotHeader {
        grid: u.grid().spec(),
        t,
        fields: vec!["u".into(), "S".into()],
        count: u.len(),
    };
    let mut text = serde_json::to_string(&header).map_err(|e| Error::Snapshot(e.to_string()))?;
    text.push('\n');
    for (a, b) in u.values().iter().zip(s.values()) {
        let _ = writeln!(text, "{a:.16e} {b:.16e}");
    }
    atomic_write(path, text.as_bytes())
}

pub fn read_snapshot(path: &Path) -> Result<SnapshotFile> {
    parse_snapshot(&fs::read_to_string(path)?)
}

pub fn parse_snapshot(text: &str) -> Result<SnapshotFile> {
    let mut lines = text.lines();
    let header: SnapshotHeader = serde_json::from_str(lines.next().unwrap_or(""))
        .map_err(|e| Error::Snapshot(format!("bad header: {e}")))?;
    if header.fields != ["u", "S"] {
        return Err(Error::Snapshot(format!(
            "unexpected fields {:?}",
            header.fields
        )));
    }
    let grid = Grid::new(&header.grid).map_err(|e| Error::Snapshot(e.to_string()))?;
    if header.count != grid.n_cells() {
        return Err(Error::Snapshot(format!(
            "count {} does not match the {} grid cells",
            header.count,
            grid.n_cells()
        )));
    }
    let mut u = Vec::with_capacity(header.count);
    let mut s = Vec::with_capacity(header.count);
    for (row, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let mut parts = line.split_whitespace().map(str::parse::<f64>);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(Ok(a)), Some(Ok(b)), None) => {
                u.push(a);
                s.push(b);
            }
            _ => return Err(Error::Snapshot(format!("malformed row {}", row + 1))),
        }
    }
    if u.len() != header.count {
        return Err(Error::Snapshot(format!(
            "expected {} rows, found {}",
            header.count,
            u.len()
        )));
    }
    Ok(SnapshotFile {
        t: header.t,
        u: CellField::new(&grid, u)?,
        s: CellField::new(&grid, s)?,
    })
}

/// Column names of the time series for the given Kruzkov levels.
pub fn timeseries_columns(levels: &[f64]) -> Vec<String> {
    let mut cols: Vec<String> = ["t", "mass", "E", "D", "cumulative_D"]
        .map(String::from)
        .to_vec();
    cols.extend(levels.iter().map(|k| format!("max_entropy_residual_k{k}")));
    cols.push("defect_mass".into());
    cols.push("bound_violation".into());
    cols
}

pub fn timeseries_csv(records: &[DiagnosticsRecord], levels: &[f64]) -> String {
    let mut text = timeseries_columns(levels).join(",");
    text.push('\n');
    for r in records {
        let mut row = vec![r.t, r.mass, r.e, r.d, r.cumulative_d];
        row.extend(&r.entropy);
        row.push(r.defect_mass);
        row.push(r.bound_violation);
        let cells: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    text
}

pub fn write_timeseries(path: &Path, records: &[DiagnosticsRecord], levels: &[f64]) -> Result<()> {
    atomic_write(path, timeseries_csv(records, levels).as_bytes())
}

/// Parses a CSV written by [`write_timeseries`] into its header and rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?
        .split(',')
        .map(String::from)
        .collect();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let row = l
                .split(',')
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::Config(format!("bad CSV value `{v}`: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != header.len() {
                return Err(Error::Config(format!(
                    "row has {} columns, header {}",
                    row.len(),
                    header.len()
                )));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub role: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config_hash: String,
    pub config: SimConfig,
    pub grid: GridSpec,
    pub files: Vec<ManifestEntry>,
}

impl RunManifest {
    pub fn new(config: &SimConfig) -> Self {
        Self {
            version: VERSION.to_string(),
            config_hash: config_hash(config),
            config: config.clone(),
            grid: config.grid.clone(),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, path: impl Into<PathBuf>, role: &str) {
        self.files.push(ManifestEntry {
            path: path.into(),
            role: role.to_string(),
        });
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        atomic_write(path, text.as_bytes())
    }
}
