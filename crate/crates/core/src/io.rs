//! Plain-text persistence for fields and evolution traces.
//!
//! A field file is CSV with header `r,re_u,im_u`, one row per grid node. A
//! trace directory holds `monitors.csv`, `snapshots/snap_<step>.csv` and a
//! `trace.json` manifest tying them together.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{BlowupCause, EvolutionTrace, EvolveConfig, MonitorRow, Snapshot, Termination};
use crate::exponents::{format_rational, InlsParams};
use crate::radial::{ComplexRadialField, GridError, RadialGrid};

pub const FIELD_HEADER: &str = "r,re_u,im_u";
pub const TRACE_MANIFEST: &str = "trace.json";
pub const MONITORS_FILE: &str = "monitors.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: nodes do not match the grid (r_max = {r_max}, n = {n})")]
    GridMismatch { path: PathBuf, r_max: f64, n: usize },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, IoError> {
    fs::File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn write_field(path: &Path, field: &ComplexRadialField) -> Result<(), IoError> {
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<fs::File>| -> io::Result<()> {
        writeln!(out, "{FIELD_HEADER}")?;
        for (r, u) in field.grid().nodes().iter().zip(field.u()) {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", r, u.re, u.im)?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_err(path))
}

/// Parsed rows of a field file: (r, u).
pub fn read_field_rows(path: &Path) -> Result<Vec<(f64, Complex64)>, IoError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let fmt = |line: usize, message: String| IoError::Format {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        let line = line.trim();
        if i == 0 {
            if line != FIELD_HEADER {
                return Err(fmt(1, format!("expected header `{FIELD_HEADER}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| fmt(i + 1, e.to_string()))?;
        if cols.len() != 3 {
            return Err(fmt(i + 1, format!("expected 3 columns, found {}", cols.len())));
        }
        rows.push((cols[0], Complex64::new(cols[1], cols[2])));
    }
    Ok(rows)
}

/// Reads a field file whose nodes must coincide with `grid`.
pub fn read_field(path: &Path, grid: Arc<RadialGrid>) -> Result<ComplexRadialField, IoError> {
    let rows = read_field_rows(path)?;
    let tol = 1e-12 * grid.r_max();
    let matches = rows.len() == grid.n()
        && rows
            .iter()
            .zip(grid.nodes())
            .all(|((r, _), node)| (r - node).abs() <= tol);
    if !matches {
        return Err(IoError::GridMismatch {
            path: path.to_path_buf(),
            r_max: grid.r_max(),
            n: grid.n(),
        });
    }
    let u: Vec<Complex64> = rows.into_iter().map(|(_, u)| u).collect();
    Ok(ComplexRadialField::from_u(grid, &u)?)
}

/// Grid implied by a field file's nodes r_j = j·r_max/(n+1).
pub fn grid_of_field_file(path: &Path, b: f64) -> Result<RadialGrid, IoError> {
    let rows = read_field_rows(path)?;
    let n = rows.len();
    let last = rows.last().map_or(0.0, |(r, _)| *r);
    let r_max = last * (n as f64 + 1.0) / n as f64;
    Ok(RadialGrid::new(r_max, n, b)?)
}

pub fn write_monitors(path: &Path, rows: &[MonitorRow]) -> Result<(), IoError> {
    let mut out = create(path)?;
    let write = |out: &mut BufWriter<fs::File>| -> io::Result<()> {
        writeln!(out, "{}", MonitorRow::CSV_HEADER)?;
        for row in rows {
            writeln!(out, "{}", row.to_csv())?;
        }
        out.flush()
    };
    write(&mut out).map_err(io_err(path))
}

pub fn read_monitors(path: &Path) -> Result<Vec<MonitorRow>, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(MonitorRow::CSV_HEADER) {
        return Err(IoError::Format {
            path: path.to_path_buf(),
            line: 1,
            message: "unexpected monitor header".into(),
        });
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let c: Vec<f64> = l
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| IoError::Format {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: e.to_string(),
                })?;
            if c.len() != 8 {
                return Err(IoError::Format {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: format!("expected 8 columns, found {}", c.len()),
                });
            }
            Ok(MonitorRow {
                t: c[0],
                mass: c[1],
                energy: c[2],
                grad_sq: c[3],
                potential: c[4],
                grad_product: c[5],
                sup_u: c[6],
                boundary_frac: c[7],
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotEntry {
    pub step: usize,
    pub t: f64,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceManifest {
    pub b: String,
    pub r_max: f64,
    pub n: usize,
    pub dt: f64,
    pub config: EvolveConfig,
    pub termination: Termination,
    pub blowup_cause: Option<BlowupCause>,
    /// `None` when no gradient level can trigger (zero field).
    pub blowup_threshold: Option<f64>,
    pub monitors: String,
    pub snapshots: Vec<SnapshotEntry>,
}

/// Writes the trace under `dir` and returns the relative paths written.
pub fn write_trace(dir: &Path, trace: &EvolutionTrace) -> Result<Vec<String>, IoError> {
    let snap_dir = dir.join(SNAPSHOT_DIR);
    fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    let mut written = vec![MONITORS_FILE.to_string()];
    write_monitors(&dir.join(MONITORS_FILE), &trace.monitors)?;
    let mut entries = Vec::with_capacity(trace.snapshots.len());
    for snap in &trace.snapshots {
        let rel = format!("{SNAPSHOT_DIR}/snap_{:08}.csv", snap.step);
        write_field(&dir.join(&rel), &snap.field)?;
        entries.push(SnapshotEntry {
            step: snap.step,
            t: snap.t,
            file: rel.clone(),
        });
        written.push(rel);
    }
    let manifest = TraceManifest {
        b: format_rational(trace.params.b()),
        r_max: trace.grid.r_max(),
        n: trace.grid.n(),
        dt: trace.dt,
        config: trace.config,
        termination: trace.termination,
        blowup_cause: trace.blowup_cause,
        blowup_threshold: trace.blowup_threshold.is_finite().then_some(trace.blowup_threshold),
        monitors: MONITORS_FILE.to_string(),
        snapshots: entries,
    };
    write_json(&dir.join(TRACE_MANIFEST), &manifest)?;
    written.push(TRACE_MANIFEST.to_string());
    Ok(written)
}

pub fn read_trace(dir: &Path) -> Result<EvolutionTrace, IoError> {
    let path = dir.join(TRACE_MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: TraceManifest = serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.clone(),
        source,
    })?;
    let params: InlsParams = manifest.b.parse().map_err(|e| IoError::Format {
        path: path.clone(),
        line: 0,
        message: format!("{e}"),
    })?;
    let grid = Arc::new(RadialGrid::for_params(manifest.r_max, manifest.n, &params)?);
    let monitors = read_monitors(&dir.join(&manifest.monitors))?;
    let snapshots = manifest
        .snapshots
        .iter()
        .map(|e| {
            Ok(Snapshot {
                step: e.step,
                t: e.t,
                field: read_field(&dir.join(&e.file), grid.clone())?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    if snapshots.is_empty() {
        return Err(IoError::Format {
            path,
            line: 0,
            message: "trace lists no snapshots".into(),
        });
    }
    Ok(EvolutionTrace {
        params,
        grid,
        dt: manifest.dt,
        config: manifest.config,
        monitors,
        snapshots,
        termination: manifest.termination,
        blowup_cause: manifest.blowup_cause,
        blowup_threshold: manifest.blowup_threshold.unwrap_or(f64::INFINITY),
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve;

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Arc::new(RadialGrid::new(8.0, 63, 0.25).unwrap());
        let f = ComplexRadialField::from_fn(grid.clone(), |r| {
            Complex64::new((-r * r).exp(), 0.3 * r * (-r).exp())
        });
        let path = dir.path().join("f.csv");
        write_field(&path, &f).unwrap();
        let g = read_field(&path, grid.clone()).unwrap();
        assert!(f.relative_max_distance(&g) < 1e-15);
        let implied = grid_of_field_file(&path, 0.25).unwrap();
        assert_eq!(implied.n(), 63);
        assert!((implied.r_max() - 8.0).abs() < 1e-12);
        let other = Arc::new(RadialGrid::new(8.0, 64, 0.25).unwrap());
        assert!(matches!(read_field(&path, other), Err(IoError::GridMismatch { .. })));
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let params: InlsParams = "1/4".parse().unwrap();
        let grid = Arc::new(RadialGrid::for_params(16.0, 127, &params).unwrap());
        let u0 = ComplexRadialField::from_real_fn(grid, |r| (-r * r).exp());
        let cfg = EvolveConfig {
            snap_stride: 4,
            ..EvolveConfig::default()
        };
        let trace = evolve(&u0, 0.1, 0.01, &params, &cfg).unwrap();
        let written = write_trace(dir.path(), &trace).unwrap();
        assert_eq!(written.len(), trace.snapshots.len() + 2);
        let back = read_trace(dir.path()).unwrap();
        assert_eq!(back.monitors, trace.monitors);
        assert_eq!(back.termination, trace.termination);
        assert_eq!(back.snapshots.len(), trace.snapshots.len());
        assert_eq!(back.blowup_threshold, trace.blowup_threshold);
        let (a, b) = (back.final_field(), trace.final_field());
        assert!(a.relative_max_distance(b) < 1e-15);
    }
}
