//! Output files: provenance header, CSV tables, JSON records, plain-text
//! field dumps. Tabular outputs are CSV with one header line; structured
//! outputs are JSON or JSON-lines.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use blowup_core::error::{Error, Result};
use blowup_core::grid::Field;
use blowup_core::reduced::EnergyReading;

use crate::config::RunConfig;

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidConfig(format!("cannot write {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Self-contained run header: resolved config, its hash, versions, grid and
/// seed. Enough to reproduce the run bit-for-bit on the same build.
#[derive(Serialize)]
struct Provenance<'a> {
    version: &'a str,
    config_sha256: String,
    seed: u64,
    grid_points: usize,
    grid_n: usize,
    resolved_config: &'a str,
}

pub fn write_provenance(dir: &Path, cfg: &RunConfig) -> Result<PathBuf> {
    ensure_dir(dir)?;
    let resolved = cfg.to_toml();
    let mut hasher = Sha256::new();
    hasher.update(resolved.as_bytes());
    let head = Provenance {
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: format!("{:x}", hasher.finalize()),
        seed: cfg.run.seed,
        grid_points: cfg.grid.points,
        grid_n: cfg.grid.n,
        resolved_config: &resolved,
    };
    let path = dir.join("run.json");
    write_json(&path, &head)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serialize {}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 32 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for r in rows {
        out.push_str(r);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Plain-text grid dump: coordinate columns then the value.
pub fn write_field_text(path: &Path, f: &Field) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let res: std::io::Result<()> = (|| {
        if f.grid.n == 1 {
            writeln!(w, "# x value")?;
            for i in 0..f.len() {
                writeln!(w, "{:.17e} {:.17e}", f.grid.point(i)[0], f.data[i])?;
            }
        } else {
            writeln!(w, "# x y value")?;
            for i in 0..f.len() {
                let [x, y] = f.grid.point(i);
                writeln!(w, "{x:.17e} {y:.17e} {:.17e}", f.data[i])?;
            }
        }
        Ok(())
    })();
    res.map_err(|e| io_err(path, e))
}

/// Energy log as JSON-lines: {"T": …, "e0": …, "es": …, "sup": …}.
pub fn write_energy_jsonl(path: &Path, log: &[EnergyReading]) -> Result<()> {
    let mut out = String::new();
    for e in log {
        out.push_str(&format!(
            "{{\"T\":{:.17e},\"e0\":{:.17e},\"es\":{:.17e},\"sup\":{:.17e}}}\n",
            e.t_off, e.e0, e.es, e.sup_norm
        ));
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Gnuplot-ready matrix for 2-D fields: one row per y, values separated by
/// spaces, blank line at the end.
pub fn write_matrix(path: &Path, f: &Field) -> Result<()> {
    let [nx, ny] = f.grid.points;
    let mut out = String::new();
    for iy in 0..ny {
        let row: Vec<String> = (0..nx)
            .map(|ix| format!("{:.10e}", f.data[iy * nx + ix]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}
