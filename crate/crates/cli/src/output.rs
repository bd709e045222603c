//! Destinations, atomic file writes and CSV helpers.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::config::Format;

pub const OUT_DIR_ENV: &str = "DOME_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Destination {
    Stdout,
    File(PathBuf),
}

/// `--out` wins over the config's `out`; `-` is stdout. Without either the
/// file lands in `$DOME_OUT_DIR` (or the working directory) as
/// `<command>.<ext>`.
pub fn resolve(flag: Option<&Path>, config: Option<&Path>, command: &str, format: Format) -> Destination {
    match flag.or(config) {
        Some(p) if p == Path::new("-") => Destination::Stdout,
        Some(p) => Destination::File(p.to_path_buf()),
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
            Destination::File(dir.join(format!("{command}.{}", format.extension())))
        }
    }
}

/// Writes to a sibling temporary file and renames it into place, so an
/// interrupted run never leaves a partial file at `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn emit(dest: &Destination, bytes: &[u8]) -> io::Result<()> {
    match dest {
        Destination::Stdout => io::stdout().lock().write_all(bytes),
        Destination::File(p) => write_atomic(p, bytes),
    }
}

/// `results/sweep.csv` -> `results/sweep.config.json`.
pub fn sidecar_path(primary: &Path) -> PathBuf {
    primary.with_extension("config.json")
}

/// Shortest round-trip decimal, switching to exponent form far from unity.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

pub fn finish_csv(w: csv::Writer<Vec<u8>>) -> io::Result<Vec<u8>> {
    w.into_inner().map_err(|e| e.into_error())
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}
