//! Versioned CSV files and run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::format::FormatError;

pub const CSV_HEADER: &str = "# dxpp-csv v1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FormatError + '_ {
    move |source| FormatError::Io { path: path.to_path_buf(), source }
}

/// Writes `rows` below the schema comment line.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), FormatError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut file = BufWriter::new(File::create(path).map_err(io_err(path))?);
    writeln!(file, "{CSV_HEADER}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a CSV written by [`write_csv`] as string records (header included).
pub fn read_csv(path: &Path) -> Result<Vec<Vec<String>>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let body = text.strip_prefix(CSV_HEADER).ok_or_else(|| FormatError::Invalid(format!("{}: missing '{CSV_HEADER}'", path.display())))?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(body.trim_start().as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| FormatError::Invalid(e.to_string()))?;
        out.push(rec.iter().map(str::to_string).collect());
    }
    Ok(out)
}

#[derive(Serialize, Debug, Clone)]
pub struct HostInfo {
    pub os: &'static str,
    pub arch: &'static str,
    pub hostname: String,
    pub cpus: usize,
    pub threads: usize,
}

impl HostInfo {
    pub fn current() -> HostInfo {
        let hostname = std::fs::read_to_string("/etc/hostname")
            .map(|s| s.trim().to_string())
            .ok()
            .or_else(|| std::env::var("HOSTNAME").ok())
            .unwrap_or_else(|| "unknown".into());
        HostInfo {
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            hostname,
            cpus: std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Serialize, Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub host: HostInfo,
    pub files: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, files: Vec<PathBuf>) -> Manifest {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config: config.clone(),
            seeds: config.seeds.clone(),
            host: HostInfo::current(),
            files,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), FormatError> {
        let text = serde_json::to_string_pretty(self)?;
        crate::format::write_text(path, &text)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}
