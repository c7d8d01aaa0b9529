//! Result bundles and the JSON/CSV writers behind every output file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use num_complex::Complex64;
use serde::Serialize;

use crate::cli_io::config::RunConfig;
use crate::error::{Error, Result};
use crate::params::{derive, DerivedParams, PhysicalParams, DEFAULT_SPECIES, RB87_MASS};
use crate::schmidt::{FrequencyGrid, SchmidtResult};

pub const UNITS: &str = "frequencies, detunings and shifts in units of Gamma_3; S in bits";

/// Species label for the configured atomic mass.
pub fn species(params: &PhysicalParams) -> &'static str {
    if params.atomic_mass == RB87_MASS {
        DEFAULT_SPECIES
    } else {
        "custom"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

impl From<Duration> for Timing {
    fn from(d: Duration) -> Self {
        Self { wall_seconds: d.as_secs_f64() }
    }
}

/// Envelope written around every JSON result.
#[derive(Debug, Clone, Serialize)]
pub struct ResultBundle<T: Serialize> {
    pub tool: String,
    pub command: String,
    pub units: &'static str,
    pub species: &'static str,
    /// The fully resolved configuration.
    pub config: RunConfig,
    pub derived: Option<DerivedParams>,
    pub result: T,
    pub warnings: Vec<String>,
    pub timing: Timing,
}

impl<T: Serialize> ResultBundle<T> {
    pub fn new(command: &str, config: &RunConfig, result: T, warnings: Vec<String>, elapsed: Duration) -> Self {
        Self {
            tool: format!("biphoton {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            units: UNITS,
            species: species(&config.physical_params),
            config: config.clone(),
            derived: derive(&config.physical_params).ok(),
            result,
            warnings,
            timing: elapsed.into(),
        }
    }
}

/// Leading weights kept in a summary.
pub const LAMBDA_HEAD: usize = 32;

/// The JSON body of the `schmidt` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct SchmidtSummary {
    pub lambdas: Vec<f64>,
    pub n_retained: usize,
    #[serde(rename = "S")]
    pub entropy_s: f64,
    #[serde(rename = "K")]
    pub schmidt_k: f64,
    pub grid: FrequencyGrid,
}

impl SchmidtSummary {
    pub fn new(result: &SchmidtResult, grid: FrequencyGrid) -> Self {
        Self {
            lambdas: result.lambdas.iter().take(LAMBDA_HEAD).copied().collect(),
            n_retained: result.lambdas.len(),
            entropy_s: result.entropy_s,
            schmidt_k: result.schmidt_k,
            grid,
        }
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Runs `body` against a buffered file and maps IO failures to the file's path.
pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<PathBuf> {
    let mut out = create(path)?;
    body(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    write_file(path, |out| writeln!(out, "{text}"))
}

/// `omega,re,im,abs2` for one mode.
pub fn write_mode_csv(path: &Path, omega: &[f64], mode: &[Complex64], config: &str) -> Result<PathBuf> {
    write_file(path, |out| {
        writeln!(out, "# config: {config}")?;
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(["omega", "re", "im", "abs2"])?;
        for (w, z) in omega.iter().zip(mode) {
            csv.write_record([w.to_string(), z.re.to_string(), z.im.to_string(), z.norm_sqr().to_string()])?;
        }
        csv.flush()
    })
}

/// A 2-D map: the header row carries idler frequencies, the first column signal frequencies.
pub fn write_heatmap_csv(
    path: &Path,
    omega_s: &[f64],
    omega_i: &[f64],
    value: impl Fn(usize, usize) -> f64,
    config: &str,
) -> Result<PathBuf> {
    write_file(path, |out| {
        writeln!(out, "# config: {config}")?;
        let mut csv = csv::Writer::from_writer(out);
        let header: Vec<String> = std::iter::once("omega_s\\omega_i".to_string()).chain(omega_i.iter().map(f64::to_string)).collect();
        csv.write_record(&header)?;
        for (r, ws) in omega_s.iter().enumerate() {
            let row: Vec<String> =
                std::iter::once(ws.to_string()).chain((0..omega_i.len()).map(|c| value(r, c).to_string())).collect();
            csv.write_record(&row)?;
        }
        csv.flush()
    })
}

/// Columns given by name, rows by index; missing cells are left empty.
pub fn write_table_csv(path: &Path, header: &[&str], columns: &[Vec<f64>], config: &str) -> Result<PathBuf> {
    let rows = columns.iter().map(Vec::len).max().unwrap_or(0);
    write_file(path, |out| {
        writeln!(out, "# config: {config}")?;
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(header)?;
        for r in 0..rows {
            csv.write_record(columns.iter().map(|c| c.get(r).map_or(String::new(), f64::to_string)))?;
        }
        csv.flush()
    })
}
