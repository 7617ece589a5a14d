//! Report rows and atomically written CSV/JSON files.

use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rslax_core::linalg::CMatrix;
use serde::Serialize;

use crate::config::SCHEMA_VERSION;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JsonComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for JsonComplex {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

pub fn json_complexes(v: &[C64]) -> Vec<JsonComplex> {
    v.iter().map(|&z| z.into()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub status: Status,
    /// `null` in JSON when the check could not be evaluated.
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRow {
    /// Passes iff `residual < tolerance` (strict, so a zero tolerance fails
    /// every check).
    pub fn judge(name: impl Into<String>, residual: f64, tolerance: f64, detail: Option<String>) -> Self {
        let status = if residual.is_finite() && residual < tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            name: name.into(),
            status,
            residual,
            tolerance,
            detail,
        }
    }

    pub fn failed(name: impl Into<String>, tolerance: f64, detail: String) -> Self {
        Self::judge(name, f64::NAN, tolerance, Some(detail))
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub tol_scale: f64,
    pub checks: Vec<CheckRow>,
    /// Output files relative to the output directory, `report.json` last.
    pub files: Vec<String>,
    /// Kept out of `report.json` so reruns are byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn new(command: &'static str, seed: u64, tol_scale: f64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            seed,
            tol_scale,
            checks: Vec::new(),
            files: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckRow::passed)
    }
}

/// Writes files into one directory through a temporary file and a rename.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Io(format!("{name}: {e}"));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(self.dir.join(name)).map_err(|e| io(e.error))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn write_csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let err = |e: csv::Error| CliError::Io(format!("{name}: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(row).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.write(name, &bytes)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

/// Shortest round-trip decimal form; `NaN` and infinities as `nan`, `inf`, `-inf`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

/// Rows `(row, col, re, im)` of a matrix.
pub fn matrix_rows(m: &CMatrix) -> (Vec<String>, Vec<Vec<String>>) {
    let header = ["row", "col", "re", "im"].map(String::from).to_vec();
    let mut rows = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            rows.push(vec![i.to_string(), j.to_string(), num(z.re), num(z.im)]);
        }
    }
    (header, rows)
}
