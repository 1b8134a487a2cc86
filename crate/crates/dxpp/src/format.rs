//! Problem files (JSON), metadata sidecars and vector files.
//!
//! Matrices are either dense row lists or CSR objects
//! `{row_offsets, col_indices, values}`. A sparse `P` may carry only its upper
//! triangle when `"P_upper": true`. Floats are written with 17 significant
//! digits so a write/read cycle is bit-exact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dxpp_core::benchgen::{BenchInstance, SizeDescriptor};
use dxpp_core::linalg::{CsrMatrix, DenseMatrix, Matrix};
use dxpp_core::problem::{build_problem, expand_upper, QpProblem, StorageMode};
use dxpp_core::ProblemError;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid problem file: {0}")]
    Invalid(String),
    #[error("invalid problem data: {0}")]
    Problem(#[from] ProblemError),
}

pub type FormatResult<T> = std::result::Result<T, FormatError>;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(untagged)]
pub enum MatrixJson {
    Dense(Vec<Vec<f64>>),
    Sparse { row_offsets: Vec<usize>, col_indices: Vec<usize>, values: Vec<f64> },
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    pub storage_mode: String,
    #[serde(rename = "P")]
    pub p_matrix: MatrixJson,
    #[serde(rename = "P_upper", default, skip_serializing_if = "std::ops::Not::not")]
    pub p_upper: bool,
    pub q: Vec<f64>,
    #[serde(rename = "A")]
    pub a: MatrixJson,
    pub b: Vec<f64>,
    #[serde(rename = "C")]
    pub c: MatrixJson,
    pub d: Vec<f64>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct InstanceMetadata {
    pub family: String,
    pub size: serde_json::Map<String, serde_json::Value>,
    pub seed: u64,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<f64>>,
}

/// Writes every `f64` as `{:.16e}` (17 significant digits).
struct SignificantDigits;

impl Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

fn to_json_string<T: Serialize>(value: &T) -> FormatResult<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
    value.serialize(&mut ser)?;
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

fn matrix_to_json(m: &Matrix) -> MatrixJson {
    match m {
        Matrix::Dense(d) => MatrixJson::Dense((0..d.rows()).map(|i| d.row(i).to_vec()).collect()),
        Matrix::Sparse(s) => MatrixJson::Sparse {
            row_offsets: s.row_ptr().to_vec(),
            col_indices: s.col_idx().to_vec(),
            values: s.values().to_vec(),
        },
    }
}

fn matrix_from_json(what: &str, json: &MatrixJson, rows: usize, cols: usize) -> FormatResult<Matrix> {
    match json {
        MatrixJson::Dense(list) => {
            if list.len() != rows {
                return Err(FormatError::Invalid(format!("{what} has {} rows, expected {rows}", list.len())));
            }
            if let Some(bad) = list.iter().position(|r| r.len() != cols) {
                return Err(FormatError::Invalid(format!("{what} row {bad} has {} entries, expected {cols}", list[bad].len())));
            }
            if rows == 0 {
                return Ok(Matrix::Dense(DenseMatrix::zeros(0, cols)));
            }
            DenseMatrix::from_rows(list).map(Matrix::Dense).map_err(|e| FormatError::Invalid(format!("{what}: {e}")))
        }
        MatrixJson::Sparse { row_offsets, col_indices, values } => {
            if col_indices.iter().any(|&c| c >= cols) {
                return Err(FormatError::Invalid(format!("{what} has a column index out of range")));
            }
            CsrMatrix::from_csr_parts(rows, cols, row_offsets, col_indices, values)
                .map(Matrix::Sparse)
                .map_err(|e| FormatError::Invalid(format!("{what}: {e}")))
        }
    }
}

fn parse_storage(s: &str) -> FormatResult<StorageMode> {
    match s {
        "dense" => Ok(StorageMode::Dense),
        "sparse" | "sparse_csr" => Ok(StorageMode::SparseCsr),
        other => Err(FormatError::Invalid(format!("unknown storage_mode '{other}'"))),
    }
}

impl ProblemFile {
    pub fn from_problem(problem: &QpProblem) -> ProblemFile {
        ProblemFile {
            n: problem.n(),
            p: problem.num_eq(),
            m: problem.num_ineq(),
            storage_mode: problem.storage_mode().as_str().to_string(),
            p_matrix: matrix_to_json(problem.p()),
            p_upper: false,
            q: problem.q().to_vec(),
            a: matrix_to_json(problem.a()),
            b: problem.b().to_vec(),
            c: matrix_to_json(problem.c()),
            d: problem.d().to_vec(),
        }
    }

    pub fn to_problem(&self) -> FormatResult<QpProblem> {
        let mode = parse_storage(&self.storage_mode)?;
        let (n, p, m) = (self.n, self.p, self.m);
        for (what, len, want) in [("q", self.q.len(), n), ("b", self.b.len(), p), ("d", self.d.len(), m)] {
            if len != want {
                return Err(FormatError::Invalid(format!("{what} has length {len}, expected {want}")));
            }
        }
        let mut pm = matrix_from_json("P", &self.p_matrix, n, n)?;
        if self.p_upper {
            match &pm {
                Matrix::Sparse(s) => pm = Matrix::Sparse(expand_upper(s)?),
                Matrix::Dense(_) => return Err(FormatError::Invalid("P_upper requires compressed sparse P".into())),
            }
        }
        let a = matrix_from_json("A", &self.a, p, n)?;
        let c = matrix_from_json("C", &self.c, m, n)?;
        Ok(build_problem(pm, self.q.clone(), a, self.b.clone(), c, self.d.clone(), mode)?)
    }
}

pub fn problem_to_string(problem: &QpProblem) -> String {
    to_json_string(&ProblemFile::from_problem(problem)).expect("problem data is finite")
}

pub fn problem_from_str(text: &str) -> FormatResult<QpProblem> {
    let file: ProblemFile = serde_json::from_str(text)?;
    file.to_problem()
}

fn read_text(path: &Path) -> FormatResult<String> {
    fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> FormatResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| FormatError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

pub fn read_problem(path: &Path) -> FormatResult<QpProblem> {
    problem_from_str(&read_text(path)?)
}

pub fn write_problem(path: &Path, problem: &QpProblem) -> FormatResult<()> {
    write_text(path, &problem_to_string(problem))
}

/// A JSON array of numbers, e.g. the cotangent `r` for `single`.
pub fn read_vector(path: &Path) -> FormatResult<Vec<f64>> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

pub fn write_vector(path: &Path, v: &[f64]) -> FormatResult<()> {
    write_text(path, &to_json_string(&v)?)
}

fn size_map(size: &SizeDescriptor) -> serde_json::Map<String, serde_json::Value> {
    let mut map = serde_json::Map::new();
    let mut put = |k: &str, v: serde_json::Value| {
        map.insert(k.to_string(), v);
    };
    match *size {
        SizeDescriptor::RandomQp { n, m } => {
            put("n", n.into());
            put("m", m.into());
        }
        SizeDescriptor::Simplex { n } => put("n", n.into()),
        SizeDescriptor::Chain { points, dim } => {
            put("points", points.into());
            put("dim", dim.into());
        }
        SizeDescriptor::Portfolio { horizon, assets, risk_aversion, turnover } => {
            put("horizon", horizon.into());
            put("assets", assets.into());
            put("risk_aversion", risk_aversion.into());
            put("turnover", turnover.into());
        }
    }
    map
}

impl InstanceMetadata {
    pub fn from_instance(inst: &BenchInstance) -> InstanceMetadata {
        InstanceMetadata {
            family: inst.family.as_str().to_string(),
            size: size_map(&inst.size),
            seed: inst.seed,
            notes: inst.notes.clone(),
            input: inst.input.clone(),
            ground_truth: inst.ground_truth.clone(),
        }
    }
}

/// `foo.json` → `foo.meta.json`
pub fn sidecar_path(problem_path: &Path) -> PathBuf {
    let stem = problem_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    problem_path.with_file_name(format!("{stem}.meta.json"))
}

pub fn instance_to_strings(inst: &BenchInstance) -> (String, String) {
    let meta = to_json_string(&InstanceMetadata::from_instance(inst)).expect("metadata is finite");
    (problem_to_string(&inst.problem), meta)
}

/// Writes the problem file and its metadata sidecar; returns the sidecar path.
pub fn write_instance(path: &Path, inst: &BenchInstance) -> FormatResult<PathBuf> {
    let (problem, meta) = instance_to_strings(inst);
    write_text(path, &problem)?;
    let side = sidecar_path(path);
    write_text(&side, &meta)?;
    Ok(side)
}

pub fn read_metadata(path: &Path) -> FormatResult<InstanceMetadata> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json_string(&vec![0.1f64, -2.0]).unwrap();
        assert_eq!(s, "[1.0000000000000001e-1,-2.0000000000000000e0]");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.0]);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/x.json")), PathBuf::from("out/x.meta.json"));
    }
}
