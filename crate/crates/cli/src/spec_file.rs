//! JSON file formats for channels and bipartite states.
//!
//! Complex entries are `[re, im]` pairs; matrices are lists of rows.

use std::path::Path;

use locchan::channels::validate_cptp;
use locchan::linalg::Complex64;
use locchan::{
    BipartiteDims, ComplexMatrix, ComplexVector, DensityMatrix, KrausChannel, PureState, Tolerances,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// One complex number as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "[f64; 2]")]
pub struct Entry(pub [f64; 2]);

impl TryFrom<Vec<f64>> for Entry {
    type Error = String;

    fn try_from(v: Vec<f64>) -> Result<Self, String> {
        match v[..] {
            [re, im] => Ok(Entry([re, im])),
            _ => Err(format!(
                "complex entry must be [re, im], found {} numbers",
                v.len()
            )),
        }
    }
}

impl From<Entry> for [f64; 2] {
    fn from(e: Entry) -> Self {
        e.0
    }
}

pub type MatrixRows = Vec<Vec<Entry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<MatrixRows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpecFile {
    pub dims: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pure: Option<Vec<Entry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<MatrixRows>,
}

/// A parsed state file, before or after validation.
#[derive(Debug, Clone)]
pub enum LoadedState {
    Pure(PureState),
    Mixed(DensityMatrix),
}

/// Raw file contents together with their SHA-256 digest.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_source(path: &Path) -> Result<SourceFile, CliError> {
    let display = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| CliError::Parse {
        message: format!("{display}: cannot read file: {e}"),
        field: None,
        line: None,
        column: None,
    })?;
    let sha256 = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|e| CliError::Parse {
        message: format!("{display}: not UTF-8: {e}"),
        field: None,
        line: None,
        column: None,
    })?;
    Ok(SourceFile {
        path: display,
        text,
        sha256,
    })
}

/// Deserializes `text`, reporting the JSON path, line and column of the first error.
pub fn parse_json<T: for<'de> Deserialize<'de>>(path: &str, text: &str) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CliError::Parse {
            message: format!("{path}: {inner}"),
            field: (field != ".").then_some(field),
            line: Some(inner.line()),
            column: Some(inner.column()),
        }
    })?;
    de.end().map_err(|e| CliError::Parse {
        message: format!("{path}: {e}"),
        field: None,
        line: Some(e.line()),
        column: Some(e.column()),
    })?;
    Ok(value)
}

fn shape_error(path: &str, field: String, message: String) -> CliError {
    CliError::Parse {
        message: format!("{path}: {field}: {message}"),
        field: Some(field),
        line: None,
        column: None,
    }
}

pub fn entry_to_complex(e: &Entry) -> Complex64 {
    Complex64::new(e.0[0], e.0[1])
}

pub fn complex_to_entry(z: &Complex64) -> Entry {
    Entry([z.re, z.im])
}

pub fn matrix_to_rows(m: &ComplexMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| complex_to_entry(&m[(i, j)]))
                .collect()
        })
        .collect()
}

pub fn vector_to_entries(v: &ComplexVector) -> Vec<Entry> {
    v.iter().map(complex_to_entry).collect()
}

fn rows_to_matrix(
    path: &str,
    field: &str,
    rows: &MatrixRows,
    nrows: usize,
    ncols: usize,
) -> Result<ComplexMatrix, CliError> {
    if rows.len() != nrows {
        return Err(shape_error(
            path,
            field.to_string(),
            format!("expected {nrows} rows, found {}", rows.len()),
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(shape_error(
                path,
                format!("{field}[{i}]"),
                format!("expected {ncols} entries, found {}", row.len()),
            ));
        }
    }
    Ok(ComplexMatrix::from_fn(nrows, ncols, |i, j| {
        entry_to_complex(&rows[i][j])
    }))
}

impl ChannelSpecFile {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        Self {
            dim_in: ch.dim_in(),
            dim_out: ch.dim_out(),
            kraus: ch.kraus().iter().map(matrix_to_rows).collect(),
        }
    }

    /// Kraus matrices after shape checks, without the CPTP test.
    pub fn matrices(&self, path: &str) -> Result<Vec<ComplexMatrix>, CliError> {
        if self.dim_in == 0 || self.dim_out == 0 {
            return Err(shape_error(
                path,
                "dim_in".into(),
                "dimensions must be positive".into(),
            ));
        }
        if self.kraus.is_empty() {
            return Err(shape_error(
                path,
                "kraus".into(),
                "at least one operator is required".into(),
            ));
        }
        self.kraus
            .iter()
            .enumerate()
            .map(|(k, rows)| {
                rows_to_matrix(
                    path,
                    &format!("kraus[{k}]"),
                    rows,
                    self.dim_out,
                    self.dim_in,
                )
            })
            .collect()
    }

    pub fn to_channel(&self, path: &str, tol: Tolerances) -> Result<KrausChannel, CliError> {
        let kraus = self.matrices(path)?;
        validate_cptp(kraus, self.dim_in, self.dim_out, tol)
            .map_err(|e| CliError::from_core(path, e))
    }
}

impl StateSpecFile {
    pub fn from_pure(psi: &PureState) -> Self {
        let d = psi.dims();
        Self {
            dims: [d.m, d.n],
            pure: Some(vector_to_entries(psi.amplitudes())),
            density: None,
        }
    }

    pub fn from_density_matrix(dims: BipartiteDims, m: &ComplexMatrix) -> Self {
        Self {
            dims: [dims.m, dims.n],
            pure: None,
            density: Some(matrix_to_rows(m)),
        }
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self::from_density_matrix(rho.dims(), rho.matrix())
    }

    pub fn to_state(&self, path: &str, tol: Tolerances) -> Result<LoadedState, CliError> {
        let dims = BipartiteDims::new(self.dims[0], self.dims[1]).map_err(|_| {
            shape_error(
                path,
                "dims".into(),
                "both dimensions must be positive".into(),
            )
        })?;
        let d = dims.total();
        match (&self.pure, &self.density) {
            (Some(amps), None) => {
                if amps.len() != d {
                    return Err(shape_error(
                        path,
                        "pure".into(),
                        format!("expected {d} amplitudes, found {}", amps.len()),
                    ));
                }
                let v = ComplexVector::from_iterator(d, amps.iter().map(entry_to_complex));
                PureState::new(dims, v, tol)
                    .map(LoadedState::Pure)
                    .map_err(|e| CliError::from_core(path, e))
            }
            (None, Some(rows)) => {
                let m = rows_to_matrix(path, "density", rows, d, d)?;
                DensityMatrix::new(dims, m, tol)
                    .map(LoadedState::Mixed)
                    .map_err(|e| CliError::from_core(path, e))
            }
            _ => Err(shape_error(
                path,
                "pure".into(),
                "exactly one of \"pure\" or \"density\" must be given".into(),
            )),
        }
    }
}

/// Serializes with a trailing newline. Floats are printed in shortest
/// round-trip form.
pub fn to_document<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("spec types always serialize");
    s.push('\n');
    s
}
