use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use lmr_core::{DenseMatrix, LinearTransformation, MeasurementNorm};

use crate::error::{CliError, CliResult};

/// Operator file: `p` frames, each an `m × n` matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub frames: Vec<Vec<f64>>,
    #[serde(default)]
    pub norm: Option<MeasurementNorm>,
}

impl OperatorFile {
    pub fn into_operator(self) -> CliResult<LinearTransformation> {
        if self.m == 0 || self.n == 0 {
            return Err(CliError::data("m and n must be >= 1"));
        }
        if self.frames.len() != self.p {
            return Err(CliError::data(format!(
                "p = {} but {} frames given",
                self.p,
                self.frames.len()
            )));
        }
        let frames = self
            .frames
            .into_iter()
            .enumerate()
            .map(|(k, f)| {
                DenseMatrix::from_row_major(self.m, self.n, f)
                    .map_err(|e| CliError::data(format!("frame {k}: {e}")))
            })
            .collect::<CliResult<Vec<_>>>()?;
        let op = LinearTransformation::new(self.m, self.n, frames)?;
        Ok(op.with_norm(self.norm.unwrap_or(MeasurementNorm::L2)))
    }
}

/// Matrix file: `rows × cols` entries in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl MatrixFile {
    pub fn into_matrix(self) -> CliResult<DenseMatrix> {
        Ok(DenseMatrix::from_row_major(
            self.rows,
            self.cols,
            self.entries,
        )?)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))
}

pub fn read_operator(path: &Path) -> CliResult<LinearTransformation> {
    read_json::<OperatorFile>(path)?.into_operator()
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::write(p, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::write(Path::new("<stdout>"), e))
        }
    }
}
