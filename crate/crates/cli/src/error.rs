use std::fmt;
use std::path::Path;

/// Malformed input: unreadable JSON, bad flags, missing fields.
pub const EXIT_MALFORMED: i32 = 64;
/// Well-formed input with out-of-range values or mismatched dimensions.
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;
pub const EXIT_CANT_CREATE: i32 = 73;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn malformed(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_MALFORMED,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: msg.into(),
        }
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: msg.into(),
        }
    }

    pub fn read(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_NO_INPUT,
            message: format!("cannot read {}: {err}", path.display()),
        }
    }

    pub fn write(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: EXIT_CANT_CREATE,
            message: format!("cannot write {}: {err}", path.display()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<lmr_core::Error> for CliError {
    fn from(e: lmr_core::Error) -> Self {
        use lmr_core::Error as E;
        match e {
            E::Dimension(_) | E::Argument(_) | E::NonFinite(_) | E::Infeasible { .. } => {
                Self::data(e.to_string())
            }
            E::SvdNoConvergence { .. } | E::Lp(_) => Self::internal(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
