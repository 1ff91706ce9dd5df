use std::path::PathBuf;

/// Errors raised anywhere in the pipeline. `exit_code` maps them onto the CLI contract.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: record {line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("dataset {0} contains no polygons")]
    EmptyDataset(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("no clutter entry for sign={sign} kind={kind} psi={elevation_deg} h_bs={bs_height_m}")]
    MissingClutter {
        sign: String,
        kind: String,
        elevation_deg: f64,
        bs_height_m: f64,
    },
    #[error("numerical quality: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// 2 for I/O, 3 for bad input, 4 for numerical quality failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            Error::Numeric(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
