use std::path::{Path, PathBuf};

use dspm_core::decomp::DecompError;
use dspm_core::features::FeatureError;
use dspm_core::label::LabelError;
use dspm_core::search::SearchError;
use dspm_core::slic::SlicError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: file not found", .0.display())]
    Missing(PathBuf),
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("{0}")]
    Parameter(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error(transparent)]
    Slic(#[from] SlicError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Label(#[from] LabelError),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        Error::Format { path: path.to_path_buf(), msg: msg.into() }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::Missing(path.to_path_buf())
        } else {
            Error::Io { path: path.to_path_buf(), source }
        }
    }

    /// Process exit status: 3 missing input, 4 malformed input, 5 parameter
    /// out of range, 1 anything else. Usage errors exit with 2 from clap.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Missing(_) => 3,
            Error::Format { .. } | Error::Decomp(_) | Error::Label(_) => 4,
            Error::Parameter(_) | Error::Slic(_) | Error::Feature(_) | Error::Search(_) => 5,
            Error::Io { .. } => 1,
        }
    }
}
