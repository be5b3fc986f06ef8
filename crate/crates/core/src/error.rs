use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate density: {0}")]
    DegenerateDensity(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("non-finite objective: {0}")]
    NonFinite(String),

    #[error("line {line}: {msg}")]
    ConfigLine { line: usize, msg: String },

    #[error("{0}")]
    Config(String),

    #[error("missing artifact {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("malformed artifact {}: {msg}", .path.display())]
    MalformedArtifact { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
