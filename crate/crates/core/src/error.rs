use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("scale out of range: {0}")]
    Range(String),
    #[error("window cannot resolve {0}")]
    Resolution(String),
    #[error("not enough samples: {0}")]
    Arity(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("evolution diverged at t = {t}")]
    Diverged {
        t: f64,
        /// Last finite (phi, dphi/dt) pair before the blowup.
        last: Box<(crate::fourier::SpatialField, crate::fourier::SpatialField)>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
