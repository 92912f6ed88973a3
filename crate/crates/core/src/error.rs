use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("parameter {t} outside spline domain [0, {length}]")]
    OutOfDomain { t: f64, length: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("frame transport flipped the tangent (1 + t.t' = {0:e})")]
    FrameFlip(f64),
    #[error("reference normal is not admissible: {0}")]
    ReferenceNormal(String),
    #[error("unknown metal '{0}'")]
    UnknownMetal(String),
    #[error("frequency {f_thz} THz outside tabulated range [{lo}, {hi}] for {metal}")]
    FrequencyOutOfRange { metal: String, f_thz: f64, lo: f64, hi: f64 },
    #[error("invalid cross-section: {0}")]
    CrossSection(String),
    #[error("singular polarization tensor: {0}")]
    SingularTensor(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("operator outside the differentiable domain: {0}")]
    DomainX(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that stem from user-supplied configuration or files.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Parse(_)
                | Error::UnknownMetal(_)
                | Error::FrequencyOutOfRange { .. }
                | Error::CrossSection(_)
                | Error::InvalidPartition(_)
                | Error::ReferenceNormal(_)
                | Error::InvalidInput(_)
                | Error::Io(_)
        )
    }
}
