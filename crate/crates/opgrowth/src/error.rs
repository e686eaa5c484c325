use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site index {index} out of range for {n_sites} sites")]
    SiteOutOfRange { index: usize, n_sites: usize },
    #[error("occupation {n_up} out of range for {n_sites} sites")]
    ChargeOutOfRange { n_up: usize, n_sites: usize },
    #[error("gate sites must be distinct and in range: {0}")]
    BadGateSites(String),
    #[error("geometry too small: {0}")]
    GeometryTooSmall(String),
    #[error("time {t} exceeds schedule length {n_steps}")]
    TimeOutOfRange { t: usize, n_steps: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("fit window error: {0}")]
    Window(String),
    #[error("no front detected in profile")]
    NoFront,
    #[error("operator dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("q must be even and >= 4, got {0}")]
    OddQ(usize),
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("zero-length operator")]
    ZeroLength,
    #[error("empty size block for s = {0}")]
    EmptySizeBlock(usize),
    #[error("divergent quantity: {0}")]
    Divergence(String),
    #[error("undefined butterfly velocity: lambda(0) <= 0")]
    UndefinedVelocity,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("schema mismatch: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
