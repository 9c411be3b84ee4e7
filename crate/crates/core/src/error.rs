use thiserror::Error;

/// Error type shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid: {0}")]
    Grid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("domain: expected {expected} data, got {got}")]
    Domain { expected: &'static str, got: &'static str },

    #[error(
        "aliasing guard: input must carry a checked Fourier-support radius \
         <= {limit} (got {got:?}); pass allow_alias to override"
    )]
    AliasGuard { limit: f64, got: Option<f64> },

    #[error("band limit: declared radius {radius} leaks {leakage:.3e} of total energy (cap {cap:.1e})")]
    BandLimit { radius: f64, leakage: f64, cap: f64 },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("window construction: {0}")]
    Window(String),

    #[error("unsupported dimension {dim}: {why}")]
    Dim { dim: usize, why: &'static str },

    #[error("constants table: {0}")]
    Constants(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
