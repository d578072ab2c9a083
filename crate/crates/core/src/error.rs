use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported group kind `{0}` (expected dyadic1d, similitude2d or shearlet2d)")]
    UnsupportedKind(String),
    #[error("point {0:?} lies outside the dual orbit")]
    OffOrbit([f64; 2]),
    #[error("support of {what} meets the blind spot (margin {margin:.3e})")]
    TouchesBlindSpot { what: String, margin: f64 },
    #[error("frequency sample {0:?} is not covered by the index window")]
    Uncovered([f64; 2]),
    #[error("window support exceeds the frequency box: {0}")]
    SupportOutsideBox(String),
    #[error("parameter truncation clips the integrand: {0}")]
    Clipped(String),
    #[error("index window misses indices {0:?}")]
    WindowTooSmall(Vec<String>),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
