use thiserror::Error;

/// Failures raised by the classification engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("QR iteration did not converge on a {n}x{n} matrix within {cap} iterations")]
    NonConvergence { n: usize, cap: usize },

    #[error("adjacent Schur block exchange is ill-conditioned (condition {condition:.3e} exceeds cap {cap:.3e})")]
    SwapIllConditioned { condition: f64, cap: f64 },

    #[error("spectra overlap: minimum eigenvalue distance {distance:.3e} <= {tolerance:.3e}")]
    SpectraOverlap { distance: f64, tolerance: f64 },

    #[error("eigenvalue with real part {real_part:.3e} is too close to the classification threshold {threshold:.3e}")]
    BorderlineSpectrum { real_part: f64, threshold: f64 },

    #[error("sub-ranks {k0}+{k_plus}+{k_minus} do not add up to the Kalman rank {k_obs}")]
    AdditivityViolation {
        k0: usize,
        k_plus: usize,
        k_minus: usize,
        k_obs: usize,
    },

    #[error("system is not completely observable (rank {rank} < {n})")]
    NotObservable { rank: usize, n: usize },

    #[error("expected a single-output system, got {p} outputs")]
    NotSiso { p: usize },

    #[error("center pair is not completely observable (k0 = {k0} < n0 = {n0})")]
    CenterNotObservable { k0: usize, n0: usize },

    #[error("mixed spectrum with n0 = {n0}: the 3-D catalog covers only all-center or all-hyperbolic systems")]
    MixedSpectrum { n0: usize },

    #[error("system does not match any catalog entry")]
    NotInCatalog,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("witness is singular (|det P| = {det:.3e} <= {threshold:.3e})")]
    SingularWitness { det: f64, threshold: f64 },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("invalid value: {0}")]
    Value(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable name used in machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonConvergence { .. } => "NonConvergence",
            Error::SwapIllConditioned { .. } => "SwapIllConditioned",
            Error::SpectraOverlap { .. } => "SpectraOverlap",
            Error::BorderlineSpectrum { .. } => "BorderlineSpectrum",
            Error::AdditivityViolation { .. } => "AdditivityViolation",
            Error::NotObservable { .. } => "NotObservable",
            Error::NotSiso { .. } => "NotSISO",
            Error::CenterNotObservable { .. } => "CenterNotObservable",
            Error::MixedSpectrum { .. } => "MixedSpectrum",
            Error::NotInCatalog => "NotInCatalog",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::SingularWitness { .. } => "SingularWitness",
            Error::Shape(_) => "ShapeError",
            Error::Value(_) => "ValueError",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "IOError",
        }
    }
}
