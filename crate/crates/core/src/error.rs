use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DzkError {
    #[error("odd resolution {0} on axis {1}")]
    OddResolution(usize, char),
    #[error("resolution {0} on axis {1} is below the minimum of 4")]
    ResolutionTooSmall(usize, char),
    #[error("box length {0} on axis {1} must be positive and finite")]
    InvalidLength(f64, char),
    #[error("non-finite value at sample {0}")]
    NonFinite(usize),
    #[error("multiplier symbol is not finite at mode ({0}, {1}, {2})")]
    NonFiniteSymbol(f64, f64, f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("sample count {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),
    #[error("time {0} is not a node of the time grid")]
    OffGridTime(f64),
    #[error("invalid norm specification: {0}")]
    InvalidNormSpec(String),
    #[error("negative Riesz order {0}")]
    NegativeOrder(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("wavenumber 2^{0} is not resolved by the grid")]
    Unresolvable(u32),
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),
    #[error("boundary contamination {mass:.3e} exceeds {limit:.1e} at t = {t}")]
    BoundaryContamination { mass: f64, limit: f64, t: f64 },
    #[error("too few points for a slope fit: {0}")]
    TooFewPoints(usize),
    #[error(
        "Picard iteration is not contracting (ratios {ratios:?}); use a smaller horizon or smaller data"
    )]
    NonContraction { ratios: Vec<f64> },
    #[error("imaginary residue {0:.3e} in a real quantity")]
    ImaginaryResidue(f64),
    #[error("step rejected: mass drift {drift:.3e} at t = {t}")]
    StepRejected { drift: f64, t: f64 },
    #[error("malformed field dump: {0}")]
    MalformedDump(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for DzkError {
    fn from(e: std::io::Error) -> Self {
        DzkError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, DzkError>;
