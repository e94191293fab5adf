use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KerrError {
    /// The input specification is malformed (wrong amplitude count, n = 0, ...).
    #[error("invalid input state: {0}")]
    InvalidInput(String),

    /// A state vector with zero norm cannot be normalized.
    #[error("zero-norm state vector: {0}")]
    ZeroNorm(String),

    /// Two signal states with different total photon numbers were combined.
    #[error("photon number mismatch: {left} vs {right}")]
    PhotonNumberMismatch { left: u32, right: u32 },

    /// A protocol parameter (theta, alpha, trials, ...) is out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Adjacent homodyne peaks coincide and cannot be separated by a threshold.
    #[error("unresolvable peaks: {0}")]
    UnresolvablePeaks(String),

    /// Gap index outside the valid range for the photon number.
    #[error("gap index {k} out of range for n = {n} ({gaps} gaps)")]
    GapOutOfRange { n: u32, k: usize, gaps: usize },

    /// The homodyne outcome lies so far from every peak that the collapsed
    /// state underflows to nothing.
    #[error("numerically void outcome at x = {x}: collapsed norm below 1e-300")]
    VoidOutcome { x: f64 },

    /// An evolved branch disagrees with the closed-form probe phase.
    #[error("phase law violated for ket ({n1}, {n2}): got {got}, expected {expected}")]
    PhaseLaw { n1: u32, n2: u32, got: f64, expected: f64 },
}

pub type KerrResult<T> = Result<T, KerrError>;
