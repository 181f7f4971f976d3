use thiserror::Error;

/// Errors produced by construction, evolution and analysis routines.
#[derive(Error, Debug)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("register of {qubits} qubits exceeds the configured ceiling of {ceiling}")]
    RegisterCeiling { qubits: usize, ceiling: usize },

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("operator is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("site {site} appears more than once")]
    DuplicateSite { site: usize },

    #[error("site {site} out of range for a {n_qubits}-qubit register")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("branch index {branch} out of range 1..={branches}")]
    InvalidBranch { branch: usize, branches: usize },

    #[error("flip count {n} out of range 0..={max}")]
    FlipCountOutOfRange { n: usize, max: usize },

    #[error("dephasing step too large: gamma*N*dt = {value:.3e} must stay below {limit}")]
    StepTooLarge { value: f64, limit: f64 },

    #[error("schedule requires 0 <= t <= T, got t = {net}, T = {total}")]
    InvalidSchedule { net: f64, total: f64 },

    #[error("time grid must be uniform and start at 0")]
    NonUniformGrid,

    #[error("spectrum is empty")]
    EmptySpectrum,

    #[error("gyromagnetic ratio of the filtered species must be nonzero")]
    ZeroGyromagneticRatio,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
