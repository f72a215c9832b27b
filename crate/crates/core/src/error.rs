use thiserror::Error;

/// Errors shared across the crate.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid operand: {0}")]
    InvalidOperand(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index {index} out of range for {dim} basis states")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not representable as a real matrix: {0}")]
    NotRealRepresentable(String),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal {offdiag:.3e})")]
    NoEigConvergence { sweeps: usize, offdiag: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("singular readout mitigation: 1 - p_plus = 0 on qubit {0}")]
    SingularMitigation(usize),

    #[error("inconsistent linear system: zero matrix with nonzero right-hand side")]
    InconsistentSystem,

    #[error("imaginary-time step too large: expansion factor {factor:.6} <= 0; reduce dtau")]
    StepTooLarge { factor: f64 },

    #[error("degenerate Krylov space: overlap matrix has no eigenvalue above floor {floor:.3e}")]
    DegenerateKrylov { floor: f64 },

    #[error("no Krylov candidate met the uncertainty threshold {delta}; best dE seen was {best_delta_e:.6}")]
    NoConvergence { delta: f64, best_delta_e: f64 },

    #[error("spectrum incomplete: found {found} of {expected} levels (covered energies: {covered:?})")]
    MissingLevels {
        found: usize,
        expected: usize,
        covered: Vec<f64>,
    },

    #[error("assembled eigenvector is not real: max |Im| = {max_imag:.3e}")]
    RealnessViolation { max_imag: f64 },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
