use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    #[error("state matrix is not Hurwitz")]
    NotHurwitz,

    #[error("matrix is singular")]
    Singular,

    #[error("generator order {0} outside supported range 1..=10")]
    UnsupportedOrder(usize),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    #[error("unknown bus id {0}")]
    UnknownBus(usize),

    #[error("bus {0} is not a generator bus")]
    NotGenerator(usize),

    #[error("bus {0} is not a load bus")]
    NotLoad(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("key sets differ between allocation and costs")]
    KeyMismatch,

    #[error("dispatch problem has no generators")]
    NoGenerators,

    #[error("invalid network: {}", .0.join("; "))]
    InvalidNetwork(Vec<String>),

    #[error(
        "equilibrium flow solve did not converge after {iterations} iterations \
         (residual {residual:.3e}); reduce the loads or increase line susceptances"
    )]
    FlowSolve { iterations: usize, residual: f64 },

    #[error("non-finite value in {variable} at t = {time}")]
    NonFinite { variable: String, time: f64 },

    #[error("no certificate supplied for generator bus {0}")]
    MissingCertificate(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
