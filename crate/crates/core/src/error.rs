use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("invalid Pauli word {0:?}")]
    InvalidWord(String),

    #[error("matrix is not Hermitian (max entry deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value encountered at step {0}")]
    NonFinite(usize),

    #[error("at least two samples are required")]
    TooFewSamples,

    #[error("time grid must be strictly increasing")]
    BadGrid,

    #[error("grid too coarse: estimated error {estimate:e} exceeds tolerance {tol:e}")]
    GridTooCoarse { estimate: f64, tol: f64 },

    #[error("series order {order} too large for n = {n}")]
    OrderTooLarge { order: usize, n: usize },

    #[error("operator has support outside the {0} class")]
    WrongSupport(&'static str),

    #[error("degenerate spectrum")]
    DegenerateSpectrum,

    #[error("H does not generate a constant-H geodesic: |[Q(H), P(H)]| = {0:e}")]
    NotConstantH(f64),

    #[error("the identity word has no Ricci entry")]
    IdentityWord,

    #[error("vectors are linearly dependent")]
    LinearlyDependent,

    #[error("Ricci flow step rejected: weight class {0} would become non-positive")]
    StepRejected(usize),

    #[error("malformed truth table: {0}")]
    TruthTable(String),

    #[error("size limit exceeded: {0}")]
    TooLarge(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("continuation failed at q = {q}: endpoint error {error:e}")]
    ContinuationFailed { q: f64, error: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
