use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { pos: usize, name: String },

    /// Division by zero, even root of a negative number, or a non-finite
    /// intermediate. `node` is the printed sub-expression that failed.
    #[error("domain error in `{node}`: {message}")]
    Domain { node: String, message: String },

    /// An evaluation failure attributed to a specific sample point.
    #[error("at point {point:?}: {source}")]
    AtPoint {
        point: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("point belongs to chart `{found}`, expected `{expected}`")]
    ChartMismatch { expected: String, found: String },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("matrix is singular at the evaluation point (det = {det:e})")]
    Singular { det: f64 },

    #[error("target torsion unreachable: relative residual {residual:e}")]
    Unreachable { residual: f64 },

    #[error("rank deficiency: rank {rank}, expected {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("connection does not preserve the structure bundle: residual {residual:e}")]
    NotPreserving { residual: f64 },

    #[error("hypothesis region empty: {0}")]
    HypothesisRegionEmpty(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn at_point(self, point: &[f64]) -> Error {
        match self {
            Error::AtPoint { .. } => self,
            other => Error::AtPoint {
                point: point.to_vec(),
                source: Box::new(other),
            },
        }
    }
}
