use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the estimation and robustness pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("invalid marginal: {0}")]
    InvalidMarginal(String),

    #[error("point {point:?} lies outside the support")]
    Domain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("variable index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },

    #[error("model output has zero variance (constant model)")]
    ConstantModel,

    #[error("normalized indices undefined: total indices sum to zero")]
    ZeroIndexSum,

    #[error("model evaluation failed on matrix {matrix}, row {row}: {reason}")]
    Evaluation {
        matrix: usize,
        row: usize,
        reason: String,
    },

    #[error("zero nominal density at matrix {matrix}, row {row}")]
    ZeroDensity { matrix: usize, row: usize },

    #[error("perturbed complement marginal vanishes at sample {row} (index {index}) with nonzero pair weight")]
    Weight { row: usize, index: usize },

    #[error("perturbed weights sum to zero")]
    DegenerateWeights,

    #[error("quantity of interest is singular: |y2(t_end)| = {0:e}")]
    QoiSingular(f64),

    #[error("ODE state became non-finite")]
    BlowUp,

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Attaches a pipeline stage label to an error.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
