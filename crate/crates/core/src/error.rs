use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("solver did not converge after {iterations} iterations (last gap {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("training diverged (non-finite loss at epoch {epoch}); try a smaller learning rate")]
    Diverged { epoch: usize },

    #[error("singular design matrix")]
    Singular,

    #[error("fit failed on subsample {index}: {source}")]
    Subsample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("out-of-bag prediction needs at least 2 subsamples excluding every point; offending indices: {0:?}")]
    OobCoverage(Vec<usize>),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
