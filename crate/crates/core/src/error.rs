use std::path::PathBuf;

/// Errors produced anywhere in the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: missing required column `{0}`")]
    MissingColumn(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("column `{0}` already exists")]
    ColumnExists(String),

    #[error("imputation error: column `{0}` has no observed values")]
    Imputation(String),

    #[error("column `{0}` has missing values")]
    Incomplete(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate treatment: residualized treatment has zero variation")]
    DegenerateTreatment,

    #[error("collinear design: column `{column}` is linearly dependent on {preceding:?}")]
    Collinear {
        column: String,
        preceding: Vec<String>,
    },

    #[error("no within-entity variation: every entity has a single observation")]
    NoWithinVariation,

    #[error("data error: {0}")]
    Data(String),

    #[error("optimizer error: {0}")]
    Optimizer(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
