use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("input has no header row")]
    MissingHeader,

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("market column `{name}` dropped: {missing_pct:.1}% of cells missing")]
    MarketDropped { name: String, missing_pct: f64 },

    #[error("need at least {required} observations, found {found}")]
    TooFewObservations { required: usize, found: usize },

    #[error("asset `{0}` is the market column")]
    AssetIsMarket(String),

    #[error("non-positive price {value} in `{column}` at row {row}; log returns undefined")]
    NonPositivePrice {
        column: String,
        row: usize,
        value: f64,
    },

    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("non-finite value in input series")]
    NonFinite,

    #[error("degenerate data: {0}")]
    Degenerate(&'static str),

    #[error("leading coefficient is zero; not a cubic")]
    NotCubic,

    #[error("no valid rows to rank")]
    NoValidRows,

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Numerical failures (as opposed to bad input or configuration).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_) | Error::NotCubic | Error::NoValidRows
        )
    }
}
