use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong between reading a table and writing a curve.
///
/// Variants split into two families the CLI maps onto exit codes: problems
/// with what the caller handed us (files, tables, configuration) and problems
/// the pipeline ran into on valid input (singular fits, lost support).
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("non-numeric value '{value}' at row {row}, column '{column}'")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value at row {row}, column '{column}'")]
    NonFinite { row: usize, column: String },

    #[error("empty table: no data rows")]
    EmptyTable,

    #[error("outcome not binary at row {row} (found {value})")]
    NonBinaryOutcome { row: usize, value: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular design matrix in {context}")]
    SingularDesign { context: String },

    #[error("IRLS did not converge within {iterations} iterations")]
    IrlsNoConvergence { iterations: usize },

    #[error(
        "complete separation suspected: |coefficient| reached {max_abs_coef:.2} at convergence"
    )]
    CompleteSeparation { max_abs_coef: f64 },

    #[error("unit {unit} has zero density mass over the whole grid; its support set is undefined")]
    ZeroDensityUnit { unit: usize },

    #[error("{failed} of {total} bootstrap replicates failed; first failure: {first}")]
    BootstrapFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("{failed} of {total} simulation replications failed; first failure: {first}")]
    MonteCarloFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("unknown simulation law '{0}' (expected 1A, 1B, 1C, 2A, 2B, or 3)")]
    UnknownLaw(String),
}

impl Error {
    /// True for errors caused by the caller's input (bad file, bad table,
    /// bad configuration) rather than by the estimation pipeline itself.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Csv(_)
                | Error::MissingColumn(_)
                | Error::NonNumeric { .. }
                | Error::NonFinite { .. }
                | Error::EmptyTable
                | Error::NonBinaryOutcome { .. }
                | Error::InvalidGrid(_)
                | Error::InvalidConfig(_)
                | Error::DimensionMismatch(_)
                | Error::UnknownLaw(_)
        )
    }
}
