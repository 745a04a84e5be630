use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("header mismatch: {0}")]
    Header(String),

    #[error("row {row}: expected {expected} fields, found {found}")]
    FieldCount { row: usize, expected: usize, found: usize },

    #[error("row {row}, column {column}: {message}")]
    Field {
        row: usize,
        column: String,
        message: String,
    },

    #[error("dataset has {count} violation(s); first: {first}")]
    Validation { count: usize, first: String },

    #[error("dataset has no data rows")]
    EmptyTable,

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("column {column}: {message}")]
    Fit { column: String, message: String },

    #[error("column {column}: unseen value {value:?}")]
    UnseenCategory { column: String, value: String },

    #[error("unknown class label {0:?}")]
    UnknownLabel(String),

    #[error("class index {0} out of range")]
    LabelOutOfRange(usize),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite gradient at parameter {0}")]
    NonFiniteGradient(usize),
}

impl Error {
    /// True for errors caused by the content of the data (bad values, unseen
    /// categories, schema conflicts) rather than by its structure or by I/O.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Field { .. }
                | Error::Validation { .. }
                | Error::Fit { .. }
                | Error::UnseenCategory { .. }
                | Error::UnknownLabel(_)
                | Error::LabelOutOfRange(_)
                | Error::Schema(_)
        )
    }
}
