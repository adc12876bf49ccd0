use std::fmt;

use serde::{Deserialize, Serialize};

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single offending field in a rejected parameter set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Every field that failed validation, in declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationErrors(pub Vec<FieldError>);

impl ValidationErrors {
    pub fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(FieldError::new(field, message));
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|e| format!("{}: {}", e.field, e.message)).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty population")]
    EmptyPopulation,
    #[error("HW expectation requires p+q=1")]
    NotNormalized,
    #[error("frequency {0} outside [0, 1]")]
    FrequencyOutOfRange(f64),
    #[error("gamete pool must hold an even number of tokens, got {0}")]
    OddPool(u64),
    #[error("population extinct under selection")]
    Extinct,
    #[error("mean fitness zero")]
    MeanFitnessZero,
    #[error("invalid parameters: {0}")]
    Validation(ValidationErrors),
    #[error("expected N={expected} individuals, got {got}")]
    WrongTotal { expected: u64, got: u64 },
    #[error("generation {got} cannot be entered before generation {expected} is complete")]
    Sequencing { expected: usize, got: usize },
    #[error("no complete parental generation to step from")]
    NoParental,
    #[error("session has terminated: {0}")]
    Terminated(String),
    #[error("no data")]
    NoData,
    #[error("session {0} not found")]
    NotFound(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("unsupported schema version {found} (this build reads version {supported})")]
    UnsupportedSchema { found: u64, supported: u64 },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyPopulation => "empty_population",
            Error::NotNormalized => "not_normalized",
            Error::FrequencyOutOfRange(_) => "frequency_out_of_range",
            Error::OddPool(_) => "odd_pool",
            Error::Extinct => "extinct",
            Error::MeanFitnessZero => "mean_fitness_zero",
            Error::Validation(_) => "validation_error",
            Error::WrongTotal { .. } => "wrong_total",
            Error::Sequencing { .. } => "sequencing_error",
            Error::NoParental => "no_parental",
            Error::Terminated(_) => "session_terminated",
            Error::NoData => "no_data",
            Error::NotFound(_) => "not_found",
            Error::Integrity(_) => "integrity_error",
            Error::UnsupportedSchema { .. } => "unsupported_schema",
            Error::Csv(_) => "csv_error",
            Error::Io(_) => "io_error",
        }
    }
}

impl From<ValidationErrors> for Error {
    fn from(errs: ValidationErrors) -> Self {
        Error::Validation(errs)
    }
}
