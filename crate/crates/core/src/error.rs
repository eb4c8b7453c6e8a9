use std::path::PathBuf;

use thiserror::Error;

use crate::population::PersonId;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid clock: {0}")]
    InvalidClock(String),
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("cannot sample from an empty sequence")]
    EmptySample,
    #[error("all sampling weights are zero")]
    AllZeroWeights,
    #[error("invalid sampling weight {0}")]
    InvalidWeight(f64),
    #[error("{items} items but {weights} weights")]
    LengthMismatch { items: usize, weights: usize },

    #[error("unknown person {0}")]
    UnknownPerson(PersonId),
    #[error("person {0} is dead")]
    Dead(PersonId),
    #[error("parent {0} has the wrong gender for that role")]
    ParentGender(PersonId),
    #[error("persons {0} and {1} have the same gender")]
    SameGender(PersonId, PersonId),
    #[error("person {0} is under 18")]
    Underage(PersonId),
    #[error("person {0} is already married")]
    AlreadyMarried(PersonId),
    #[error("person {0} is not married")]
    NotMarried(PersonId),
    #[error("age of {0} steps is not representable")]
    InvalidAge(f64),

    #[error("unknown house {0}")]
    UnknownHouse(u32),
    #[error("density map has no inhabitable town")]
    EmptyDensityMap,
    #[error("town ({row}, {col}) is not inhabitable")]
    UninhabitableTown { row: u8, col: u8 },

    #[error("audit failed after step {step}:\n{details}")]
    Audit { step: u64, details: String },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        SimError::Parse { path: path.into(), line, message: message.into() }
    }
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
