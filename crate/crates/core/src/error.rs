use std::fmt;
use std::io;

use serde::{Deserialize, Serialize};

/// One broken configuration constraint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub value: String,
    pub constraint: String,
}

impl Violation {
    pub fn new(field: &str, value: String, constraint: &str) -> Self {
        Violation {
            field: field.to_owned(),
            value,
            constraint: constraint.to_owned(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}: {}", self.field, self.value, self.constraint)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameters: {}", join(.0))]
    InvalidParams(Vec<Violation>),
    #[error("outcome has zero probability at belief {belief} under rule {gamma_id}")]
    ZeroProbabilityOutcome { belief: f64, gamma_id: usize },
    #[error("relative value iteration did not converge after {iterations} iterations (span {span:e})")]
    NonConvergence { iterations: usize, span: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("empty rule set")]
    EmptyGammaSet,
    #[error("malformed artifact: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
