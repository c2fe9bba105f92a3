use std::fmt;

/// A single broken invariant of a candidate MDP.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowSum { row: usize, sum: f64 },
    NegativeProbability { row: usize, col: usize, value: f64 },
    ProbabilityAboveOne { row: usize, col: usize, value: f64 },
    NonFinite { what: &'static str },
    DiscountOutOfRange { discount: f64 },
    NotSquare { rows: usize, cols: usize },
    RewardLength { expected: usize, found: usize },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RowSum { row, sum } => write!(f, "row {row} sums to {sum}"),
            Violation::NegativeProbability { row, col, value } => {
                write!(f, "negative probability {value} at ({row}, {col})")
            }
            Violation::ProbabilityAboveOne { row, col, value } => {
                write!(f, "probability {value} above 1 at ({row}, {col})")
            }
            Violation::NonFinite { what } => write!(f, "{what} contains a non-finite entry"),
            Violation::DiscountOutOfRange { discount } => {
                write!(f, "discount not in (0,1): {discount}")
            }
            Violation::NotSquare { rows, cols } => {
                write!(f, "dimension mismatch: transitions is {rows}x{cols}, not square")
            }
            Violation::RewardLength { expected, found } => write!(
                f,
                "dimension mismatch: rewards has length {found}, expected {expected}"
            ),
            Violation::Empty => write!(f, "dimension mismatch: no states"),
        }
    }
}

/// Every invariant violation found while validating an MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid MDP: {0}")]
    InvalidMdp(ValidationReport),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid feature basis: {0}")]
    InvalidFeatures(String),

    #[error("invalid state weights: {0}")]
    InvalidWeights(String),

    #[error("{matrix} is singular (condition estimate {condition:.3e})")]
    Singular { matrix: &'static str, condition: f64 },

    #[error("eigensolver did not converge")]
    EigenFailure,

    #[error("value estimate is not in span(Φ): distance {distance:.3e}")]
    NotInSpan { distance: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cell (gamma={gamma}, n={n}, k={k}) is incomplete: {detail}")]
    IncompleteCell {
        gamma: f64,
        n: usize,
        k: usize,
        detail: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            found,
        })
    }
}
