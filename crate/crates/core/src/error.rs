use std::fmt;

use thiserror::Error;

/// Which degenerate locus an observation fell on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateLocus {
    /// `x1 = x2` (bivariate) or `x` proportional to the vector of ones.
    Sum,
    /// `x1 = -x2` (bivariate) or `x` orthogonal to the vector of ones.
    Difference,
    /// All components are zero.
    Origin,
}

impl fmt::Display for DegenerateLocus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DegenerateLocus::Sum => write!(f, "observation lies on the diagonal (x1 = x2 / x ∝ ι)"),
            DegenerateLocus::Difference => {
                write!(f, "observation lies on the anti-diagonal (x1 = -x2 / x ⊥ ι)")
            }
            DegenerateLocus::Origin => write!(f, "observation is the origin"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("degenerate observation{}: {locus}", fmt_row(.row))]
    Degenerate {
        row: Option<usize>,
        locus: DegenerateLocus,
    },

    #[error("empty sample")]
    EmptySample,

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("column {column} has zero dispersion")]
    ZeroDispersion { column: usize },

    #[error("numerical failure in {context}: {detail}")]
    Numerical {
        context: &'static str,
        detail: String,
    },
}

fn fmt_row(row: &Option<usize>) -> String {
    match row {
        Some(r) => format!(" at row {r}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    /// Attach a row index to a degenerate-observation error.
    pub(crate) fn at_row(self, row: usize) -> Self {
        match self {
            Error::Degenerate { locus, .. } => Error::Degenerate {
                row: Some(row),
                locus,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
