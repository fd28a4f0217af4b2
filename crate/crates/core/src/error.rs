//! Error type shared across the crate.

use std::fmt;

/// Everything that can go wrong while building models or running the scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeError {
    /// A constructor argument violated an invariant; the string names the parameter.
    InvalidParameter(String),
    /// The evolving set reached the outer margin band; the domain is too small
    /// for the configured step, this is never silently clamped.
    MarginBreach { step: usize, level: Option<usize> },
    /// Evolved superlevel sets lost their nesting. With exact cuts this indicates
    /// a solver bug, so it is surfaced loudly instead of being repaired.
    NestingViolation { step: usize, level: usize },
    /// forced_in and forced_out overlap; no feasible set exists.
    InfeasibleConstraints,
    /// Signed distances need both a nonempty set and a nonempty complement.
    EmptyOrFullSet,
    /// Brute-force oracles refuse grids beyond their cost guard.
    GridTooLarge { nx: usize, ny: usize, limit: usize },
    /// Coarea levels must be sorted ascending.
    LevelsNotSorted,
    /// An operation that needs cells got an empty set.
    EmptySet,
    /// Time stepping was asked to underflow (FD reference only).
    TimeStepUnderflow,
}

impl fmt::Display for SchemeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            SchemeError::MarginBreach { step, level } => match level {
                Some(l) => write!(f, "margin breach at step {step}, level {l}"),
                None => write!(f, "margin breach at step {step}"),
            },
            SchemeError::NestingViolation { step, level } => {
                write!(f, "superlevel nesting violated at step {step}, level {level}")
            }
            SchemeError::InfeasibleConstraints => {
                write!(f, "forced_in and forced_out intersect")
            }
            SchemeError::EmptyOrFullSet => {
                write!(f, "signed distance needs a set that is neither empty nor full")
            }
            SchemeError::GridTooLarge { nx, ny, limit } => {
                write!(f, "grid {nx}x{ny} exceeds the {limit}-cell-per-side oracle guard")
            }
            SchemeError::LevelsNotSorted => write!(f, "levels must be sorted ascending"),
            SchemeError::EmptySet => write!(f, "operation needs a nonempty set"),
            SchemeError::TimeStepUnderflow => write!(f, "FD time step underflowed 1e-12"),
        }
    }
}

impl std::error::Error for SchemeError {}

pub type Result<T> = std::result::Result<T, SchemeError>;
