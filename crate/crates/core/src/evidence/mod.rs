//! Exact Dempster-Shafer kernel over small finite frames.
//!
//! Subsets are bitsets over an ordered [`Frame`] of at most
//! [`MAX_FRAME_SIZE`] labels. Combination is exact up to floating point and
//! bit-for-bit commutative; masses below [`kernel::PRUNE_BELOW`] are pruned
//! after each combination.
//!
//! The kernel does not check that combined sources are independent. Callers
//! are responsible for not feeding it correlated evidence (for example two
//! detections of one sensor counted as separate sources).

mod frame;
pub mod kernel;
mod mass;

use thiserror::Error;

pub use frame::{Frame, Subset, MAX_FRAME_SIZE};
pub use kernel::FocalSet;
pub use mass::{combine_all, combine_all_traced, Conflict, EvidenceInterval, FoldOutcome, MassFunction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("frame must contain at least one hypothesis")]
    EmptyFrame,
    #[error("duplicate frame label `{0}`")]
    DuplicateLabel(String),
    #[error("frame of {0} labels exceeds the supported maximum of {MAX_FRAME_SIZE}")]
    FrameTooLarge(usize),
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("focal set must be non-empty")]
    EmptyFocal,
    #[error("hypothesis must be non-empty")]
    EmptyHypothesis,
    #[error("subset is not contained in the frame")]
    OutsideFrame,
    #[error("mass {0} outside [0, 1]")]
    MassOutOfRange(f64),
    #[error("mass assigned to the empty set")]
    MassOnEmptySet,
    #[error("masses sum to {0}, expected 1")]
    NotNormalised(f64),
    #[error("mass functions are defined over different frames")]
    FrameMismatch,
    #[error("total conflict: the sources are contradictory (k = 1)")]
    TotalConflict,
    #[error("cannot combine an empty list")]
    EmptyList,
    #[error("invalid evidence interval [{support}, {plausibility}]")]
    InvalidInterval { support: f64, plausibility: f64 },
}
