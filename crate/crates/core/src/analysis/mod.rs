//! Evidential analyses over a connection graph.
//!
//! Every report is a simple support for "this report is true" and every
//! graph edge a simple support against "these two reports are consecutive
//! sightings of one submarine". Combining them over the space of joint
//! hypotheses (which reports are true, and how the true ones split into
//! submarine tracks) yields ranked tracks, submarine-count intervals and
//! the total conflict between the sources.
//!
//! Region evidence ([`evidence_region`], [`incident_start`]) works on the
//! reports alone.

mod count;
mod cover;
mod dp;
mod hypothesis;
mod joint;
mod paths;
mod region;

use thiserror::Error;

pub use count::{count_intervals, CountResult};
pub use cover::{min_path_cover, min_submarines};
pub use hypothesis::HypothesisSpace;
pub use joint::{joint_evidence, Budget, HypSet, JointEvidence, JointMass};
pub use paths::{ranked_paths, PathResult, PathsResult};
pub use region::{evidence_region, incident_start, region_interval};

use crate::evidence::EvidenceError;

pub const DEFAULT_EXACT_LIMIT: usize = 10;
pub const DEFAULT_BEAM_WIDTH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Largest report count analysed by full enumeration.
    pub exact_limit: usize,
    /// Hypotheses kept by the beam search above the exact limit.
    pub beam_width: usize,
    /// Focal sets kept per combination step in beam mode.
    pub beam_focal: usize,
    pub max_hypotheses: usize,
    pub budget: Budget,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            exact_limit: DEFAULT_EXACT_LIMIT,
            beam_width: DEFAULT_BEAM_WIDTH,
            beam_focal: 20_000,
            max_hypotheses: 2_000_000,
            budget: Budget::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{reports} reports exceed the exact analysis limit of {limit}")]
    TooManyReports { reports: usize, limit: usize },
    #[error("at most 255 submarines are supported, got {0}")]
    TooManySubmarines(usize),
    #[error("hypothesis space too large: {0}")]
    TooComplex(String),
    #[error("{name}: {message}")]
    InvalidParameter { name: String, message: String },
    #[error("total conflict after combining {0}")]
    TotalConflict(String),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

impl AnalysisError {
    /// The offending parameter, for input errors.
    pub fn field(&self) -> Option<&str> {
        match self {
            AnalysisError::InvalidParameter { name, .. } => Some(name),
            _ => None,
        }
    }
}
