//! Link evaluation between time-ordered report pairs and the resulting
//! connection graph.
//!
//! Each link collects negative evidence against "both reports come from the
//! same submarine": required speed, silent sensors along the route, course
//! disagreement and conflicting type observations. The factors combine as
//! simple supports against the link, giving the interval `[0, 1 - q]`.

mod factors;
mod graph;

use thiserror::Error;

use crate::scenario::ScenarioError;

pub use factors::{
    angular_distance, combine_against, path_meets_sensor, q_course, q_sensors, q_speed, q_type, LinkFactors,
};
pub use graph::{
    build_graph, communicating_reports, evaluate_link, Communicating, ConnectionGraph, GraphExport, LinkEvidence,
    LinkReason, NodeExport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error("unknown report `{0}`")]
    UnknownReport(String),
    #[error("duplicate report `{0}`")]
    DuplicateReport(String),
    #[error("duplicate link {from} -> {to}")]
    DuplicateLink { from: String, to: String },
    #[error("report `{to}` is not strictly later than `{from}`")]
    NotTimeOrdered { from: String, to: String },
    #[error("link {from} -> {to} has mass {q} outside [0, 1]")]
    InvalidMass { from: String, to: String, q: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}
