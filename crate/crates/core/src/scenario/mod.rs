//! Scenario data model: reports, sensors, submarine types and analyst
//! assumptions over one navigation map, with JSON persistence, NDJSON report
//! ingestion, filtering and a seeded incident simulator.

mod io;
mod model;
mod select;
mod simulate;

use thiserror::Error;

use crate::geometry::GeometryError;

pub use io::{load_scenario, parse_report_stream, save_scenario, MapSource};
pub use model::{
    Assumptions, CourseReference, Report, Scenario, Sensor, SubmarineType, TimeDelta, Timestamp,
    DEFAULT_COURSE_WEIGHT, DEFAULT_POSITION_SIGMA_M, DEFAULT_TYPE_WEIGHT,
};
pub use select::{select_reports, ReportFilter};
pub use simulate::{range_entries, simulate, SensorMissModel, SimConfig, TrackPlan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{}{message}", location(field, *line))]
    Schema {
        field: String,
        message: String,
        line: Option<usize>,
        column: Option<usize>,
    },
    #[error("{}{message}", location(field, *line))]
    Invalid {
        field: String,
        message: String,
        line: Option<usize>,
    },
    #[error("{field}: duplicate id `{id}`")]
    DuplicateId { field: String, id: String },
    #[error("{field}: unknown id `{id}`")]
    UnknownReference { field: String, id: String },
    #[error("map: {0}")]
    Map(GeometryError),
    #[error("the scenario defines no submarine types")]
    NoSubmarineType,
}

fn location(field: &str, line: Option<usize>) -> String {
    match (field.is_empty(), line) {
        (true, Some(l)) => format!("line {l}: "),
        (true, None) => String::new(),
        (false, Some(l)) => format!("line {l}: {field}: "),
        (false, None) => format!("{field}: "),
    }
}

impl ScenarioError {
    pub fn invalid(field: impl Into<String>, message: String) -> Self {
        Self::Invalid {
            field: field.into(),
            message,
            line: None,
        }
    }

    /// The offending field path, when the error concerns one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Self::Schema { field, .. } | Self::Invalid { field, .. } if !field.is_empty() => Some(field),
            Self::DuplicateId { field, .. } | Self::UnknownReference { field, .. } => Some(field),
            Self::Map(_) => Some("map"),
            _ => None,
        }
    }

    pub(crate) fn at_line(self, l: usize) -> Self {
        match self {
            Self::Invalid { field, message, .. } => Self::Invalid {
                field,
                message,
                line: Some(l),
            },
            Self::Schema {
                field,
                message,
                column,
                ..
            } => Self::Schema {
                field,
                message,
                line: Some(l),
                column,
            },
            other => other,
        }
    }
}
