//! Planar navigation geometry: obstacle maps, visibility graphs and
//! obstacle-avoiding shortest paths.
//!
//! Coordinates are projected meters. Water is closed and obstacles are open:
//! a path may run along a coastline or touch a vertex, but may not enter an
//! obstacle interior or squeeze along an edge shared by two obstacles.

mod navmap;
mod path;
mod polygon;
mod primitives;
mod visibility;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use navmap::{BlockKind, NavMap, DEFAULT_CELL_SIZE_M, DEFAULT_PROJECTION};
pub use path::{required_speed, shortest_path, GeoPath};
pub use polygon::Obstacle;
pub use primitives::{
    orientation, point_segment_distance, segment_contact_params, segment_meets_disc,
    segments_cross_properly, Point, Rect, EPS,
};
pub use visibility::{segment_clear, VisibilityGraph};

/// Which end of a path query an error refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    From,
    To,
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Endpoint::From => "from",
            Endpoint::To => "to",
        })
    }
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::Land => "land",
            BlockKind::Shallow => "shallow water",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("map bounds must have positive width and height")]
    DegenerateBounds,
    #[error("cannot parse map: {0}")]
    Parse(String),
    #[error("`{which}` point ({x}, {y}) lies outside the map bounds")]
    OutOfBounds { which: Endpoint, x: f64, y: f64 },
    #[error("`{which}` point ({x}, {y}) lies on {kind}")]
    EndpointBlocked {
        which: Endpoint,
        kind: BlockKind,
        x: f64,
        y: f64,
    },
    #[error("no navigable route between the endpoints")]
    NoRoute,
    #[error("the second report must be strictly later than the first")]
    NonPositiveInterval,
}
