//! Evidential multi-sensor submarine tracking.
//!
//! Uncertain sighting reports and fixed-sensor data are fused with
//! Dempster-Shafer evidence combination over geometric feasibility
//! constraints to answer how many submarines there are, where they can be,
//! and which report chains they most plausibly followed.

pub mod evidence;
pub mod geometry;
pub mod scenario;
pub mod connection;
pub mod round;
pub mod analysis;
pub mod evidence_map;
