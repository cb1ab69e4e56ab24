//! Time-evolving evidence map.
//!
//! The sea is divided into square cells. Every report places its trust in
//! its own cell; as time passes the plausibility spreads over the water the
//! submarine could have reached at its maximum speed, dimming with age and
//! dropping behind sensors that stayed silent. Layers are combined per cell
//! by Dempster's rule, and layers that have grown too old to say anything
//! are removed.
//!
//! Snapshots replay the scenario from its first report in fixed steps, so a
//! field is a pure function of the scenario and the requested time.

mod contour;
mod grid;
mod layer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contour::{contour_lines, Contour};
pub use grid::{CellClass, EvidenceGrid, GridShape};
pub use layer::Layer;

use crate::geometry::Point;
use crate::round::round_dp;
use crate::scenario::{Report, Scenario, ScenarioError, TimeDelta, Timestamp};

/// Decimal places of exported field values.
pub const VALUE_DECIMALS: i32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapParams {
    /// Cell edge in meters; the map's own cell size when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_size_m: Option<f64>,
    /// Replay step in seconds.
    pub step_s: f64,
    /// Half-life of a report's value; no decay when unset.
    pub half_life_s: Option<f64>,
    /// Layers whose maximum drops below this are removed.
    pub min_value: f64,
    /// Layers reaching more than this share of the water are removed.
    pub max_reach_fraction: f64,
    /// How many cells a report on land may be moved to reach water.
    pub snap_cells: usize,
    pub contour_levels: Vec<f64>,
}

impl Default for MapParams {
    fn default() -> Self {
        Self {
            cell_size_m: None,
            step_s: 60.0,
            half_life_s: Some(3600.0),
            min_value: 0.01,
            max_reach_fraction: 0.5,
            snap_cells: 2,
            contour_levels: vec![0.25, 0.5, 0.75],
        }
    }
}

impl MapParams {
    pub fn validate(&self) -> Result<(), EvidenceMapError> {
        let bad = |field: &str, message: &str| {
            Err(EvidenceMapError::InvalidParams {
                field: field.into(),
                message: message.into(),
            })
        };
        if let Some(c) = self.cell_size_m {
            if !(c > 0.0 && c.is_finite()) {
                return bad("cell_size_m", "must be positive");
            }
        }
        if !(self.step_s >= 0.001 && self.step_s.is_finite()) {
            return bad("step_s", "must be at least 1 ms");
        }
        if let Some(h) = self.half_life_s {
            if !(h > 0.0) {
                return bad("half_life_s", "must be positive");
            }
        }
        if !(0.0..=1.0).contains(&self.min_value) {
            return bad("min_value", "must lie in [0, 1]");
        }
        if !(self.max_reach_fraction > 0.0 && self.max_reach_fraction <= 1.0) {
            return bad("max_reach_fraction", "must lie in (0, 1]");
        }
        if self.contour_levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("contour_levels", "levels must lie in [0, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceMapError {
    #[error("{field}: {message}")]
    InvalidParams { field: String, message: String },
    #[error("{0} sensors exceed the supported maximum")]
    TooManySensors(usize),
    #[error("report `{id}` lies more than the snap distance from water")]
    ReportBlocked { id: String },
    #[error("report `{id}` is later than the grid time")]
    FutureReport { id: String },
    #[error("time step must not be negative, got {0} ms")]
    InvalidStep(i64),
    #[error("t before all reports")]
    BeforeReports { t: Timestamp },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

impl EvidenceMapError {
    pub fn field(&self) -> Option<&str> {
        match self {
            EvidenceMapError::InvalidParams { field, .. } => Some(field),
            EvidenceMapError::BeforeReports { .. } => Some("t"),
            EvidenceMapError::Scenario(e) => e.field(),
            _ => None,
        }
    }
}

fn ser_values<S: serde::Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&round_dp(*x, VALUE_DECIMALS))?;
    }
    seq.end()
}

/// Exported combined field. `values` is row-major from the southern row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceField {
    pub cell_size: f64,
    pub origin: Point,
    pub width: usize,
    pub height: usize,
    pub t: Timestamp,
    #[serde(serialize_with = "ser_values")]
    pub values: Vec<f64>,
    pub contours: Vec<Contour>,
    /// Reports with a live layer.
    pub layers: Vec<String>,
}

impl EvidenceField {
    pub fn from_grid(grid: &EvidenceGrid) -> Self {
        let shape = grid.shape();
        let values = grid.combined();
        let contours = grid
            .params()
            .contour_levels
            .iter()
            .map(|&level| Contour {
                level,
                lines: contour_lines(shape, &values, level),
            })
            .collect();
        Self {
            cell_size: shape.cell_size_m,
            origin: shape.origin,
            width: shape.width,
            height: shape.height,
            t: grid.time(),
            values,
            contours,
            layers: grid.active_reports().into_iter().map(String::from).collect(),
        }
    }
}

/// Replays the unflagged reports from the first one up to `t` and returns
/// the grid at `t`. Times after the last report predict forward.
pub fn replay(
    scenario: &Scenario,
    t: Timestamp,
    type_id: Option<&str>,
    params: &MapParams,
) -> Result<EvidenceGrid, EvidenceMapError> {
    let sub = scenario.resolve_type(type_id)?;
    let reports: Vec<&Report> = scenario.reports().iter().filter(|r| !r.flagged_false).collect();
    let first = match reports.first() {
        Some(r) if r.time <= t => r.time,
        _ => return Err(EvidenceMapError::BeforeReports { t }),
    };
    let mut grid = EvidenceGrid::new(scenario.map(), scenario.sensors(), sub, params.clone(), first)?;
    let step_ms = ((params.step_s * 1000.0).round() as i64).max(1);
    let mut next_report = 0;
    loop {
        while next_report < reports.len() && reports[next_report].time <= grid.time() {
            grid.add_report(reports[next_report])?;
            next_report += 1;
        }
        grid.age_out();
        if grid.time() >= t {
            break;
        }
        let mut next = (grid.time().0 + step_ms).min(t.0);
        if let Some(r) = reports.get(next_report) {
            next = next.min(r.time.0);
        }
        grid.step(TimeDelta(next - grid.time().0))?;
    }
    Ok(grid)
}

/// The exported combined field at `t`.
pub fn snapshot(
    scenario: &Scenario,
    t: Timestamp,
    type_id: Option<&str>,
    params: &MapParams,
) -> Result<EvidenceField, EvidenceMapError> {
    Ok(EvidenceField::from_grid(&replay(scenario, t, type_id, params)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NavMap, Obstacle, Rect};
    use crate::scenario::{Sensor, SubmarineType};

    const MIN: i64 = 60_000;

    fn rect(w: f64, h: f64) -> Rect {
        Rect::from_corners(Point::new(0.0, 0.0), Point::new(w, h))
    }

    fn scenario(map: NavMap) -> Scenario {
        let mut s = Scenario::new("m", map);
        // 500 m per minute: one orthogonal cell per step
        s.add_type(SubmarineType::new("k", 4.0, 500.0 / 60.0, 5.0)).unwrap();
        s
    }

    fn no_decay() -> MapParams {
        MapParams {
            half_life_s: None,
            max_reach_fraction: 1.0,
            ..MapParams::default()
        }
    }

    #[test]
    fn grid_rasterises_islands() {
        let island = Obstacle::new(
            vec![Point::new(1000.0, 1000.0), Point::new(2000.0, 1000.0), Point::new(2000.0, 2000.0), Point::new(1000.0, 2000.0)],
            0.0,
        )
        .unwrap();
        let map = NavMap::new(rect(5000.0, 3000.0), vec![island]).unwrap();
        let sub = SubmarineType::new("k", 4.0, 8.0, 5.0);
        let g = EvidenceGrid::new(&map, &[], &sub, MapParams::default(), Timestamp(0)).unwrap();
        assert_eq!((g.shape().width, g.shape().height), (10, 6));
        let land: Vec<usize> = (0..60).filter(|&c| !g.is_water(c)).collect();
        // centers (1250|1750, 1250|1750)
        assert_eq!(land, [22, 23, 32, 33]);
        let open = EvidenceGrid::new(&NavMap::open(rect(5000.0, 3000.0)), &[], &sub, MapParams::default(), Timestamp(0)).unwrap();
        assert!((0..60).all(|c| open.is_water(c)));
        let big = MapParams {
            cell_size_m: Some(10_000.0),
            ..MapParams::default()
        };
        let one = EvidenceGrid::new(&map, &[], &sub, big, Timestamp(0)).unwrap();
        assert_eq!(one.shape().len(), 1);
    }

    #[test]
    fn fresh_report_fills_one_cell() {
        let mut s = scenario(NavMap::open(rect(5000.0, 5000.0)));
        s.ingest_report(Report::new("a", 10 * MIN, Point::new(2600.0, 2400.0), 0.6)).unwrap();
        let f = snapshot(&s, Timestamp(10 * MIN), None, &MapParams::default()).unwrap();
        let hot: Vec<usize> = (0..f.values.len()).filter(|&c| f.values[c] > 0.0).collect();
        assert_eq!(hot, [45]);
        assert_eq!(f.values[45], 0.6);
        assert_eq!(f.layers, ["a"]);
        assert!(matches!(
            snapshot(&s, Timestamp(MIN), None, &MapParams::default()),
            Err(EvidenceMapError::BeforeReports { .. })
        ));
    }

    #[test]
    fn spreading_follows_grid_distance() {
        let mut s = scenario(NavMap::open(rect(5500.0, 5500.0)));
        s.ingest_report(Report::new("a", 0, Point::new(2750.0, 2750.0), 0.8)).unwrap();
        let f = snapshot(&s, Timestamp(2 * MIN), None, &no_decay()).unwrap();
        // radius 1000 m = 2 cells: orthogonal 2 and diagonal 1 (707 m) plus knight moves (1207 m) are out
        let hot = f.values.iter().filter(|v| **v > 0.0).count();
        assert_eq!(hot, 13);
        assert!(f.values.iter().all(|v| *v == 0.0 || *v == 0.8));
    }

    #[test]
    fn decay_halves_per_half_life() {
        let mut s = scenario(NavMap::open(rect(100_000.0, 100_000.0)));
        s.ingest_report(Report::new("a", 0, Point::new(50_000.0, 50_000.0), 0.8)).unwrap();
        let params = MapParams {
            half_life_s: Some(600.0),
            ..MapParams::default()
        };
        let g = replay(&s, Timestamp(10 * MIN), None, &params).unwrap();
        let max = g.combined().into_iter().fold(0.0, f64::max);
        assert!((max - 0.4).abs() < 1e-12);
        // 0.8 * 2^-7 < 0.01: removed
        let late = replay(&s, Timestamp(70 * MIN), None, &params).unwrap();
        assert!(late.active_reports().is_empty());
    }

    #[test]
    fn silent_sensor_wall_blocks_everything() {
        let mut s = scenario(NavMap::open(rect(5000.0, 5000.0)));
        for i in 0..10 {
            s.add_sensor(Sensor::new(format!("s{i}"), Point::new(2750.0, 250.0 + 500.0 * i as f64), 200.0, 1.0)).unwrap();
        }
        s.ingest_report(Report::new("a", 0, Point::new(750.0, 2250.0), 0.9)).unwrap();
        let f = snapshot(&s, Timestamp(30 * MIN), None, &no_decay()).unwrap();
        for c in 0..f.values.len() {
            if c % 10 >= 5 {
                assert_eq!(f.values[c], 0.0, "cell {c}");
            }
        }
        assert!(f.values[3] > 0.0);
    }

    #[test]
    fn signal_lifts_the_discount() {
        let mut s = scenario(NavMap::open(rect(5000.0, 500.0)));
        s.add_sensor(Sensor::new("s", Point::new(1250.0, 250.0), 100.0, 0.5)).unwrap();
        s.ingest_report(Report::new("a", 0, Point::new(250.0, 250.0), 0.8)).unwrap();
        let f = snapshot(&s, Timestamp(4 * MIN), None, &no_decay()).unwrap();
        assert_eq!(&f.values[..5], &[0.8, 0.8, 0.4, 0.4, 0.4]);
        let mut fired = s.clone();
        let mut sensor = fired.sensors()[0].clone();
        sensor.signals = vec![Timestamp(MIN)];
        fired.sensors_mut()[0] = sensor;
        let f = snapshot(&fired, Timestamp(4 * MIN), None, &no_decay()).unwrap();
        assert_eq!(&f.values[..5], &[0.8; 5]);
    }

    #[test]
    fn layers_combine_per_cell() {
        let mut s = scenario(NavMap::open(rect(2000.0, 2000.0)));
        s.ingest_report(Report::new("a", 0, Point::new(250.0, 250.0), 0.6)).unwrap();
        s.ingest_report(Report::new("b", 0, Point::new(250.0, 250.0), 0.5)).unwrap();
        let f = snapshot(&s, Timestamp(0), None, &MapParams::default()).unwrap();
        assert_eq!(f.values[0], 0.8);
    }

    #[test]
    fn land_reports_snap_or_fail() {
        let island = Obstacle::new(
            vec![Point::new(0.0, 0.0), Point::new(1500.0, 0.0), Point::new(1500.0, 3000.0), Point::new(0.0, 3000.0)],
            0.0,
        )
        .unwrap();
        let map = NavMap::new(rect(3000.0, 3000.0), vec![island]).unwrap();
        let sub = SubmarineType::new("k", 4.0, 8.0, 5.0);
        let mut g = EvidenceGrid::new(&map, &[], &sub, MapParams::default(), Timestamp(0)).unwrap();
        g.add_report(&Report::new("near", 0, Point::new(1400.0, 1300.0), 0.5)).unwrap();
        assert_eq!(g.layers[0].origin, 2 * 6 + 3);
        let far = Report::new("far", 0, Point::new(100.0, 1300.0), 0.5);
        assert!(matches!(g.add_report(&far), Err(EvidenceMapError::ReportBlocked { .. })));
    }

    #[test]
    fn zero_trust_layer_ages_out_at_once() {
        let mut s = scenario(NavMap::open(rect(2000.0, 2000.0)));
        s.ingest_report(Report::new("a", 0, Point::new(250.0, 250.0), 0.0)).unwrap();
        let g = replay(&s, Timestamp(0), None, &MapParams::default()).unwrap();
        assert!(g.active_reports().is_empty());
    }

    #[test]
    fn export_shape() {
        let mut s = scenario(NavMap::open(rect(2000.0, 1000.0)));
        s.ingest_report(Report::new("a", 0, Point::new(250.0, 250.0), 2.0 / 3.0)).unwrap();
        let f = snapshot(&s, Timestamp(0), None, &MapParams::default()).unwrap();
        let v = serde_json::to_value(&f).unwrap();
        assert_eq!(v["values"][0], 0.6667);
        assert_eq!(v["width"], 4);
        assert_eq!(v["origin"], serde_json::json!([0.0, 0.0]));
        assert_eq!(v["contours"].as_array().unwrap().len(), 3);
    }
}
