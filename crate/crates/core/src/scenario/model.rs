use std::fmt;
use std::ops::{Add, Sub};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::io::MapSource;
use super::ScenarioError;
use crate::geometry::{NavMap, Point};

/// Scenario time in integer milliseconds since the scenario epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub const fn from_millis(ms: i64) -> Self {
        Self(ms)
    }

    pub fn from_secs(s: f64) -> Self {
        Self((s * 1000.0).round() as i64)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

/// Signed difference between two timestamps, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TimeDelta(pub i64);

impl TimeDelta {
    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }
}

impl Sub for Timestamp {
    type Output = TimeDelta;
    fn sub(self, o: Timestamp) -> TimeDelta {
        TimeDelta(self.0 - o.0)
    }
}

impl Add<TimeDelta> for Timestamp {
    type Output = Timestamp;
    fn add(self, d: TimeDelta) -> Timestamp {
        Timestamp(self.0 + d.0)
    }
}

pub const DEFAULT_POSITION_SIGMA_M: f64 = 500.0;

fn default_sigma() -> f64 {
    DEFAULT_POSITION_SIGMA_M
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// An uncertain sighting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Report {
    pub id: String,
    pub time: Timestamp,
    pub position: Point,
    pub trust_p: f64,
    #[serde(default = "default_sigma")]
    pub position_sigma_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_course_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_speed_mps: Option<f64>,
    #[serde(default)]
    pub source: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub flagged_false: bool,
}

impl Report {
    pub fn new(id: impl Into<String>, time_ms: i64, position: Point, trust_p: f64) -> Self {
        Self {
            id: id.into(),
            time: Timestamp(time_ms),
            position,
            trust_p,
            position_sigma_m: DEFAULT_POSITION_SIGMA_M,
            observed_type: None,
            observed_course_deg: None,
            observed_speed_mps: None,
            source: String::new(),
            flagged_false: false,
        }
    }

    pub fn with_course(mut self, deg: f64) -> Self {
        self.observed_course_deg = Some(deg);
        self
    }

    pub fn with_type(mut self, type_id: impl Into<String>) -> Self {
        self.observed_type = Some(type_id.into());
        self
    }

    /// Checks value ranges. `field` prefixes the reported field path.
    pub fn validate(&self, field: &str) -> Result<(), ScenarioError> {
        let bad = |name: &str, msg: String| ScenarioError::invalid(format!("{field}.{name}"), msg);
        if self.id.is_empty() {
            return Err(bad("id", "must not be empty".into()));
        }
        if !(0.0..=1.0).contains(&self.trust_p) {
            return Err(bad("trust_p", format!("{} is outside [0, 1]", self.trust_p)));
        }
        if !(self.position_sigma_m >= 0.0) || !self.position_sigma_m.is_finite() {
            return Err(bad("position_sigma_m", format!("{} must be >= 0", self.position_sigma_m)));
        }
        if !self.position.x.is_finite() || !self.position.y.is_finite() {
            return Err(bad("position", "coordinates must be finite".into()));
        }
        if let Some(c) = self.observed_course_deg {
            if !(0.0..360.0).contains(&c) {
                return Err(bad("observed_course_deg", format!("{c} is outside [0, 360)")));
            }
        }
        if let Some(v) = self.observed_speed_mps {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(bad("observed_speed_mps", format!("{v} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// A fixed sensor with a circular range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub id: String,
    pub position: Point,
    pub range_m: f64,
    pub detect_prob: f64,
    /// Closed intervals during which the sensor listens. Empty means always.
    #[serde(default)]
    pub active_intervals: Vec<[Timestamp; 2]>,
    /// Times at which the sensor fired.
    #[serde(default)]
    pub signals: Vec<Timestamp>,
}

impl Sensor {
    pub fn new(id: impl Into<String>, position: Point, range_m: f64, detect_prob: f64) -> Self {
        Self {
            id: id.into(),
            position,
            range_m,
            detect_prob,
            active_intervals: Vec::new(),
            signals: Vec::new(),
        }
    }

    /// Was the sensor listening during the whole closed window `[t0, t1]`?
    pub fn active_throughout(&self, t0: Timestamp, t1: Timestamp) -> bool {
        self.active_intervals.is_empty()
            || self.active_intervals.iter().any(|[a, b]| *a <= t0 && t1 <= *b)
    }

    pub fn active_at(&self, t: Timestamp) -> bool {
        self.active_throughout(t, t)
    }

    /// Did the sensor fire within the closed window `[t0, t1]`?
    pub fn fired_within(&self, t0: Timestamp, t1: Timestamp) -> bool {
        self.signals.iter().any(|s| t0 <= *s && *s <= t1)
    }

    /// Silent throughout `[t0, t1]`: listening the whole time and never fired.
    pub fn silent_throughout(&self, t0: Timestamp, t1: Timestamp) -> bool {
        self.active_throughout(t0, t1) && !self.fired_within(t0, t1)
    }

    pub fn covers(&self, p: Point) -> bool {
        self.position.distance(p) <= self.range_m
    }

    pub fn validate(&self, field: &str) -> Result<(), ScenarioError> {
        let bad = |name: &str, msg: String| ScenarioError::invalid(format!("{field}.{name}"), msg);
        if self.id.is_empty() {
            return Err(bad("id", "must not be empty".into()));
        }
        if !(self.range_m > 0.0) || !self.range_m.is_finite() {
            return Err(bad("range_m", format!("{} must be > 0", self.range_m)));
        }
        if !(0.0..=1.0).contains(&self.detect_prob) {
            return Err(bad("detect_prob", format!("{} is outside [0, 1]", self.detect_prob)));
        }
        for (i, [a, b]) in self.active_intervals.iter().enumerate() {
            if a > b {
                return Err(bad(&format!("active_intervals[{i}]"), "start is after end".into()));
            }
            if i > 0 && self.active_intervals[i - 1][1] >= *a {
                return Err(bad(
                    &format!("active_intervals[{i}]"),
                    "intervals must be ordered and non-overlapping".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmarineType {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub cruise_speed_mps: f64,
    pub max_speed_mps: f64,
    pub draught_m: f64,
}

impl SubmarineType {
    pub fn new(id: impl Into<String>, cruise_speed_mps: f64, max_speed_mps: f64, draught_m: f64) -> Self {
        let id = id.into();
        Self {
            name: id.clone(),
            id,
            cruise_speed_mps,
            max_speed_mps,
            draught_m,
        }
    }

    pub fn validate(&self, field: &str) -> Result<(), ScenarioError> {
        let bad = |name: &str, msg: String| ScenarioError::invalid(format!("{field}.{name}"), msg);
        if self.id.is_empty() {
            return Err(bad("id", "must not be empty".into()));
        }
        if !(self.cruise_speed_mps > 0.0) || !self.cruise_speed_mps.is_finite() {
            return Err(bad("cruise_speed_mps", format!("{} must be > 0", self.cruise_speed_mps)));
        }
        if !(self.max_speed_mps >= self.cruise_speed_mps) || !self.max_speed_mps.is_finite() {
            return Err(bad(
                "max_speed_mps",
                format!("{} must be >= cruise_speed_mps", self.max_speed_mps),
            ));
        }
        if !(self.draught_m > 0.0) || !self.draught_m.is_finite() {
            return Err(bad("draught_m", format!("{} must be > 0", self.draught_m)));
        }
        Ok(())
    }
}

/// Which path bearing an observed course is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CourseReference {
    /// Departure course against the initial bearing only.
    Initial,
    /// Arrival course against the final bearing only.
    Final,
    /// Departure against initial and arrival against final, averaged.
    #[default]
    Averaged,
}

pub const DEFAULT_COURSE_WEIGHT: f64 = 0.5;
pub const DEFAULT_TYPE_WEIGHT: f64 = 0.9;

fn default_course_weight() -> f64 {
    DEFAULT_COURSE_WEIGHT
}

fn default_type_weight() -> f64 {
    DEFAULT_TYPE_WEIGHT
}

/// Analyst assumptions attached to a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assumptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumed_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub now: Option<Timestamp>,
    #[serde(default = "default_course_weight")]
    pub course_weight: f64,
    #[serde(default = "default_type_weight")]
    pub type_weight: f64,
    #[serde(default)]
    pub course_reference: CourseReference,
}

impl Default for Assumptions {
    fn default() -> Self {
        Self {
            assumed_type: None,
            now: None,
            course_weight: DEFAULT_COURSE_WEIGHT,
            type_weight: DEFAULT_TYPE_WEIGHT,
            course_reference: CourseReference::default(),
        }
    }
}

/// Reports, sensors and submarine types over one navigation map.
///
/// Reports are kept sorted by `(time, id)`. All mutators validate their input
/// and leave the scenario unchanged on error.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub(crate) map: Arc<NavMap>,
    pub(crate) map_source: MapSource,
    pub(crate) types: Vec<SubmarineType>,
    pub(crate) sensors: Vec<Sensor>,
    pub(crate) reports: Vec<Report>,
    pub assumptions: Assumptions,
}

fn report_order(a: &Report, b: &Report) -> std::cmp::Ordering {
    a.time.cmp(&b.time).then_with(|| a.id.cmp(&b.id))
}

impl Scenario {
    /// An empty scenario whose map is stored inline.
    pub fn new(id: impl Into<String>, map: NavMap) -> Self {
        let source = MapSource::Inline(map.to_geojson());
        Self::with_map_source(id, Arc::new(map), source)
    }

    pub(crate) fn with_map_source(id: impl Into<String>, map: Arc<NavMap>, map_source: MapSource) -> Self {
        Self {
            id: id.into(),
            map,
            map_source,
            types: Vec::new(),
            sensors: Vec::new(),
            reports: Vec::new(),
            assumptions: Assumptions::default(),
        }
    }

    /// Builds and validates a scenario from its parts.
    pub fn from_parts(
        id: impl Into<String>,
        map: NavMap,
        types: Vec<SubmarineType>,
        sensors: Vec<Sensor>,
        reports: Vec<Report>,
        assumptions: Assumptions,
    ) -> Result<Self, ScenarioError> {
        let mut s = Self::new(id, map);
        s.types = types;
        s.sensors = sensors;
        s.reports = reports;
        s.assumptions = assumptions;
        s.validate()?;
        s.reports.sort_by(report_order);
        Ok(s)
    }

    pub fn map(&self) -> &NavMap {
        &self.map
    }

    pub fn map_arc(&self) -> &Arc<NavMap> {
        &self.map
    }

    pub fn map_source(&self) -> &MapSource {
        &self.map_source
    }

    pub fn types(&self) -> &[SubmarineType] {
        &self.types
    }

    pub fn sensors(&self) -> &[Sensor] {
        &self.sensors
    }

    /// All reports, flagged ones included, sorted by `(time, id)`.
    pub fn reports(&self) -> &[Report] {
        &self.reports
    }

    pub fn report(&self, id: &str) -> Option<&Report> {
        self.reports.iter().find(|r| r.id == id)
    }

    pub fn submarine_type(&self, id: &str) -> Option<&SubmarineType> {
        self.types.iter().find(|t| t.id == id)
    }

    /// Resolves the type to analyse under: the explicit id, else the
    /// scenario's assumed type, else the first catalog entry.
    pub fn resolve_type(&self, id: Option<&str>) -> Result<&SubmarineType, ScenarioError> {
        match id.or(self.assumptions.assumed_type.as_deref()) {
            Some(id) => self.submarine_type(id).ok_or_else(|| ScenarioError::UnknownReference {
                field: "type".into(),
                id: id.into(),
            }),
            None => self.types.first().ok_or(ScenarioError::NoSubmarineType),
        }
    }

    /// The analyst's "now": the explicit assumption, else the latest report time.
    pub fn now(&self) -> Option<Timestamp> {
        self.assumptions
            .now
            .or_else(|| self.reports.last().map(|r| r.time))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (i, t) in self.types.iter().enumerate() {
            t.validate(&format!("types[{i}]"))?;
            if self.types[..i].iter().any(|o| o.id == t.id) {
                return Err(ScenarioError::DuplicateId {
                    field: format!("types[{i}].id"),
                    id: t.id.clone(),
                });
            }
        }
        for (i, s) in self.sensors.iter().enumerate() {
            s.validate(&format!("sensors[{i}]"))?;
            if self.sensors[..i].iter().any(|o| o.id == s.id) {
                return Err(ScenarioError::DuplicateId {
                    field: format!("sensors[{i}].id"),
                    id: s.id.clone(),
                });
            }
        }
        let mut ids: Vec<&str> = Vec::with_capacity(self.reports.len());
        for (i, r) in self.reports.iter().enumerate() {
            self.check_report(r, &format!("reports[{i}]"))?;
            ids.push(&r.id);
        }
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            let i = self.reports.iter().position(|r| r.id == w[0]).unwrap_or(0);
            return Err(ScenarioError::DuplicateId {
                field: format!("reports[{i}].id"),
                id: w[0].to_string(),
            });
        }
        if let Some(t) = &self.assumptions.assumed_type {
            if self.submarine_type(t).is_none() {
                return Err(ScenarioError::UnknownReference {
                    field: "assumptions.assumed_type".into(),
                    id: t.clone(),
                });
            }
        }
        let w = self.assumptions.course_weight;
        if !(0.0..=1.0).contains(&w) {
            return Err(ScenarioError::invalid("assumptions.course_weight", format!("{w} is outside [0, 1]")));
        }
        let w = self.assumptions.type_weight;
        if !(0.0..=1.0).contains(&w) {
            return Err(ScenarioError::invalid("assumptions.type_weight", format!("{w} is outside [0, 1]")));
        }
        Ok(())
    }

    fn check_report(&self, r: &Report, field: &str) -> Result<(), ScenarioError> {
        r.validate(field)?;
        if !self.map.bounds().contains(r.position) {
            return Err(ScenarioError::invalid(
                format!("{field}.position"),
                format!("({}, {}) is outside the map bounds", r.position.x, r.position.y),
            ));
        }
        if let Some(t) = &r.observed_type {
            if self.submarine_type(t).is_none() {
                return Err(ScenarioError::UnknownReference {
                    field: format!("{field}.observed_type"),
                    id: t.clone(),
                });
            }
        }
        Ok(())
    }

    /// Adds a report, keeping time order. Rejects duplicate ids, invalid
    /// values and positions outside the map.
    pub fn ingest_report(&mut self, report: Report) -> Result<(), ScenarioError> {
        self.check_report(&report, "report")?;
        if self.report(&report.id).is_some() {
            return Err(ScenarioError::DuplicateId {
                field: "report.id".into(),
                id: report.id,
            });
        }
        let at = self
            .reports
            .partition_point(|r| report_order(r, &report).is_lt());
        self.reports.insert(at, report);
        Ok(())
    }

    pub fn add_sensor(&mut self, sensor: Sensor) -> Result<(), ScenarioError> {
        sensor.validate("sensor")?;
        if self.sensors.iter().any(|s| s.id == sensor.id) {
            return Err(ScenarioError::DuplicateId {
                field: "sensor.id".into(),
                id: sensor.id,
            });
        }
        self.sensors.push(sensor);
        Ok(())
    }

    pub fn add_type(&mut self, t: SubmarineType) -> Result<(), ScenarioError> {
        t.validate("type")?;
        if self.submarine_type(&t.id).is_some() {
            return Err(ScenarioError::DuplicateId {
                field: "type.id".into(),
                id: t.id,
            });
        }
        self.types.push(t);
        Ok(())
    }

    /// Sets the analyst's false-report flag; returns the previous value.
    pub fn set_flag(&mut self, report_id: &str, flagged_false: bool) -> Result<bool, ScenarioError> {
        let r = self
            .reports
            .iter_mut()
            .find(|r| r.id == report_id)
            .ok_or_else(|| ScenarioError::UnknownReference {
                field: "report_id".into(),
                id: report_id.into(),
            })?;
        Ok(std::mem::replace(&mut r.flagged_false, flagged_false))
    }

    pub(crate) fn reports_mut(&mut self) -> &mut Vec<Report> {
        &mut self.reports
    }

    pub(crate) fn sensors_mut(&mut self) -> &mut Vec<Sensor> {
        &mut self.sensors
    }

    pub(crate) fn sort_reports(&mut self) {
        self.reports.sort_by(report_order);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;

    fn scenario() -> Scenario {
        let map = NavMap::open(Rect::from_corners(Point::new(0.0, 0.0), Point::new(10_000.0, 10_000.0)));
        let mut s = Scenario::new("t", map);
        s.add_type(SubmarineType::new("k", 3.0, 10.0, 6.0)).unwrap();
        s
    }

    #[test]
    fn ingest_keeps_time_order() {
        let mut s = scenario();
        s.ingest_report(Report::new("b", 2000, Point::new(1.0, 1.0), 0.5)).unwrap();
        s.ingest_report(Report::new("a", 1000, Point::new(1.0, 1.0), 0.5)).unwrap();
        s.ingest_report(Report::new("c", 1000, Point::new(1.0, 1.0), 0.5)).unwrap();
        let ids: Vec<&str> = s.reports().iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["a", "c", "b"]);
    }

    #[test]
    fn ingest_rejections() {
        let mut s = scenario();
        s.ingest_report(Report::new("a", 0, Point::new(1.0, 1.0), 0.5)).unwrap();
        let dup = s.ingest_report(Report::new("a", 5, Point::new(1.0, 1.0), 0.5));
        assert!(matches!(dup, Err(ScenarioError::DuplicateId { .. })));
        let outside = s.ingest_report(Report::new("b", 5, Point::new(-1.0, 1.0), 0.5));
        assert_eq!(outside.unwrap_err().field(), Some("report.position"));
        let trust = s.ingest_report(Report::new("c", 5, Point::new(1.0, 1.0), 1.2));
        assert_eq!(trust.unwrap_err().field(), Some("report.trust_p"));
        let ty = s.ingest_report(Report::new("d", 5, Point::new(1.0, 1.0), 0.2).with_type("x"));
        assert_eq!(ty.unwrap_err().field(), Some("report.observed_type"));
        assert_eq!(s.reports().len(), 1);
    }

    #[test]
    fn sensor_windows() {
        let mut s = Sensor::new("s", Point::new(0.0, 0.0), 100.0, 0.5);
        assert!(s.active_throughout(Timestamp(0), Timestamp(1_000_000)));
        s.active_intervals = vec![[Timestamp(0), Timestamp(100)], [Timestamp(200), Timestamp(300)]];
        assert!(s.active_throughout(Timestamp(10), Timestamp(100)));
        assert!(!s.active_throughout(Timestamp(50), Timestamp(250)));
        s.signals = vec![Timestamp(250)];
        assert!(s.fired_within(Timestamp(250), Timestamp(260)));
        assert!(!s.silent_throughout(Timestamp(200), Timestamp(300)));
        assert!(s.silent_throughout(Timestamp(0), Timestamp(100)));
        assert!(s.validate("s").is_ok());
        s.active_intervals.swap(0, 1);
        assert!(s.validate("s").is_err());
    }

    #[test]
    fn type_resolution() {
        let mut s = scenario();
        assert_eq!(s.resolve_type(None).unwrap().id, "k");
        s.add_type(SubmarineType::new("m", 2.0, 8.0, 9.0)).unwrap();
        s.assumptions.assumed_type = Some("m".into());
        assert_eq!(s.resolve_type(None).unwrap().id, "m");
        assert_eq!(s.resolve_type(Some("k")).unwrap().id, "k");
        assert!(s.resolve_type(Some("zz")).is_err());
        assert!(SubmarineType::new("bad", 5.0, 4.0, 1.0).validate("t").is_err());
    }

    #[test]
    fn flags_toggle() {
        let mut s = scenario();
        s.ingest_report(Report::new("a", 0, Point::new(1.0, 1.0), 0.5)).unwrap();
        assert!(!s.set_flag("a", true).unwrap());
        assert!(s.report("a").unwrap().flagged_false);
        assert!(s.set_flag("nope", true).is_err());
    }
}
