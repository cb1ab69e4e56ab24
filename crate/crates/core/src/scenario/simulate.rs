//! Seeded incident generator: true tracks with noisy, variably trusted
//! reports, sensor detections on range entry, and Poisson false reports.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::io::{parse_json, MapSource};
use super::model::{Assumptions, Report, Scenario, Sensor, SubmarineType, Timestamp, DEFAULT_POSITION_SIGMA_M};
use super::ScenarioError;
use crate::geometry::{segment_clear, NavMap, Obstacle, Point};

const MAX_RESAMPLES: usize = 64;

fn default_sigma() -> f64 {
    DEFAULT_POSITION_SIGMA_M
}

fn default_trust() -> [f64; 2] {
    [0.5, 0.9]
}

fn default_false_trust() -> [f64; 2] {
    [0.1, 0.5]
}

fn default_id() -> String {
    "sim".into()
}

/// One submarine's movement plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackPlan {
    pub waypoints: Vec<Point>,
    pub speed_mps: f64,
    #[serde(default)]
    pub start: Timestamp,
    /// Seconds between consecutive sightings of this track.
    pub report_interval_s: f64,
    /// Trust values are drawn uniformly from this range.
    #[serde(default = "default_trust")]
    pub trust: [f64; 2],
    #[serde(default = "default_sigma")]
    pub position_sigma_m: f64,
    /// Submarine type; its draught decides navigability.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub type_id: Option<String>,
    /// Attach the current leg's bearing as an observed course.
    #[serde(default)]
    pub report_course: bool,
    /// Attach `type_id` as an observed type.
    #[serde(default)]
    pub report_type: bool,
}

impl TrackPlan {
    fn leg_lengths(&self) -> Vec<f64> {
        self.waypoints.windows(2).map(|w| w[0].distance(w[1])).collect()
    }

    pub fn duration_s(&self) -> f64 {
        self.leg_lengths().iter().sum::<f64>() / self.speed_mps
    }

    pub fn end(&self) -> Timestamp {
        Timestamp(self.start.0 + (self.duration_s() * 1000.0).floor() as i64)
    }

    /// True position and leg index after travelling `elapsed_s` seconds.
    pub fn position_at(&self, elapsed_s: f64) -> (Point, usize) {
        let mut remaining = (elapsed_s * self.speed_mps).max(0.0);
        let lengths = self.leg_lengths();
        for (i, len) in lengths.iter().enumerate() {
            if remaining <= *len {
                let t = if *len > 0.0 { remaining / len } else { 0.0 };
                return (self.waypoints[i].lerp(self.waypoints[i + 1], t), i);
            }
            remaining -= len;
        }
        let last = lengths.len().saturating_sub(1);
        (*self.waypoints.last().expect("validated track"), last)
    }
}

/// How sensors miss submarines entering their range.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensorMissModel {
    /// Each range entry is detected with the sensor's own `detect_prob`.
    #[default]
    DetectProb,
    /// Each range entry is missed with this fixed probability.
    Fixed { miss_prob: f64 },
}

/// Generator configuration. Sensors listed here receive generated signals
/// appended to any they already carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    pub map: MapSource,
    #[serde(default)]
    pub types: Vec<SubmarineType>,
    #[serde(default)]
    pub sensors: Vec<Sensor>,
    #[serde(default)]
    pub assumptions: Assumptions,
    #[serde(default)]
    pub true_tracks: Vec<TrackPlan>,
    /// False reports per hour over `[start, end]`.
    #[serde(default)]
    pub false_report_rate: f64,
    #[serde(default = "default_false_trust")]
    pub false_trust: [f64; 2],
    #[serde(default)]
    pub sensor_miss_model: SensorMissModel,
    #[serde(default)]
    pub start: Timestamp,
    /// Defaults to the end of the last track.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<Timestamp>,
}

impl SimConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ScenarioError> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json_str(&text)
    }

    fn end_time(&self) -> Timestamp {
        self.end.unwrap_or_else(|| {
            self.true_tracks
                .iter()
                .map(TrackPlan::end)
                .max()
                .unwrap_or(self.start)
        })
    }
}

fn check_range(field: String, r: [f64; 2]) -> Result<(), ScenarioError> {
    if !(0.0 <= r[0] && r[0] <= r[1] && r[1] <= 1.0) {
        return Err(ScenarioError::invalid(field, format!("{r:?} is not a sub-range of [0, 1]")));
    }
    Ok(())
}

fn round_to(x: f64, step: f64) -> f64 {
    (x / step).round() * step
}

fn round_point(p: Point) -> Point {
    // one decimal place, printed exactly
    Point::new((p.x * 10.0).round() / 10.0, (p.y * 10.0).round() / 10.0)
}

struct Pending {
    time: Timestamp,
    report: Report,
}

/// Runs the generator. A map given as a relative path is resolved against
/// `base_dir`. Deterministic for a fixed configuration.
pub fn simulate(config: &SimConfig, base_dir: Option<&Path>) -> Result<Scenario, ScenarioError> {
    let map = match &config.map {
        MapSource::Path(p) => {
            let mut path = PathBuf::from(p);
            if path.is_relative() {
                if let Some(base) = base_dir {
                    path = base.join(path);
                }
            }
            NavMap::from_geojson_file(&path)
        }
        MapSource::Inline(v) => NavMap::from_geojson(v),
    }
    .map_err(ScenarioError::Map)?;
    let map = Arc::new(map);

    let mut scenario = Scenario::with_map_source(config.id.clone(), Arc::clone(&map), config.map.clone());
    scenario.types = config.types.clone();
    *scenario.sensors_mut() = config.sensors.clone();
    scenario.assumptions = config.assumptions.clone();
    scenario.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut pending: Vec<Pending> = Vec::new();
    let mut signals: Vec<Vec<Timestamp>> = vec![Vec::new(); config.sensors.len()];

    for (k, track) in config.true_tracks.iter().enumerate() {
        let field = format!("true_tracks[{k}]");
        let draught = validate_track(&scenario, track, &field)?;
        let obstacles: Vec<&Obstacle> = map.obstacles().iter().filter(|o| o.blocks(draught)).collect();
        for (i, w) in track.waypoints.windows(2).enumerate() {
            if !segment_clear(&obstacles, w[0], w[1]) {
                return Err(ScenarioError::invalid(
                    format!("{field}.waypoints[{}]", i + 1),
                    "track leg crosses land or water too shallow for the type".into(),
                ));
            }
        }

        let duration = track.duration_s();
        let mut n = 0u64;
        loop {
            let elapsed = n as f64 * track.report_interval_s;
            if elapsed > duration + 1e-9 {
                break;
            }
            n += 1;
            let (truth, leg) = track.position_at(elapsed);
            let position = noisy_position(&mut rng, &map, truth, track.position_sigma_m, draught);
            let trust = round_to(rng.gen_range(track.trust[0]..=track.trust[1]), 0.01);
            let time = Timestamp(track.start.0 + (elapsed * 1000.0).round() as i64);
            let mut report = Report::new(String::new(), time.0, position, trust);
            report.position_sigma_m = track.position_sigma_m;
            report.source = format!("sim:track{k}");
            if track.report_course {
                let w = &track.waypoints;
                report.observed_course_deg = w[leg].bearing_to(w[leg + 1]).map(|b| round_to(b, 0.1) % 360.0);
            }
            if track.report_type {
                report.observed_type = track.type_id.clone();
            }
            pending.push(Pending { time, report });
        }

        for (s, sensor) in config.sensors.iter().enumerate() {
            for entry_s in range_entries(track, sensor) {
                let t = Timestamp(track.start.0 + (entry_s * 1000.0).round() as i64);
                if !sensor.active_at(t) {
                    continue;
                }
                let p_detect = match config.sensor_miss_model {
                    SensorMissModel::DetectProb => sensor.detect_prob,
                    SensorMissModel::Fixed { miss_prob } => 1.0 - miss_prob,
                };
                if rng.gen_bool(p_detect.clamp(0.0, 1.0)) {
                    signals[s].push(t);
                }
            }
        }
    }

    if config.false_report_rate > 0.0 {
        check_range("false_trust".into(), config.false_trust)?;
        let per_ms = config.false_report_rate / 3_600_000.0;
        let gap = Exp::new(per_ms).map_err(|e| ScenarioError::invalid("false_report_rate", e.to_string()))?;
        let end = config.end_time();
        let mut t = config.start.0 as f64;
        loop {
            t += gap.sample(&mut rng);
            if t > end.0 as f64 {
                break;
            }
            let position = uniform_water(&mut rng, &map).ok_or_else(|| {
                ScenarioError::invalid("map", "no open water found for false reports".into())
            })?;
            let trust = round_to(rng.gen_range(config.false_trust[0]..=config.false_trust[1]), 0.01);
            let time = Timestamp(t.floor() as i64);
            let mut report = Report::new(String::new(), time.0, position, trust);
            report.source = "sim:false".into();
            pending.push(Pending { time, report });
        }
    } else if config.false_report_rate < 0.0 {
        return Err(ScenarioError::invalid("false_report_rate", "must be >= 0".into()));
    }

    pending.sort_by(|a, b| {
        a.time
            .cmp(&b.time)
            .then(a.report.position.x.total_cmp(&b.report.position.x))
            .then(a.report.position.y.total_cmp(&b.report.position.y))
            .then(a.report.source.cmp(&b.report.source))
    });
    let width = pending.len().to_string().len().max(2);
    for (i, p) in pending.iter_mut().enumerate() {
        p.report.id = format!("r{:0width$}", i + 1);
    }
    *scenario.reports_mut() = pending.into_iter().map(|p| p.report).collect();

    for (sensor, mut fired) in scenario.sensors_mut().iter_mut().zip(signals) {
        sensor.signals.append(&mut fired);
        sensor.signals.sort();
        sensor.signals.dedup();
    }
    scenario.validate()?;
    Ok(scenario)
}

fn validate_track(scenario: &Scenario, track: &TrackPlan, field: &str) -> Result<f64, ScenarioError> {
    if track.waypoints.len() < 2 {
        return Err(ScenarioError::invalid(format!("{field}.waypoints"), "needs at least 2 points".into()));
    }
    if !(track.speed_mps > 0.0) || !track.speed_mps.is_finite() {
        return Err(ScenarioError::invalid(format!("{field}.speed_mps"), "must be > 0".into()));
    }
    if !(track.report_interval_s > 0.0) || !track.report_interval_s.is_finite() {
        return Err(ScenarioError::invalid(format!("{field}.report_interval_s"), "must be > 0".into()));
    }
    if !(track.position_sigma_m >= 0.0) || !track.position_sigma_m.is_finite() {
        return Err(ScenarioError::invalid(format!("{field}.position_sigma_m"), "must be >= 0".into()));
    }
    check_range(format!("{field}.trust"), track.trust)?;
    let draught = match &track.type_id {
        Some(id) => {
            scenario
                .submarine_type(id)
                .ok_or_else(|| ScenarioError::UnknownReference {
                    field: format!("{field}.type_id"),
                    id: id.clone(),
                })?
                .draught_m
        }
        None => scenario.resolve_type(None).map(|t| t.draught_m).unwrap_or(0.0),
    };
    for (i, p) in track.waypoints.iter().enumerate() {
        let wf = format!("{field}.waypoints[{i}]");
        if !scenario.map().bounds().contains(*p) {
            return Err(ScenarioError::invalid(wf, "outside the map bounds".into()));
        }
        if scenario.map().blocked_at(*p, draught).is_some() {
            return Err(ScenarioError::invalid(wf, "waypoint is not navigable".into()));
        }
    }
    Ok(draught)
}

/// Gaussian noise clamped to three sigma; resampled while the result is off
/// the map or not navigable.
fn noisy_position(rng: &mut ChaCha8Rng, map: &NavMap, truth: Point, sigma: f64, draught: f64) -> Point {
    if sigma <= 0.0 {
        return round_point(truth);
    }
    let normal = Normal::new(0.0, sigma).expect("positive sigma");
    for _ in 0..MAX_RESAMPLES {
        let mut d = Point::new(normal.sample(rng), normal.sample(rng));
        let len = d.norm();
        if len > 3.0 * sigma {
            d = d * (3.0 * sigma / len);
        }
        let p = round_point(truth + d);
        if map.bounds().contains(p) && map.blocked_at(p, draught).is_none() && p.distance(truth) <= 3.0 * sigma {
            return p;
        }
    }
    round_point(truth)
}

fn uniform_water(rng: &mut ChaCha8Rng, map: &NavMap) -> Option<Point> {
    let b = map.bounds();
    for _ in 0..MAX_RESAMPLES * 16 {
        let p = round_point(Point::new(
            rng.gen_range(b.min.x..=b.max.x),
            rng.gen_range(b.min.y..=b.max.y),
        ));
        if b.contains(p) && map.blocked_at(p, 0.0).is_none() {
            return Some(p);
        }
    }
    None
}

/// Elapsed seconds at which the track enters the closed range disc of the
/// sensor. Starting inside counts as an entry at time zero.
pub fn range_entries(track: &TrackPlan, sensor: &Sensor) -> Vec<f64> {
    let mut out = Vec::new();
    let mut travelled = 0.0;
    let r2 = sensor.range_m * sensor.range_m;
    for (i, w) in track.waypoints.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let d = b - a;
        let len = d.norm();
        let f = a - sensor.position;
        if i == 0 && f.dot(f) <= r2 {
            out.push(0.0);
        }
        if len > 0.0 {
            let qa = d.dot(d);
            let qb = 2.0 * f.dot(d);
            let qc = f.dot(f) - r2;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let s1 = (-qb - disc.sqrt()) / (2.0 * qa);
                if s1 > 0.0 && s1 <= 1.0 {
                    out.push((travelled + s1 * len) / track.speed_mps);
                }
            }
        }
        travelled += len;
    }
    out
}
