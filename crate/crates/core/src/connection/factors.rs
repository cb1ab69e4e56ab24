use serde::{Deserialize, Serialize};

use crate::geometry::{point_segment_distance, GeoPath};
use crate::scenario::{CourseReference, Report, Sensor, SubmarineType, Timestamp};

/// The four negative-evidence factors against a link, each the mass of a
/// simple support against "same submarine".
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkFactors {
    pub q_speed: f64,
    pub q_sensors: f64,
    pub q_course: f64,
    pub q_type: f64,
}

impl LinkFactors {
    pub fn as_array(&self) -> [f64; 4] {
        [self.q_speed, self.q_sensors, self.q_course, self.q_type]
    }

    /// Orthogonal combination of the four factors.
    pub fn combined(&self) -> f64 {
        combine_against(&self.as_array())
    }
}

/// Combined mass of several simple supports against the same hypothesis:
/// `1 - Π(1 - q)`.
pub fn combine_against(qs: &[f64]) -> f64 {
    1.0 - qs.iter().map(|q| 1.0 - q).product::<f64>()
}

/// Linear ramp from cruise speed (0) to maximum speed (1). Anything faster
/// than the maximum, including an unreachable destination, is 1.
pub fn q_speed(v_req: f64, t: &SubmarineType) -> f64 {
    if v_req.is_nan() || v_req > t.max_speed_mps {
        return 1.0;
    }
    if v_req <= t.cruise_speed_mps {
        return 0.0;
    }
    ((v_req - t.cruise_speed_mps) / (t.max_speed_mps - t.cruise_speed_mps)).clamp(0.0, 1.0)
}

/// Does the polyline come within the sensor's closed range disc?
pub fn path_meets_sensor(path: &GeoPath, sensor: &Sensor) -> bool {
    match path.waypoints.as_slice() {
        [] => false,
        [p] => sensor.covers(*p),
        w => w
            .windows(2)
            .any(|s| point_segment_distance(sensor.position, s[0], s[1]) <= sensor.range_m),
    }
}

/// Sensors silent throughout `[t_i, t_j]` whose range the path meets, each
/// counted once, and their combined factor `1 - Π(1 - detect_prob)`.
pub fn q_sensors<'a>(sensors: &'a [Sensor], path: &GeoPath, t_i: Timestamp, t_j: Timestamp) -> (f64, Vec<&'a Sensor>) {
    let silent: Vec<&Sensor> = sensors
        .iter()
        .filter(|s| s.silent_throughout(t_i, t_j) && path_meets_sensor(path, s))
        .collect();
    let q = combine_against(&silent.iter().map(|s| s.detect_prob).collect::<Vec<_>>());
    (q, silent)
}

/// Smallest angle between two bearings, in degrees within [0, 180].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Course disagreement: departure course against the path's initial bearing
/// and/or arrival course against its final bearing, each normalised by 180°,
/// averaged over the comparisons available, times `weight`. Absent
/// observations contribute nothing.
pub fn q_course(r_i: &Report, r_j: &Report, path: &GeoPath, weight: f64, reference: CourseReference) -> f64 {
    let departure = match reference {
        CourseReference::Initial | CourseReference::Averaged => r_i
            .observed_course_deg
            .zip(path.initial_bearing())
            .map(|(c, b)| angular_distance(c, b) / 180.0),
        CourseReference::Final => None,
    };
    let arrival = match reference {
        CourseReference::Final | CourseReference::Averaged => r_j
            .observed_course_deg
            .zip(path.final_bearing())
            .map(|(c, b)| angular_distance(c, b) / 180.0),
        CourseReference::Initial => None,
    };
    let diffs: Vec<f64> = departure.into_iter().chain(arrival).collect();
    if diffs.is_empty() {
        return 0.0;
    }
    weight * diffs.iter().sum::<f64>() / diffs.len() as f64
}

/// `weight` when both reports name a type and the types differ, else 0.
pub fn q_type(r_i: &Report, r_j: &Report, weight: f64) -> f64 {
    match (&r_i.observed_type, &r_j.observed_type) {
        (Some(a), Some(b)) if a != b => weight,
        _ => 0.0,
    }
}
