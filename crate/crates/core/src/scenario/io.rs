use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::model::{Assumptions, Report, Scenario, Sensor, SubmarineType};
use super::ScenarioError;
use crate::geometry::NavMap;

/// Where a scenario's map came from: a GeoJSON file path (relative to the
/// scenario file) or an inline GeoJSON document. Kept for lossless saving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MapSource {
    Path(String),
    Inline(Value),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    #[serde(default = "default_id")]
    id: String,
    map: MapSource,
    #[serde(default)]
    types: Vec<SubmarineType>,
    #[serde(default)]
    sensors: Vec<Sensor>,
    #[serde(default)]
    reports: Vec<Report>,
    #[serde(default)]
    assumptions: Assumptions,
}

fn default_id() -> String {
    "scenario".into()
}

/// Deserialises with the failing field path and source position attached.
pub(crate) fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, ScenarioError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ScenarioError::Schema {
            field: if path == "." { String::new() } else { path },
            message: strip_position(&inner.to_string()),
            line: Some(inner.line()),
            column: Some(inner.column()),
        }
    })?;
    de.end().map_err(|e| ScenarioError::Schema {
        field: String::new(),
        message: strip_position(&e.to_string()),
        line: Some(e.line()),
        column: Some(e.column()),
    })?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

impl Scenario {
    /// Parses a scenario document. A map given as a path is resolved against
    /// `base_dir` when relative.
    pub fn from_json_str(text: &str, base_dir: Option<&Path>) -> Result<Self, ScenarioError> {
        let doc: ScenarioDoc = parse_json(text)?;
        let map = match &doc.map {
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
        let mut s = Scenario::with_map_source(doc.id, Arc::new(map), doc.map);
        *s.reports_mut() = doc.reports;
        *s.sensors_mut() = doc.sensors;
        s.types = doc.types;
        s.assumptions = doc.assumptions;
        s.validate()?;
        s.sort_reports();
        Ok(s)
    }

    /// Canonical JSON form: pretty-printed, reports in time order.
    pub fn to_json_string(&self) -> String {
        let doc = ScenarioDoc {
            id: self.id.clone(),
            map: self.map_source.clone(),
            types: self.types.clone(),
            sensors: self.sensors.clone(),
            reports: self.reports.clone(),
            assumptions: self.assumptions.clone(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("scenario serialises");
        out.push('\n');
        out
    }

    /// Replaces a path map reference with the inline document, so the JSON
    /// form is self-contained.
    pub fn inline_map(&mut self) {
        self.map_source = MapSource::Inline(self.map.to_geojson());
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Scenario::from_json_str(&text, path.parent())
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    fs::write(path, scenario.to_json_string()).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Parses one report per non-blank line. Errors carry the 1-based line.
pub fn parse_report_stream(text: &str) -> Result<Vec<Report>, ScenarioError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let report: Report = parse_json(line).map_err(|e| match e {
            ScenarioError::Schema { field, message, column, .. } => ScenarioError::Schema {
                field,
                message,
                line: Some(i + 1),
                column,
            },
            other => other,
        })?;
        report.validate("report").map_err(|e| e.at_line(i + 1))?;
        out.push(report);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MAP: &str = r#"{"type":"FeatureCollection","bounds":[0,0,10000,10000],"features":[]}"#;

    fn doc(reports: &str) -> String {
        format!(
            r#"{{"id":"s","map":{MAP},"types":[{{"id":"k","name":"K","cruise_speed_mps":3,"max_speed_mps":8,"draught_m":6}}],"reports":{reports}}}"#
        )
    }

    #[test]
    fn map_only_is_valid() {
        let s = Scenario::from_json_str(&format!(r#"{{"map":{MAP}}}"#), None).unwrap();
        assert!(s.reports().is_empty());
        assert_eq!(s.id, "scenario");
    }

    #[test]
    fn round_trip_is_identity() {
        let text = doc(
            r#"[{"id":"b","time":5000,"position":[10.5,20.25],"trust_p":0.3,"observed_course_deg":90.0},
                {"id":"a","time":1000,"position":[1,2],"trust_p":0.7,"position_sigma_m":250,"source":"visual","flagged_false":true}]"#,
        );
        let s = Scenario::from_json_str(&text, None).unwrap();
        assert_eq!(s.reports()[0].id, "a");
        let again = Scenario::from_json_str(&s.to_json_string(), None).unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_json_string(), again.to_json_string());
    }

    #[test]
    fn schema_errors_name_the_field() {
        let err = Scenario::from_json_str(&doc(r#"[{"id":"a","time":0,"position":[1,1],"trust_p":1.2}]"#), None)
            .unwrap_err();
        assert_eq!(err.field(), Some("reports[0].trust_p"));
        let err = Scenario::from_json_str(&doc(r#"[{"id":"a","time":"x","position":[1,1],"trust_p":0.2}]"#), None)
            .unwrap_err();
        assert_eq!(err.field(), Some("reports[0].time"));
        assert!(matches!(err, ScenarioError::Schema { line: Some(1), .. }));
        let err = Scenario::from_json_str(
            &doc(r#"[{"id":"a","time":0,"position":[1,1],"trust_p":0.2},{"id":"a","time":1,"position":[1,1],"trust_p":0.2}]"#),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ScenarioError::DuplicateId { .. }));
    }

    #[test]
    fn ndjson_stream() {
        let text = "{\"id\":\"a\",\"time\":0,\"position\":[1,1],\"trust_p\":0.2}\n\n{\"id\":\"b\",\"time\":1,\"position\":[1,1],\"trust_p\":0.4}\n";
        let reports = parse_report_stream(text).unwrap();
        assert_eq!(reports.len(), 2);
        let bad = "{\"id\":\"a\",\"time\":0,\"position\":[1,1],\"trust_p\":0.2}\n{\"id\":\"b\",\"time\":1,\"position\":[1,1],\"trust_p\":-1}\n";
        let err = parse_report_stream(bad).unwrap_err();
        assert_eq!(err.field(), Some("report.trust_p"));
        assert!(matches!(err, ScenarioError::Invalid { line: Some(2), .. }));
    }

    #[test]
    fn relative_map_path() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("m.geojson"), MAP).unwrap();
        let text = r#"{"id":"p","map":"m.geojson"}"#;
        let path = dir.path().join("s.json");
        fs::write(&path, text).unwrap();
        let s = load_scenario(&path).unwrap();
        assert_eq!(s.map_source(), &MapSource::Path("m.geojson".into()));
        save_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }
}
