use serde::{Deserialize, Serialize};

use super::model::{Report, Scenario, Timestamp};
use crate::geometry::Rect;

/// Conjunctive report filter. Unset criteria match everything.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportFilter {
    /// Closed time window `[t0, t1]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_window: Option<[Timestamp; 2]>,
    /// Closed rectangle.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Rect>,
    /// Minimum trust, inclusive.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_trust: Option<f64>,
    pub exclude_flagged: bool,
}

impl ReportFilter {
    /// The filter every analysis applies: drop reports flagged false.
    pub fn analysis() -> Self {
        Self {
            exclude_flagged: true,
            ..Self::default()
        }
    }

    pub fn matches(&self, r: &Report) -> bool {
        if let Some([t0, t1]) = self.time_window {
            if r.time < t0 || r.time > t1 {
                return false;
            }
        }
        if let Some(rect) = &self.region {
            if !rect.contains(r.position) {
                return false;
            }
        }
        if let Some(p) = self.min_trust {
            if r.trust_p < p {
                return false;
            }
        }
        !(self.exclude_flagged && r.flagged_false)
    }
}

/// Reports matching `filter`, in scenario time order.
pub fn select_reports<'a>(scenario: &'a Scenario, filter: &ReportFilter) -> Vec<&'a Report> {
    scenario.reports().iter().filter(|r| filter.matches(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NavMap, Point};

    fn scenario() -> Scenario {
        let map = NavMap::open(Rect::from_corners(Point::new(0.0, 0.0), Point::new(1000.0, 1000.0)));
        let mut s = Scenario::new("f", map);
        for (i, (t, x, p)) in [(0, 100.0, 0.2), (10, 500.0, 0.95), (20, 900.0, 0.5)].into_iter().enumerate() {
            s.ingest_report(Report::new(format!("r{i}"), t, Point::new(x, x), p)).unwrap();
        }
        s.set_flag("r2", true).unwrap();
        s
    }

    fn ids(v: Vec<&Report>) -> Vec<&str> {
        v.into_iter().map(|r| r.id.as_str()).collect()
    }

    #[test]
    fn empty_filter_selects_all() {
        let s = scenario();
        assert_eq!(ids(select_reports(&s, &ReportFilter::default())), ["r0", "r1", "r2"]);
    }

    #[test]
    fn criteria_are_conjunctive() {
        let s = scenario();
        let f = ReportFilter {
            time_window: Some([Timestamp(5), Timestamp(20)]),
            exclude_flagged: true,
            ..Default::default()
        };
        assert_eq!(ids(select_reports(&s, &f)), ["r1"]);
        let f = ReportFilter {
            min_trust: Some(0.5),
            ..Default::default()
        };
        assert_eq!(ids(select_reports(&s, &f)), ["r1", "r2"]);
        let f = ReportFilter {
            region: Some(Rect::from_corners(Point::new(0.0, 0.0), Point::new(50.0, 50.0))),
            ..Default::default()
        };
        assert!(select_reports(&s, &f).is_empty());
    }
}
