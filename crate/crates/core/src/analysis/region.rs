use super::AnalysisError;
use crate::connection::combine_against;
use crate::evidence::EvidenceInterval;
use crate::geometry::Rect;
use crate::scenario::{select_reports, Report, ReportFilter, Scenario, Timestamp};

fn region_filter(scenario: &Scenario, rect: Rect, window: Option<[Timestamp; 2]>) -> Result<ReportFilter, AnalysisError> {
    if !(rect.min.x <= rect.max.x && rect.min.y <= rect.max.y) || !scenario.map().bounds().contains_rect(&rect) {
        return Err(AnalysisError::InvalidParameter {
            name: "rect".into(),
            message: "must lie within the map bounds".into(),
        });
    }
    if let Some([t0, t1]) = window {
        if t0 > t1 {
            return Err(AnalysisError::InvalidParameter {
                name: "window".into(),
                message: "start is after end".into(),
            });
        }
    }
    Ok(ReportFilter {
        time_window: window,
        region: Some(rect),
        ..ReportFilter::analysis()
    })
}

/// Evidence that at least one submarine was inside `rect` during `window`:
/// the combination of the simple supports of the unflagged reports there.
pub fn evidence_region(
    scenario: &Scenario,
    rect: Rect,
    window: Option<[Timestamp; 2]>,
) -> Result<EvidenceInterval, AnalysisError> {
    let filter = region_filter(scenario, rect, window)?;
    Ok(region_interval(select_reports(scenario, &filter)))
}

/// `[1 - Π(1 - p), 1]` over the given reports.
pub fn region_interval<'a>(reports: impl IntoIterator<Item = &'a Report>) -> EvidenceInterval {
    let ps: Vec<f64> = reports.into_iter().map(|r| r.trust_p).collect();
    EvidenceInterval {
        support: combine_against(&ps),
        plausibility: 1.0,
    }
}

/// Time of the first report in `rect` at which the accumulated region
/// support reaches `threshold`, scanning reports in arrival order.
pub fn incident_start(scenario: &Scenario, rect: Rect, threshold: f64) -> Result<Option<Timestamp>, AnalysisError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(AnalysisError::InvalidParameter {
            name: "threshold".into(),
            message: "must lie in (0, 1]".into(),
        });
    }
    let filter = region_filter(scenario, rect, None)?;
    let mut none_true = 1.0;
    for r in select_reports(scenario, &filter) {
        none_true *= 1.0 - r.trust_p;
        if 1.0 - none_true >= threshold {
            return Ok(Some(r.time));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{NavMap, Point};

    fn scenario(reports: &[(i64, f64, f64, f64)]) -> Scenario {
        let mut s = Scenario::new("t", NavMap::open(Rect::from_corners(Point::new(0.0, 0.0), Point::new(10_000.0, 10_000.0))));
        for (i, &(t, x, y, p)) in reports.iter().enumerate() {
            s.ingest_report(Report::new(format!("r{i}"), t, Point::new(x, y), p)).unwrap();
        }
        s
    }

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
        Rect::from_corners(Point::new(x0, y0), Point::new(x1, y1))
    }

    #[test]
    fn region_intervals() {
        let s = scenario(&[(0, 100.0, 100.0, 0.6), (10, 200.0, 200.0, 0.5), (20, 9000.0, 9000.0, 0.9)]);
        let whole = rect(0.0, 0.0, 1000.0, 1000.0);
        let i = evidence_region(&s, whole, None).unwrap();
        assert!((i.support - 0.8).abs() < 1e-12);
        assert_eq!(i.plausibility, 1.0);
        let empty = evidence_region(&s, rect(5000.0, 5000.0, 6000.0, 6000.0), None).unwrap();
        assert_eq!((empty.support, empty.plausibility), (0.0, 1.0));
        let early = evidence_region(&s, whole, Some([Timestamp(0), Timestamp(5)])).unwrap();
        assert!((early.support - 0.6).abs() < 1e-12);
        assert!(evidence_region(&s, rect(0.0, 0.0, 20_000.0, 10.0), None).is_err());
        assert!(evidence_region(&s, whole, Some([Timestamp(5), Timestamp(0)])).is_err());
    }

    #[test]
    fn flagged_reports_are_ignored() {
        let mut s = scenario(&[(0, 100.0, 100.0, 0.6), (10, 200.0, 200.0, 1.0)]);
        let whole = rect(0.0, 0.0, 1000.0, 1000.0);
        assert_eq!(evidence_region(&s, whole, None).unwrap().support, 1.0);
        s.set_flag("r1", true).unwrap();
        assert!((evidence_region(&s, whole, None).unwrap().support - 0.6).abs() < 1e-12);
    }

    #[test]
    fn incident_start_examples() {
        let whole = rect(0.0, 0.0, 10_000.0, 10_000.0);
        assert_eq!(incident_start(&scenario(&[]), whole, 0.5).unwrap(), None);
        let one = scenario(&[(4000, 10.0, 10.0, 0.95)]);
        assert_eq!(incident_start(&one, whole, 0.9).unwrap(), Some(Timestamp(4000)));
        assert_eq!(incident_start(&one, whole, 1.0).unwrap(), None);
        let two = scenario(&[(1000, 10.0, 10.0, 0.6), (2000, 10.0, 10.0, 0.5)]);
        assert_eq!(incident_start(&two, whole, 0.7).unwrap(), Some(Timestamp(2000)));
        assert!(incident_start(&two, whole, 0.0).is_err());
        assert!(incident_start(&two, whole, 1.5).is_err());
    }
}
