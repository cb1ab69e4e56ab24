use super::primitives::{
    orientation, point_segment_distance, segments_cross_properly, Point, Rect, EPS,
};
use super::GeometryError;

/// A simple polygon obstacle: an island (`min_depth_m == 0`) or a shallow area.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    /// Counterclockwise ring without a repeated closing vertex.
    ring: Vec<Point>,
    /// Ring used for navigation; differs from `ring` when an inflation margin is set.
    nav_ring: Vec<Point>,
    bbox: Rect,
    pub min_depth_m: f64,
    pub name: Option<String>,
}

impl Obstacle {
    /// Validates a ring and normalises it to counterclockwise order. A
    /// repeated closing vertex is dropped.
    pub fn new(mut ring: Vec<Point>, min_depth_m: f64) -> Result<Self, GeometryError> {
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        if ring.len() < 3 {
            return Err(GeometryError::InvalidPolygon("fewer than 3 vertices".into()));
        }
        if !(min_depth_m >= 0.0) || !min_depth_m.is_finite() {
            return Err(GeometryError::InvalidPolygon(format!(
                "min_depth_m {min_depth_m} must be a non-negative number"
            )));
        }
        let area = signed_area(&ring);
        if area.abs() <= EPS {
            return Err(GeometryError::InvalidPolygon("zero area".into()));
        }
        if area < 0.0 {
            ring.reverse();
        }
        check_simple(&ring)?;
        let bbox = Rect::bounding(&ring).expect("non-empty ring");
        Ok(Self {
            nav_ring: ring.clone(),
            ring,
            bbox,
            min_depth_m,
            name: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Replaces the navigation ring with the outline pushed out by `margin`.
    pub(crate) fn inflate(&mut self, margin: f64) {
        self.nav_ring = if margin > 0.0 {
            offset_ring(&self.ring, margin)
        } else {
            self.ring.clone()
        };
        self.bbox = Rect::bounding(&self.nav_ring).expect("non-empty ring");
    }

    pub fn ring(&self) -> &[Point] {
        &self.ring
    }

    pub fn nav_ring(&self) -> &[Point] {
        &self.nav_ring
    }

    pub fn bbox(&self) -> &Rect {
        &self.bbox
    }

    pub fn is_island(&self) -> bool {
        self.min_depth_m == 0.0
    }

    /// Does this obstacle block a vessel of the given draught?
    pub fn blocks(&self, draught_m: f64) -> bool {
        self.is_island() || draught_m > self.min_depth_m
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.ring)
    }

    pub(crate) fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.nav_ring.len();
        (0..n).map(move |i| (self.nav_ring[i], self.nav_ring[(i + 1) % n]))
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        self.bbox.expanded(EPS).contains(p) && self.edges().any(|(a, b)| point_segment_distance(p, a, b) <= EPS)
    }

    /// Strict interior test: boundary points are outside.
    pub fn contains_strict(&self, p: Point) -> bool {
        if !self.bbox.contains(p) || self.on_boundary(p) {
            return false;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// True if the two obstacles' interiors overlap. Touching is allowed.
    pub fn overlaps(&self, other: &Obstacle) -> bool {
        if !self.bbox.intersects(&other.bbox) {
            return false;
        }
        for (a, b) in self.edges() {
            for (c, d) in other.edges() {
                if segments_cross_properly(a, b, c, d) {
                    return true;
                }
            }
        }
        let probe = |x: &Obstacle, y: &Obstacle| {
            x.ring.iter().any(|&p| y.contains_strict(p))
                || x.edges().any(|(a, b)| {
                    let mid = a.lerp(b, 0.5);
                    // just inside x, next to the edge midpoint
                    let d = b - a;
                    let inward = Point::new(-d.y, d.x) * (1e-4f64.max(1e-3 / d.norm()));
                    let q = mid + inward;
                    y.contains_strict(mid) || (x.contains_strict(q) && y.contains_strict(q))
                })
        };
        probe(self, other) || probe(other, self)
    }
}

pub(crate) fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| ring[i].cross(ring[(i + 1) % n]))
        .sum::<f64>()
        / 2.0
}

fn check_simple(ring: &[Point]) -> Result<(), GeometryError> {
    let n = ring.len();
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if a.distance(b) <= EPS {
            return Err(GeometryError::InvalidPolygon(format!("repeated vertex at index {i}")));
        }
        for j in (i + 1)..n {
            let (c, d) = (ring[j], ring[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // adjacent edges may only share their common vertex
                let (shared, other_end, far) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orientation(other_end, shared, far) == 0
                    && (far - shared).dot(other_end - shared) > 0.0
                {
                    return Err(GeometryError::InvalidPolygon(format!(
                        "edges {i} and {j} fold back on each other"
                    )));
                }
                continue;
            }
            if segments_cross_properly(a, b, c, d)
                || point_segment_distance(a, c, d) <= EPS
                || point_segment_distance(b, c, d) <= EPS
                || point_segment_distance(c, a, b) <= EPS
                || point_segment_distance(d, a, b) <= EPS
            {
                return Err(GeometryError::InvalidPolygon(format!(
                    "edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(())
}

/// Mitred outward offset of a counterclockwise ring. Miter length is capped
/// at three margins so sharp spikes stay bounded.
fn offset_ring(ring: &[Point], margin: f64) -> Vec<Point> {
    let n = ring.len();
    let outward = |a: Point, b: Point| {
        let d = b - a;
        let len = d.norm();
        Point::new(d.y / len, -d.x / len)
    };
    (0..n)
        .map(|i| {
            let prev = ring[(i + n - 1) % n];
            let cur = ring[i];
            let next = ring[(i + 1) % n];
            let n1 = outward(prev, cur);
            let n2 = outward(cur, next);
            let sum = n1 + n2;
            let denom = 1.0 + n1.dot(n2);
            let mut shift = if denom > 1e-9 { sum * (margin / denom) } else { n1 * margin };
            let len = shift.norm();
            if len > 3.0 * margin {
                shift = shift * (3.0 * margin / len);
            }
            cur + shift
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point> {
        vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ]
    }

    #[test]
    fn normalises_orientation_and_closing_vertex() {
        let mut cw = square(0.0, 0.0, 10.0, 10.0);
        cw.reverse();
        cw.push(cw[0]);
        let o = Obstacle::new(cw, 0.0).unwrap();
        assert_eq!(o.ring().len(), 4);
        assert!(o.area() > 0.0);
    }

    #[test]
    fn rejects_bowtie() {
        let bowtie = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 10.0),
            Point::new(10.0, 0.0),
            Point::new(0.0, 10.0),
        ];
        assert!(Obstacle::new(bowtie, 0.0).is_err());
        assert!(Obstacle::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0)], 0.0).is_err());
    }

    #[test]
    fn strict_containment() {
        let o = Obstacle::new(square(0.0, 0.0, 10.0, 10.0), 0.0).unwrap();
        assert!(o.contains_strict(Point::new(5.0, 5.0)));
        assert!(!o.contains_strict(Point::new(10.0, 5.0)));
        assert!(!o.contains_strict(Point::new(0.0, 0.0)));
        assert!(!o.contains_strict(Point::new(11.0, 5.0)));
        assert!(o.on_boundary(Point::new(10.0, 5.0)));
    }

    #[test]
    fn overlap_detection() {
        let a = Obstacle::new(square(0.0, 0.0, 10.0, 10.0), 0.0).unwrap();
        let touching = Obstacle::new(square(10.0, 0.0, 20.0, 10.0), 0.0).unwrap();
        let crossing = Obstacle::new(square(5.0, 5.0, 15.0, 15.0), 0.0).unwrap();
        let inner = Obstacle::new(square(2.0, 2.0, 4.0, 4.0), 0.0).unwrap();
        let same = Obstacle::new(square(0.0, 0.0, 10.0, 10.0), 0.0).unwrap();
        assert!(!a.overlaps(&touching));
        assert!(a.overlaps(&crossing));
        assert!(a.overlaps(&inner));
        assert!(a.overlaps(&same));
    }

    #[test]
    fn depth_semantics() {
        let shoal = Obstacle::new(square(0.0, 0.0, 1.0, 1.0), 6.0).unwrap();
        assert!(!shoal.blocks(5.0));
        assert!(!shoal.blocks(6.0));
        assert!(shoal.blocks(6.5));
        let island = Obstacle::new(square(0.0, 0.0, 1.0, 1.0), 0.0).unwrap();
        assert!(island.blocks(0.0));
    }

    #[test]
    fn inflation_grows_outline() {
        let mut o = Obstacle::new(square(0.0, 0.0, 10.0, 10.0), 0.0).unwrap();
        o.inflate(1.0);
        assert_eq!(o.nav_ring()[0], Point::new(-1.0, -1.0));
        assert!(o.contains_strict(Point::new(-0.5, 5.0)));
        assert_eq!(o.ring()[0], Point::new(0.0, 0.0));
    }
}
