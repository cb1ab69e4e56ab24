use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

/// Distance below which two points or a point and a segment are considered
/// coincident, in meters.
pub const EPS: f64 = 1e-7;

/// A point in planar projected coordinates (meters). Serialises as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    /// Nautical bearing from `self` to `o`: degrees clockwise from +y, in [0, 360).
    pub fn bearing_to(self, o: Point) -> Option<f64> {
        let d = o - self;
        if d.norm() <= EPS {
            return None;
        }
        let deg = d.x.atan2(d.y).to_degrees();
        Some(if deg < 0.0 { deg + 360.0 } else { deg })
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Ok(Point::new(x, y))
    }
}

/// Axis-aligned rectangle. Serialises as `[x0, y0, x1, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    /// Normalises corner order.
    pub fn from_corners(a: Point, b: Point) -> Self {
        Self {
            min: Point::new(a.x.min(b.x), a.y.min(b.y)),
            max: Point::new(a.x.max(b.x), a.y.max(b.y)),
        }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, o: &Rect) -> bool {
        self.contains(o.min) && self.contains(o.max)
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn expanded(&self, by: f64) -> Rect {
        Rect {
            min: Point::new(self.min.x - by, self.min.y - by),
            max: Point::new(self.max.x + by, self.max.y + by),
        }
    }

    pub fn bounding(points: &[Point]) -> Option<Rect> {
        let first = *points.first()?;
        Some(points.iter().fold(Rect::from_corners(first, first), |r, p| Rect {
            min: Point::new(r.min.x.min(p.x), r.min.y.min(p.y)),
            max: Point::new(r.max.x.max(p.x), r.max.y.max(p.y)),
        }))
    }
}

impl Serialize for Rect {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.min.x, self.min.y, self.max.x, self.max.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x0, y0, x1, y1] = <[f64; 4]>::deserialize(d)?;
        Ok(Rect::from_corners(Point::new(x0, y0), Point::new(x1, y1)))
    }
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a.lerp(b, t))
}

/// Parameters `t` in `[0, 1]` along `ab` where it touches the closed segment `cd`.
/// A collinear overlap contributes both ends of the overlap.
pub fn segment_contact_params(a: Point, b: Point, c: Point, d: Point) -> SmallVec<[f64; 2]> {
    let mut out = SmallVec::new();
    let r = b - a;
    let s = d - c;
    let r_len = r.norm();
    let s_len = s.norm();
    if r_len <= EPS {
        if point_segment_distance(a, c, d) <= EPS {
            out.push(0.0);
        }
        return out;
    }
    let qp = c - a;
    let denom = r.cross(s);
    let tol_t = EPS / r_len;
    if denom.abs() > 1e-12 * r_len * s_len.max(EPS) {
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        let tol_u = if s_len > 0.0 { EPS / s_len } else { 0.0 };
        if t >= -tol_t && t <= 1.0 + tol_t && u >= -tol_u && u <= 1.0 + tol_u {
            out.push(t.clamp(0.0, 1.0));
        } else {
            // near-misses at endpoints still count as contact
            if point_segment_distance(a, c, d) <= EPS {
                out.push(0.0);
            }
            if point_segment_distance(b, c, d) <= EPS {
                out.push(1.0);
            }
            for p in [c, d] {
                if point_segment_distance(p, a, b) <= EPS {
                    out.push(((p - a).dot(r) / (r_len * r_len)).clamp(0.0, 1.0));
                }
            }
        }
        return out;
    }
    // parallel
    if qp.cross(r).abs() > EPS * r_len {
        return out;
    }
    let len2 = r_len * r_len;
    let tc = qp.dot(r) / len2;
    let td = (d - a).dot(r) / len2;
    let lo = tc.min(td).max(0.0);
    let hi = tc.max(td).min(1.0);
    if lo <= hi + tol_t {
        out.push(lo.clamp(0.0, 1.0));
        if hi - lo > tol_t {
            out.push(hi.clamp(0.0, 1.0));
        }
    }
    out
}

/// True if the closed segments `ab` and `cd` cross at a single point interior
/// to both (no touching, no collinear overlap).
pub fn segments_cross_properly(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orientation(a, b, c);
    let o2 = orientation(a, b, d);
    let o3 = orientation(c, d, a);
    let o4 = orientation(c, d, b);
    o1 * o2 < 0 && o3 * o4 < 0
}

/// Sign of the turn `a -> b -> c` with a distance tolerance: 1 left, -1 right, 0 collinear.
pub fn orientation(a: Point, b: Point, c: Point) -> i32 {
    let ab = b - a;
    let len = ab.norm();
    let cr = ab.cross(c - a);
    if len <= EPS || cr.abs() <= EPS * len {
        0
    } else if cr > 0.0 {
        1
    } else {
        -1
    }
}

/// Does the closed segment `ab` come within `radius` of `center`?
pub fn segment_meets_disc(a: Point, b: Point, center: Point, radius: f64) -> bool {
    point_segment_distance(center, a, b) <= radius
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bearings() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(o.bearing_to(Point::new(0.0, 10.0)), Some(0.0));
        assert_eq!(o.bearing_to(Point::new(10.0, 0.0)), Some(90.0));
        assert_eq!(o.bearing_to(Point::new(0.0, -10.0)), Some(180.0));
        assert_eq!(o.bearing_to(Point::new(-10.0, 0.0)), Some(270.0));
        assert_eq!(o.bearing_to(o), None);
    }

    #[test]
    fn contact_params() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(10.0, 0.0);
        let hit = segment_contact_params(a, b, Point::new(5.0, -1.0), Point::new(5.0, 1.0));
        assert_eq!(hit.as_slice(), &[0.5]);
        let touch = segment_contact_params(a, b, Point::new(2.0, 0.0), Point::new(2.0, 3.0));
        assert_eq!(touch.as_slice(), &[0.2]);
        let overlap = segment_contact_params(a, b, Point::new(-5.0, 0.0), Point::new(4.0, 0.0));
        assert_eq!(overlap.as_slice(), &[0.0, 0.4]);
        let miss = segment_contact_params(a, b, Point::new(5.0, 1.0), Point::new(6.0, 2.0));
        assert!(miss.is_empty());
    }

    #[test]
    fn proper_crossing_excludes_touching() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(10.0, 0.0);
        assert!(segments_cross_properly(a, b, Point::new(5.0, -1.0), Point::new(5.0, 1.0)));
        assert!(!segments_cross_properly(a, b, Point::new(5.0, 0.0), Point::new(5.0, 1.0)));
    }

    #[test]
    fn rect_serde() {
        let r: Rect = serde_json::from_str("[10, 0, 0, 5]").unwrap();
        assert_eq!(r.min, Point::new(0.0, 0.0));
        assert_eq!(serde_json::to_string(&r).unwrap(), "[0.0,0.0,10.0,5.0]");
    }
}
