use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::grid::GridShape;
use crate::geometry::Point;
use crate::round::round_dp;

/// Iso-lines of the combined field at one plausibility level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub level: f64,
    pub lines: Vec<Vec<Point>>,
}

/// Marching squares over the lattice of cell centers. A lattice corner is
/// inside when its value is at least `level`; ambiguous saddles are
/// resolved by the mean of the four corners. Segments are joined into
/// polylines, closed ones repeating their first point.
pub fn contour_lines(shape: &GridShape, values: &[f64], level: f64) -> Vec<Vec<Point>> {
    let (w, h) = (shape.width, shape.height);
    if w < 2 || h < 2 {
        return Vec::new();
    }
    let v = |c: usize, r: usize| values[r * w + c];
    let at = |c: f64, r: f64| {
        Point::new(
            shape.origin.x + (c + 0.5) * shape.cell_size_m,
            shape.origin.y + (r + 0.5) * shape.cell_size_m,
        )
    };
    let mut segments: Vec<(Point, Point)> = Vec::new();
    for r in 0..h - 1 {
        for c in 0..w - 1 {
            // corners counter-clockwise from south-west
            let z = [v(c, r), v(c + 1, r), v(c + 1, r + 1), v(c, r + 1)];
            let pos = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
            let inside: Vec<bool> = z.iter().map(|&x| x >= level).collect();
            let case = inside.iter().enumerate().fold(0, |acc, (i, &b)| acc | (b as usize) << i);
            if case == 0 || case == 15 {
                continue;
            }
            // crossing point on edge e (between corner e and e+1)
            let cross = |e: usize| {
                let (a, b) = (e, (e + 1) % 4);
                let t = if z[b] == z[a] { 0.5 } else { ((level - z[a]) / (z[b] - z[a])).clamp(0.0, 1.0) };
                at(
                    c as f64 + pos[a].0 + t * (pos[b].0 - pos[a].0),
                    r as f64 + pos[a].1 + t * (pos[b].1 - pos[a].1),
                )
            };
            let crossing: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            if crossing.len() == 2 {
                segments.push((cross(crossing[0]), cross(crossing[1])));
            } else {
                // saddle: four crossings
                let centre_inside = z.iter().sum::<f64>() / 4.0 >= level;
                if centre_inside == inside[0] {
                    segments.push((cross(0), cross(1)));
                    segments.push((cross(2), cross(3)));
                } else {
                    segments.push((cross(3), cross(0)));
                    segments.push((cross(1), cross(2)));
                }
            }
        }
    }
    join(segments)
}

fn key(p: Point) -> (i64, i64) {
    ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64)
}

fn join(segments: Vec<(Point, Point)>) -> Vec<Vec<Point>> {
    let mut at: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        at.entry(key(*a)).or_default().push(i);
        at.entry(key(*b)).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let extend = |line: &mut Vec<Point>, used: &mut Vec<bool>| loop {
        let end = *line.last().unwrap();
        let next = at[&key(end)].iter().copied().find(|&j| !used[j]);
        let Some(j) = next else { break };
        used[j] = true;
        let (a, b) = segments[j];
        line.push(if key(a) == key(end) { b } else { a });
    };
    for i in 0..segments.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut line = vec![segments[i].0, segments[i].1];
        extend(&mut line, &mut used);
        line.reverse();
        extend(&mut line, &mut used);
        lines.push(
            line.into_iter()
                .map(|p| Point::new(round_dp(p.x, 2), round_dp(p.y, 2)))
                .collect(),
        );
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(w: usize, h: usize) -> GridShape {
        GridShape {
            cell_size_m: 1.0,
            origin: Point::new(0.0, 0.0),
            width: w,
            height: h,
        }
    }

    #[test]
    fn single_peak_gives_a_closed_ring() {
        let s = shape(3, 3);
        let mut v = vec![0.0; 9];
        v[4] = 1.0;
        let lines = contour_lines(&s, &v, 0.5);
        assert_eq!(lines.len(), 1);
        let ring = &lines[0];
        assert_eq!(ring.first(), ring.last());
        assert_eq!(ring.len(), 5);
        assert!(ring.contains(&Point::new(1.5, 1.0)));
    }

    #[test]
    fn flat_fields_have_no_lines() {
        let s = shape(4, 4);
        assert!(contour_lines(&s, &[0.0; 16], 0.5).is_empty());
        assert!(contour_lines(&s, &[1.0; 16], 0.5).is_empty());
        assert!(contour_lines(&shape(1, 5), &[1.0; 5], 0.5).is_empty());
    }

    #[test]
    fn step_edge_is_one_open_line() {
        let s = shape(4, 3);
        let v: Vec<f64> = (0..12).map(|i| if i % 4 < 2 { 1.0 } else { 0.0 }).collect();
        let lines = contour_lines(&s, &v, 0.5);
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 3);
        assert!(lines[0].iter().all(|p| p.x == 2.0));
    }
}
