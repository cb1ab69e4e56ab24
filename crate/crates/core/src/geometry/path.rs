use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::navmap::NavMap;
use super::polygon::Obstacle;
use super::primitives::{Point, EPS};
use super::visibility::segment_clear;
use super::{Endpoint, GeometryError};
use crate::scenario::Report;

/// An obstacle-avoiding polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoPath {
    pub waypoints: Vec<Point>,
    pub length_m: f64,
}

impl GeoPath {
    pub fn from_waypoints(waypoints: Vec<Point>) -> Self {
        let length_m = waypoints.windows(2).map(|w| w[0].distance(w[1])).sum();
        Self {
            waypoints,
            length_m,
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.waypoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// Bearing of the first leg that has non-zero length.
    pub fn initial_bearing(&self) -> Option<f64> {
        self.segments().find_map(|(a, b)| a.bearing_to(b))
    }

    /// Bearing of the last leg that has non-zero length.
    pub fn final_bearing(&self) -> Option<f64> {
        self.waypoints
            .windows(2)
            .rev()
            .find_map(|w| w[0].bearing_to(w[1]))
    }
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    g: f64,
    at: Point,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on f; ties prefer the larger g, then the northernmost and
    // westernmost vertex, so symmetric detours resolve the same way every time
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(self.at.y.total_cmp(&other.at.y))
            .then(other.at.x.total_cmp(&self.at.x))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_endpoint(map: &NavMap, p: Point, draught_m: f64, which: Endpoint) -> Result<(), GeometryError> {
    if !map.bounds().contains(p) {
        return Err(GeometryError::OutOfBounds { which, x: p.x, y: p.y });
    }
    if let Some(kind) = map.blocked_at(p, draught_m) {
        return Err(GeometryError::EndpointBlocked { which, kind, x: p.x, y: p.y });
    }
    Ok(())
}

/// Shortest obstacle-avoiding path between two navigable points.
///
/// A* over the cached visibility graph plus both endpoints, with the
/// straight-line distance as heuristic.
pub fn shortest_path(map: &NavMap, from: Point, to: Point, draught_m: f64) -> Result<GeoPath, GeometryError> {
    check_endpoint(map, from, draught_m, Endpoint::From)?;
    check_endpoint(map, to, draught_m, Endpoint::To)?;
    if from.distance(to) <= EPS {
        return Ok(GeoPath {
            waypoints: vec![from],
            length_m: 0.0,
        });
    }
    let graph = map.visibility_graph(draught_m);
    let obstacles: Vec<&Obstacle> = graph
        .active_obstacles()
        .iter()
        .map(|&i| &map.obstacles()[i])
        .collect();
    if segment_clear(&obstacles, from, to) {
        return Ok(GeoPath::from_waypoints(vec![from, to]));
    }

    let verts = graph.vertices();
    let n = verts.len();
    let (src, dst) = (n, n + 1);
    let point = |i: usize| match i {
        i if i == src => from,
        i if i == dst => to,
        i => verts[i],
    };
    let from_visible: Vec<usize> = (0..n).filter(|&i| segment_clear(&obstacles, from, verts[i])).collect();
    let to_visible: Vec<bool> = (0..n).map(|i| segment_clear(&obstacles, verts[i], to)).collect();

    let mut g_score = vec![f64::INFINITY; n + 2];
    let mut came_from = vec![usize::MAX; n + 2];
    let mut closed = vec![false; n + 2];
    let mut heap = BinaryHeap::new();
    g_score[src] = 0.0;
    heap.push(Entry { f: from.distance(to), g: 0.0, at: from, node: src });

    while let Some(Entry { g, node, .. }) = heap.pop() {
        if closed[node] {
            continue;
        }
        closed[node] = true;
        if node == dst {
            break;
        }
        let mut relax = |next: usize, w: f64, heap: &mut BinaryHeap<Entry>| {
            let cand = g + w;
            if cand < g_score[next] {
                g_score[next] = cand;
                came_from[next] = node;
                let at = point(next);
                heap.push(Entry { f: cand + at.distance(to), g: cand, at, node: next });
            }
        };
        if node == src {
            for &v in &from_visible {
                relax(v, from.distance(verts[v]), &mut heap);
            }
        } else {
            for &(v, w) in graph.neighbors(node) {
                relax(v, w, &mut heap);
            }
            if to_visible[node] {
                relax(dst, verts[node].distance(to), &mut heap);
            }
        }
    }

    if !closed[dst] {
        return Err(GeometryError::NoRoute);
    }
    let mut waypoints = vec![to];
    let mut cur = dst;
    while came_from[cur] != usize::MAX {
        cur = came_from[cur];
        waypoints.push(point(cur));
    }
    waypoints.reverse();
    Ok(GeoPath::from_waypoints(waypoints))
}

/// Speed needed to cover the shortest path between two reports in the time
/// between them; infinite when no route exists.
pub fn required_speed(map: &NavMap, r_i: &Report, r_j: &Report, draught_m: f64) -> Result<f64, GeometryError> {
    let dt = (r_j.time - r_i.time).as_secs_f64();
    if dt <= 0.0 {
        return Err(GeometryError::NonPositiveInterval);
    }
    match shortest_path(map, r_i.position, r_j.position, draught_m) {
        Ok(path) => Ok(path.length_m / dt),
        Err(GeometryError::NoRoute) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}
