use smallvec::SmallVec;

use super::navmap::NavMap;
use super::polygon::Obstacle;
use super::primitives::{segment_contact_params, Point, Rect, EPS};

/// Graph over the vertices of the active obstacles; an edge joins two
/// vertices whose connecting segment avoids every obstacle interior.
#[derive(Debug, Clone)]
pub struct VisibilityGraph {
    active: Vec<usize>,
    vertices: Vec<Point>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl VisibilityGraph {
    pub(crate) fn build_for(map: &NavMap, active: &[usize]) -> Self {
        let obstacles: Vec<&Obstacle> = active.iter().map(|&i| &map.obstacles()[i]).collect();
        let mut vertices: Vec<Point> = Vec::new();
        for o in &obstacles {
            for &p in o.nav_ring() {
                if map.bounds().contains(p) && !vertices.iter().any(|v| v.distance(p) <= EPS) {
                    vertices.push(p);
                }
            }
        }
        let n = vertices.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if segment_clear(&obstacles, vertices[i], vertices[j]) {
                    let w = vertices[i].distance(vertices[j]);
                    adjacency[i].push((j, w));
                    adjacency[j].push((i, w));
                }
            }
        }
        Self {
            active: active.to_vec(),
            vertices,
            adjacency,
        }
    }

    pub fn active_obstacles(&self) -> &[usize] {
        &self.active
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].iter().any(|&(x, _)| x == b)
    }
}

/// Does the closed segment `ab` avoid the interior of every obstacle?
///
/// The segment is cut at every contact with an obstacle boundary; each piece
/// then lies wholly inside or outside each polygon and is classified by its
/// midpoint. A piece running along an edge shared by two obstacles is inside
/// their union and therefore blocked.
pub fn segment_clear(obstacles: &[&Obstacle], a: Point, b: Point) -> bool {
    let seg_box = Rect::from_corners(a, b).expanded(EPS);
    let near: SmallVec<[&Obstacle; 8]> = obstacles
        .iter()
        .copied()
        .filter(|o| o.bbox().intersects(&seg_box))
        .collect();
    if near.is_empty() {
        return true;
    }
    if a.distance(b) <= EPS {
        return !near.iter().any(|o| o.contains_strict(a));
    }
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for o in &near {
        for (c, d) in o.edges() {
            cuts.extend(segment_contact_params(a, b, c, d));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);
    let len = a.distance(b);
    for w in cuts.windows(2) {
        if (w[1] - w[0]) * len <= EPS {
            continue;
        }
        let mid = a.lerp(b, 0.5 * (w[0] + w[1]));
        let mut on_boundaries = 0;
        for o in &near {
            if o.contains_strict(mid) {
                return false;
            }
            if o.on_boundary(mid) {
                on_boundaries += 1;
            }
        }
        if on_boundaries >= 2 {
            return false;
        }
    }
    true
}
