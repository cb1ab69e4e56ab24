use std::cmp::Ordering;
use std::collections::BinaryHeap;

use smallvec::SmallVec;

use super::grid::EvidenceGrid;
use super::MapParams;
use crate::scenario::{Report, Timestamp};

/// Set of silent sensors a route has crossed, as bits over the layer's
/// silent-sensor list.
type Mask = SmallVec<[u64; 2]>;

/// Slack on the reach radius so cells exactly at the radius are included
/// despite rounding in summed diagonal steps.
const RADIUS_TOLERANCE_M: f64 = 1e-6;

fn mask_with(mask: &Mask, bit: usize) -> Mask {
    let mut m = mask.clone();
    if m.len() <= bit / 64 {
        m.resize(bit / 64 + 1, 0);
    }
    m[bit / 64] |= 1 << (bit % 64);
    m
}

fn has_bit(mask: &Mask, bit: usize) -> bool {
    mask.get(bit / 64).is_some_and(|w| w >> (bit % 64) & 1 == 1)
}

fn is_subset(a: &Mask, b: &Mask) -> bool {
    a.iter().enumerate().all(|(i, w)| w & !b.get(i).copied().unwrap_or(0) == 0)
}

/// One report's plausibility field.
///
/// The field is a closed-form function of the report's age: every water
/// cell within grid distance `max_speed * age` of the report cell holds
/// `trust * decay(age)`, discounted by `1 - detect_prob` for every silent
/// sensor the best route to it had to cross. Routes are ranked by a
/// two-criteria search over (distance, crossed sensors), cached until the
/// set of silent sensors changes.
#[derive(Debug, Clone)]
pub struct Layer {
    pub report_id: String,
    pub trust_p: f64,
    pub birth: Timestamp,
    pub origin: usize,
    silent: Option<Vec<u16>>,
    /// Per cell, `(distance, transmission)` pairs with both increasing.
    frontier_offsets: Vec<u32>,
    frontier: Vec<(f64, f64)>,
    /// Smallest distance at which each reachable cell gets a positive value,
    /// sorted.
    reach: Vec<f64>,
}

#[derive(Debug)]
struct Label {
    dist: f64,
    cell: usize,
    mask: Mask,
    trans: f64,
}

impl PartialEq for Label {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Label {}
impl PartialOrd for Label {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Label {
    // reversed: BinaryHeap pops the nearest label first
    fn cmp(&self, o: &Self) -> Ordering {
        o.dist
            .total_cmp(&self.dist)
            .then(o.cell.cmp(&self.cell))
            .then_with(|| o.mask.cmp(&self.mask))
    }
}

impl Layer {
    pub fn new(report: &Report, origin: usize) -> Self {
        Self {
            report_id: report.id.clone(),
            trust_p: report.trust_p,
            birth: report.time,
            origin,
            silent: None,
            frontier_offsets: Vec::new(),
            frontier: Vec::new(),
            reach: Vec::new(),
        }
    }

    fn age_s(&self, t: Timestamp) -> f64 {
        (t.0 - self.birth.0).max(0) as f64 / 1000.0
    }

    fn decay(&self, t: Timestamp, params: &MapParams) -> f64 {
        match params.half_life_s {
            Some(h) => 2f64.powf(-self.age_s(t) / h),
            None => 1.0,
        }
    }

    fn radius(&self, grid: &EvidenceGrid, t: Timestamp) -> f64 {
        grid.speed_mps * self.age_s(t) + RADIUS_TOLERANCE_M
    }

    /// Recomputes the route search if the silent sensors changed. Sensors
    /// covering the report's own cell are ignored: the report places the
    /// submarine inside their range regardless.
    pub(crate) fn refresh(&mut self, grid: &EvidenceGrid) {
        let origin_cover = &grid.coverage[self.origin];
        let silent: Vec<u16> = (0..grid.sensors.len() as u16)
            .filter(|s| !origin_cover.contains(s))
            .filter(|&s| grid.sensors[s as usize].silent_throughout(self.birth, grid.t))
            .collect();
        if self.silent.as_ref() == Some(&silent) {
            return;
        }
        self.search(grid, &silent);
        self.silent = Some(silent);
    }

    fn search(&mut self, grid: &EvidenceGrid, silent: &[u16]) {
        let n = grid.shape.len();
        let cs = grid.shape.cell_size_m;
        // bit position of each silent sensor
        let mut bit_of = vec![usize::MAX; grid.sensors.len()];
        for (b, &s) in silent.iter().enumerate() {
            bit_of[s as usize] = b;
        }
        let mut settled: Vec<Vec<(f64, Mask, f64)>> = vec![Vec::new(); n];
        let mut heap = BinaryHeap::new();
        heap.push(Label {
            dist: 0.0,
            cell: self.origin,
            mask: Mask::new(),
            trans: 1.0,
        });
        while let Some(l) = heap.pop() {
            if settled[l.cell].iter().any(|(_, m, _)| is_subset(m, &l.mask)) {
                continue;
            }
            settled[l.cell].push((l.dist, l.mask.clone(), l.trans));
            let (col, row) = (l.cell % grid.shape.width, l.cell / grid.shape.width);
            for (next, diagonal) in grid.shape.neighbours(l.cell) {
                if !grid.is_water(next) {
                    continue;
                }
                if diagonal {
                    let (nc, nr) = (next % grid.shape.width, next / grid.shape.width);
                    if !grid.is_water(row * grid.shape.width + nc) || !grid.is_water(nr * grid.shape.width + col) {
                        continue;
                    }
                }
                let mut mask = l.mask.clone();
                let mut trans = l.trans;
                for &s in &grid.coverage[next] {
                    let b = bit_of[s as usize];
                    if b != usize::MAX && !has_bit(&mask, b) {
                        mask = mask_with(&mask, b);
                        trans *= 1.0 - grid.sensors[s as usize].detect_prob;
                    }
                }
                if trans <= 0.0 || settled[next].iter().any(|(_, m, _)| is_subset(m, &mask)) {
                    continue;
                }
                let step = if diagonal { cs * std::f64::consts::SQRT_2 } else { cs };
                heap.push(Label {
                    dist: l.dist + step,
                    cell: next,
                    mask,
                    trans,
                });
            }
        }
        self.frontier_offsets.clear();
        self.frontier.clear();
        self.reach.clear();
        self.frontier_offsets.push(0);
        for labels in settled {
            let mut best = 0.0;
            for (d, _, t) in labels {
                if t > best {
                    best = t;
                    self.frontier.push((d, t));
                }
            }
            let start = *self.frontier_offsets.last().unwrap() as usize;
            if let Some(&(d, _)) = self.frontier.get(start) {
                self.reach.push(d);
            }
            self.frontier_offsets.push(self.frontier.len() as u32);
        }
        self.reach.sort_by(f64::total_cmp);
    }

    fn cell_frontier(&self, cell: usize) -> &[(f64, f64)] {
        &self.frontier[self.frontier_offsets[cell] as usize..self.frontier_offsets[cell + 1] as usize]
    }

    /// Field value at every cell at the grid's current time.
    pub fn values(&self, grid: &EvidenceGrid) -> Vec<f64> {
        let r = self.radius(grid, grid.t);
        let scale = self.trust_p * self.decay(grid.t, &grid.params);
        (0..grid.shape.len())
            .map(|c| {
                let f = self.cell_frontier(c);
                let k = f.partition_point(|(d, _)| *d <= r);
                if k == 0 {
                    0.0
                } else {
                    scale * f[k - 1].1
                }
            })
            .collect()
    }

    /// Largest value anywhere, reached at the report cell.
    pub fn max_value(&self, t: Timestamp, params: &MapParams) -> f64 {
        self.trust_p * self.decay(t, params)
    }

    /// Number of cells with a positive value at time `t`.
    pub fn reach_count(&self, t: Timestamp, speed_mps: f64) -> usize {
        let r = speed_mps * self.age_s(t) + RADIUS_TOLERANCE_M;
        self.reach.partition_point(|d| *d <= r)
    }
}
