use serde::{Deserialize, Serialize};

use super::layer::Layer;
use super::{EvidenceMapError, MapParams};
use crate::geometry::{BlockKind, NavMap, Point};
use crate::scenario::{Report, Sensor, SubmarineType, Timestamp, TimeDelta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellClass {
    Water,
    Land,
    Shallow,
}

/// Row-major grid over the map bounds. Row 0 is the southern edge.
#[derive(Debug, Clone, PartialEq)]
pub struct GridShape {
    pub cell_size_m: f64,
    pub origin: Point,
    pub width: usize,
    pub height: usize,
}

impl GridShape {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, cell: usize) -> Point {
        let (col, row) = (cell % self.width, cell / self.width);
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.cell_size_m,
            self.origin.y + (row as f64 + 0.5) * self.cell_size_m,
        )
    }

    /// Cell containing `p`, clamped onto the grid.
    pub fn cell_of(&self, p: Point) -> usize {
        let col = ((p.x - self.origin.x) / self.cell_size_m).floor().clamp(0.0, (self.width - 1) as f64) as usize;
        let row = ((p.y - self.origin.y) / self.cell_size_m).floor().clamp(0.0, (self.height - 1) as f64) as usize;
        row * self.width + col
    }

    /// The 8 neighbours of `cell` with their step length in cells.
    pub fn neighbours(&self, cell: usize) -> impl Iterator<Item = (usize, bool)> + '_ {
        let (col, row) = ((cell % self.width) as i64, (cell / self.width) as i64);
        const STEPS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        STEPS.iter().filter_map(move |&(dc, dr)| {
            let (c, r) = (col + dc, row + dr);
            (c >= 0 && r >= 0 && c < self.width as i64 && r < self.height as i64)
                .then(|| ((r * self.width as i64 + c) as usize, dc != 0 && dr != 0))
        })
    }
}

/// The evolving evidence map: one plausibility layer per active report and
/// their per-cell orthogonal combination.
#[derive(Debug, Clone)]
pub struct EvidenceGrid {
    pub(crate) shape: GridShape,
    pub(crate) classes: Vec<CellClass>,
    pub(crate) water_cells: usize,
    pub(crate) sensors: Vec<Sensor>,
    /// Sensor indices whose range covers each cell's center.
    pub(crate) coverage: Vec<Vec<u16>>,
    pub(crate) speed_mps: f64,
    pub(crate) params: MapParams,
    pub(crate) layers: Vec<Layer>,
    pub(crate) t: Timestamp,
}

impl EvidenceGrid {
    /// Rasterises `map` at the draught of `sub`: a cell is blocked when its
    /// center is.
    pub fn new(
        map: &NavMap,
        sensors: &[Sensor],
        sub: &SubmarineType,
        params: MapParams,
        t: Timestamp,
    ) -> Result<Self, EvidenceMapError> {
        params.validate()?;
        if sensors.len() > u16::MAX as usize {
            return Err(EvidenceMapError::TooManySensors(sensors.len()));
        }
        let cell = params.cell_size_m.unwrap_or(map.cell_size_m());
        let b = map.bounds();
        let shape = GridShape {
            cell_size_m: cell,
            origin: b.min,
            width: ((b.width() / cell).ceil() as usize).max(1),
            height: ((b.height() / cell).ceil() as usize).max(1),
        };
        let classes: Vec<CellClass> = (0..shape.len())
            .map(|c| match map.blocked_at(shape.center(c), sub.draught_m) {
                None => CellClass::Water,
                Some(BlockKind::Land) => CellClass::Land,
                Some(BlockKind::Shallow) => CellClass::Shallow,
            })
            .collect();
        let water_cells = classes.iter().filter(|c| **c == CellClass::Water).count();
        let coverage = (0..shape.len())
            .map(|c| {
                let p = shape.center(c);
                sensors
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.covers(p))
                    .map(|(i, _)| i as u16)
                    .collect()
            })
            .collect();
        Ok(Self {
            shape,
            classes,
            water_cells,
            sensors: sensors.to_vec(),
            coverage,
            speed_mps: sub.max_speed_mps,
            params,
            layers: Vec::new(),
            t,
        })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn classes(&self) -> &[CellClass] {
        &self.classes
    }

    pub fn time(&self) -> Timestamp {
        self.t
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    /// Ids of the reports with a live layer.
    pub fn active_reports(&self) -> Vec<&str> {
        self.layers.iter().map(|l| l.report_id.as_str()).collect()
    }

    pub fn is_water(&self, cell: usize) -> bool {
        self.classes[cell] == CellClass::Water
    }

    /// Water cell for a report: its own cell, or the nearest water cell
    /// center within `snap_cells` cells.
    pub fn report_cell(&self, p: Point) -> Option<usize> {
        let home = self.shape.cell_of(p);
        if self.is_water(home) {
            return Some(home);
        }
        let r = self.params.snap_cells as i64;
        let (col, row) = ((home % self.shape.width) as i64, (home / self.shape.width) as i64);
        let mut best: Option<(f64, usize)> = None;
        for dr in -r..=r {
            for dc in -r..=r {
                let (c, rr) = (col + dc, row + dr);
                if c < 0 || rr < 0 || c >= self.shape.width as i64 || rr >= self.shape.height as i64 {
                    continue;
                }
                let cell = (rr * self.shape.width as i64 + c) as usize;
                if !self.is_water(cell) {
                    continue;
                }
                let d = self.shape.center(cell).distance(p);
                if best.is_none_or(|(bd, bc)| d < bd || (d == bd && cell < bc)) {
                    best = Some((d, cell));
                }
            }
        }
        best.map(|(_, c)| c)
    }

    /// Adds a layer holding the report's trust at its cell.
    pub fn add_report(&mut self, report: &Report) -> Result<(), EvidenceMapError> {
        if report.time > self.t {
            return Err(EvidenceMapError::FutureReport {
                id: report.id.clone(),
            });
        }
        let origin = self.report_cell(report.position).ok_or_else(|| EvidenceMapError::ReportBlocked {
            id: report.id.clone(),
        })?;
        let mut layer = Layer::new(report, origin);
        layer.refresh(self);
        self.layers.push(layer);
        Ok(())
    }

    /// Advances time by `dt`, re-deriving each layer's reachable set and
    /// sensor discounts, then ages out stale layers.
    pub fn step(&mut self, dt: TimeDelta) -> Result<(), EvidenceMapError> {
        if dt.0 < 0 {
            return Err(EvidenceMapError::InvalidStep(dt.0));
        }
        if dt.0 == 0 {
            return Ok(());
        }
        self.t = Timestamp(self.t.0 + dt.0);
        let mut layers = std::mem::take(&mut self.layers);
        for l in &mut layers {
            l.refresh(self);
        }
        self.layers = layers;
        self.age_out();
        Ok(())
    }

    /// Removes layers whose maximum value fell below the removal threshold
    /// or whose reachable area exceeds the configured share of the water.
    pub fn age_out(&mut self) {
        let t = self.t;
        let params = self.params.clone();
        let speed = self.speed_mps;
        let water = self.water_cells.max(1) as f64;
        self.layers.retain(|l| {
            l.max_value(t, &params) >= params.min_value && (l.reach_count(t, speed) as f64) / water <= params.max_reach_fraction
        });
    }

    /// Value of every layer at every cell, at the current time.
    pub fn layer_values(&self) -> Vec<Vec<f64>> {
        self.layers.iter().map(|l| l.values(self)).collect()
    }

    /// Per-cell orthogonal combination of the layers: `1 - Π(1 - v)`.
    pub fn combined(&self) -> Vec<f64> {
        let mut none = vec![1.0; self.shape.len()];
        for values in self.layer_values() {
            for (n, v) in none.iter_mut().zip(values) {
                *n *= 1.0 - v;
            }
        }
        none.into_iter().map(|n| 1.0 - n).collect()
    }
}
