use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::polygon::Obstacle;
use super::primitives::{Point, Rect};
use super::visibility::VisibilityGraph;
use super::GeometryError;

pub const DEFAULT_CELL_SIZE_M: f64 = 500.0;
pub const DEFAULT_PROJECTION: &str = "local-meters";

/// Kind of obstacle that blocks a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Land,
    Shallow,
}

/// The geometric world: bounds plus obstacle polygons tagged with depth.
///
/// Immutable once built. Visibility graphs are built lazily per set of
/// active obstacles and cached behind a mutex, so concurrent queries are
/// safe.
pub struct NavMap {
    bounds: Rect,
    obstacles: Vec<Obstacle>,
    cell_size_m: f64,
    projection: String,
    inflation_m: f64,
    graphs: Mutex<HashMap<Vec<usize>, Arc<VisibilityGraph>>>,
}

impl NavMap {
    pub fn new(bounds: Rect, obstacles: Vec<Obstacle>) -> Result<Self, GeometryError> {
        Self::with_options(bounds, obstacles, DEFAULT_CELL_SIZE_M, 0.0)
    }

    pub fn open(bounds: Rect) -> Self {
        Self::new(bounds, Vec::new()).expect("an empty map is always valid")
    }

    pub fn with_options(
        bounds: Rect,
        mut obstacles: Vec<Obstacle>,
        cell_size_m: f64,
        inflation_m: f64,
    ) -> Result<Self, GeometryError> {
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(GeometryError::DegenerateBounds);
        }
        if !(cell_size_m > 0.0) {
            return Err(GeometryError::InvalidMap(format!(
                "cell_size_m must be positive, got {cell_size_m}"
            )));
        }
        if !(inflation_m >= 0.0) {
            return Err(GeometryError::InvalidMap(format!(
                "inflation_m must be non-negative, got {inflation_m}"
            )));
        }
        for (i, o) in obstacles.iter().enumerate() {
            if let Some(p) = o.ring().iter().find(|p| !bounds.contains(**p)) {
                return Err(GeometryError::InvalidMap(format!(
                    "obstacle {i} vertex ({}, {}) lies outside the map bounds",
                    p.x, p.y
                )));
            }
            for (j, other) in obstacles.iter().enumerate().skip(i + 1) {
                if o.overlaps(other) {
                    return Err(GeometryError::InvalidMap(format!(
                        "obstacles {i} and {j} overlap"
                    )));
                }
            }
        }
        for o in &mut obstacles {
            o.inflate(inflation_m);
        }
        Ok(Self {
            bounds,
            obstacles,
            cell_size_m,
            projection: DEFAULT_PROJECTION.to_string(),
            inflation_m,
            graphs: Mutex::new(HashMap::new()),
        })
    }

    pub fn bounds(&self) -> &Rect {
        &self.bounds
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    pub fn projection(&self) -> &str {
        &self.projection
    }

    pub fn inflation_m(&self) -> f64 {
        self.inflation_m
    }

    /// Indices of obstacles that block a vessel of this draught.
    pub fn active_obstacles(&self, draught_m: f64) -> Vec<usize> {
        self.obstacles
            .iter()
            .enumerate()
            .filter(|(_, o)| o.blocks(draught_m))
            .map(|(i, _)| i)
            .collect()
    }

    /// Why `p` is not navigable at this draught, if it is not.
    /// Points on an obstacle boundary are navigable.
    pub fn blocked_at(&self, p: Point, draught_m: f64) -> Option<BlockKind> {
        self.obstacles
            .iter()
            .filter(|o| o.blocks(draught_m))
            .find(|o| o.contains_strict(p))
            .map(|o| if o.is_island() { BlockKind::Land } else { BlockKind::Shallow })
    }

    pub fn is_navigable(&self, p: Point, draught_m: f64) -> bool {
        self.bounds.contains(p) && self.blocked_at(p, draught_m).is_none()
    }

    /// Visibility graph for the obstacles active at this draught, cached per
    /// distinct active set.
    pub fn visibility_graph(&self, draught_m: f64) -> Arc<VisibilityGraph> {
        let key = self.active_obstacles(draught_m);
        if let Some(g) = self.graphs.lock().expect("graph cache poisoned").get(&key) {
            return Arc::clone(g);
        }
        let built = Arc::new(VisibilityGraph::build_for(self, &key));
        let mut cache = self.graphs.lock().expect("graph cache poisoned");
        Arc::clone(cache.entry(key).or_insert(built))
    }

    pub fn from_geojson_str(text: &str) -> Result<Self, GeometryError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| GeometryError::Parse(e.to_string()))?;
        Self::from_geojson(&value)
    }

    pub fn from_geojson_file(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeometryError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_geojson_str(&text)
    }

    /// Parses a FeatureCollection of Polygon features with a `min_depth_m`
    /// property and top-level `bounds` / `projection` members.
    pub fn from_geojson(value: &Value) -> Result<Self, GeometryError> {
        let doc: MapDocument = serde_path_to_error::deserialize(value)
            .map_err(|e| GeometryError::Parse(format!("{}: {}", e.path(), e.inner())))?;
        if doc.kind != "FeatureCollection" {
            return Err(GeometryError::Parse(format!(
                "type: expected FeatureCollection, got {}",
                doc.kind
            )));
        }
        let mut obstacles = Vec::with_capacity(doc.features.len());
        for (i, f) in doc.features.into_iter().enumerate() {
            if f.geometry.kind != "Polygon" {
                return Err(GeometryError::Parse(format!(
                    "features[{i}].geometry.type: expected Polygon, got {}",
                    f.geometry.kind
                )));
            }
            if f.geometry.coordinates.len() != 1 {
                return Err(GeometryError::Parse(format!(
                    "features[{i}].geometry.coordinates: polygons with holes are not supported"
                )));
            }
            let ring: Vec<Point> = f.geometry.coordinates[0]
                .iter()
                .map(|c| Point::new(c[0], c[1]))
                .collect();
            let mut o = Obstacle::new(ring, f.properties.min_depth_m).map_err(|e| {
                GeometryError::InvalidMap(format!("features[{i}]: {e}"))
            })?;
            o.name = f.properties.name;
            obstacles.push(o);
        }
        let mut map = Self::with_options(
            doc.bounds,
            obstacles,
            doc.cell_size_m.unwrap_or(DEFAULT_CELL_SIZE_M),
            doc.inflation_m.unwrap_or(0.0),
        )?;
        map.projection = doc.projection;
        Ok(map)
    }

    pub fn to_geojson(&self) -> Value {
        let doc = MapDocument {
            kind: "FeatureCollection".into(),
            bounds: self.bounds,
            projection: self.projection.clone(),
            cell_size_m: Some(self.cell_size_m),
            inflation_m: (self.inflation_m > 0.0).then_some(self.inflation_m),
            features: self
                .obstacles
                .iter()
                .map(|o| {
                    let mut ring: Vec<[f64; 2]> = o.ring().iter().map(|p| [p.x, p.y]).collect();
                    ring.push(ring[0]);
                    FeatureDoc {
                        kind: "Feature".into(),
                        properties: PropertiesDoc {
                            min_depth_m: o.min_depth_m,
                            name: o.name.clone(),
                        },
                        geometry: GeometryDoc {
                            kind: "Polygon".into(),
                            coordinates: vec![ring],
                        },
                    }
                })
                .collect(),
        };
        serde_json::to_value(doc).expect("map document serialises")
    }
}

impl PartialEq for NavMap {
    fn eq(&self, other: &Self) -> bool {
        self.bounds == other.bounds
            && self.obstacles == other.obstacles
            && self.cell_size_m == other.cell_size_m
            && self.projection == other.projection
            && self.inflation_m == other.inflation_m
    }
}

impl std::fmt::Debug for NavMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NavMap")
            .field("bounds", &self.bounds)
            .field("obstacles", &self.obstacles.len())
            .field("cell_size_m", &self.cell_size_m)
            .field("projection", &self.projection)
            .finish()
    }
}

#[derive(Serialize, Deserialize)]
struct MapDocument {
    #[serde(rename = "type")]
    kind: String,
    bounds: Rect,
    #[serde(default = "default_projection")]
    projection: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cell_size_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inflation_m: Option<f64>,
    features: Vec<FeatureDoc>,
}

#[derive(Serialize, Deserialize)]
struct FeatureDoc {
    #[serde(rename = "type")]
    kind: String,
    properties: PropertiesDoc,
    geometry: GeometryDoc,
}

#[derive(Serialize, Deserialize)]
struct PropertiesDoc {
    min_depth_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct GeometryDoc {
    #[serde(rename = "type")]
    kind: String,
    coordinates: Vec<Vec<[f64; 2]>>,
}

fn default_projection() -> String {
    DEFAULT_PROJECTION.to_string()
}
