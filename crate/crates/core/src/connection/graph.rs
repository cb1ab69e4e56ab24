use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::factors::{q_course, q_sensors, q_speed, q_type, LinkFactors};
use super::ConnectionError;
use crate::evidence::EvidenceInterval;
use crate::geometry::{shortest_path, GeoPath, GeometryError, Point};
use crate::round::round_export;
use crate::scenario::{select_reports, Report, ReportFilter, Scenario, ScenarioError, SubmarineType};

/// Why a link was ruled out before any factor was weighed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkReason {
    NoRoute,
    EndpointBlocked,
    OutOfBounds,
}

/// Negative evidence against two reports coming from the same submarine.
/// The link's interval is `[0, 1 - q]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkEvidence {
    pub from: String,
    pub to: String,
    pub q: f64,
    pub factors: LinkFactors,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<GeoPath>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required_speed_mps: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub silent_sensors: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<LinkReason>,
}

impl LinkEvidence {
    /// A link carrying only its combined mass, for graphs built directly.
    pub fn bare(from: impl Into<String>, to: impl Into<String>, q: f64) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            q,
            factors: LinkFactors::default(),
            path: None,
            required_speed_mps: None,
            silent_sensors: Vec::new(),
            reason: None,
        }
    }

    pub fn interval(&self) -> EvidenceInterval {
        EvidenceInterval::against(self.q)
    }

    pub fn plausibility(&self) -> f64 {
        1.0 - self.q
    }

    fn rounded(&self) -> Self {
        let mut out = self.clone();
        out.q = round_export(out.q);
        out.factors = LinkFactors {
            q_speed: round_export(self.factors.q_speed),
            q_sensors: round_export(self.factors.q_sensors),
            q_course: round_export(self.factors.q_course),
            q_type: round_export(self.factors.q_type),
        };
        out.required_speed_mps = self.required_speed_mps.map(round_export);
        if let Some(p) = &mut out.path {
            p.length_m = round_export(p.length_m);
        }
        out
    }
}

/// Evaluates the link `r_i -> r_j` on the shortest path at the type's
/// draught. Geometry failures yield `q = 1` with a reason.
pub fn evaluate_link(
    scenario: &Scenario,
    r_i: &Report,
    r_j: &Report,
    ty: &SubmarineType,
) -> Result<LinkEvidence, ConnectionError> {
    if r_j.time <= r_i.time {
        return Err(ConnectionError::NotTimeOrdered {
            from: r_i.id.clone(),
            to: r_j.id.clone(),
        });
    }
    let mut link = LinkEvidence::bare(&r_i.id, &r_j.id, 1.0);
    let path = match shortest_path(scenario.map(), r_i.position, r_j.position, ty.draught_m) {
        Ok(p) => p,
        Err(e) => {
            link.reason = Some(match e {
                GeometryError::NoRoute => LinkReason::NoRoute,
                GeometryError::OutOfBounds { .. } => LinkReason::OutOfBounds,
                _ => LinkReason::EndpointBlocked,
            });
            link.factors.q_speed = 1.0;
            return Ok(link);
        }
    };
    let dt = (r_j.time - r_i.time).as_secs_f64();
    let v_req = path.length_m / dt;
    let (q_sens, silent) = q_sensors(scenario.sensors(), &path, r_i.time, r_j.time);
    let a = &scenario.assumptions;
    link.factors = LinkFactors {
        q_speed: q_speed(v_req, ty),
        q_sensors: q_sens,
        q_course: q_course(r_i, r_j, &path, a.course_weight, a.course_reference),
        q_type: q_type(r_i, r_j, a.type_weight),
    };
    link.q = link.factors.combined();
    link.required_speed_mps = Some(v_req);
    link.silent_sensors = silent.into_iter().map(|s| s.id.clone()).collect();
    link.path = Some(path);
    Ok(link)
}

/// Time-ordered reports with every feasible link (`q < 1`) between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionGraph {
    reports: Vec<Report>,
    edges: Vec<LinkEvidence>,
    type_id: Option<String>,
    index: HashMap<String, usize>,
    edge_at: HashMap<(usize, usize), usize>,
    successors: Vec<Vec<usize>>,
    predecessors: Vec<Vec<usize>>,
}

impl ConnectionGraph {
    /// Assembles a graph, sorting reports by `(time, id)` and dropping links
    /// with `q >= 1`. Every link must join two known reports forward in time.
    pub fn new(mut reports: Vec<Report>, links: Vec<LinkEvidence>, type_id: Option<String>) -> Result<Self, ConnectionError> {
        reports.sort_by(|a, b| a.time.cmp(&b.time).then_with(|| a.id.cmp(&b.id)));
        let mut index = HashMap::with_capacity(reports.len());
        for (i, r) in reports.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(ConnectionError::DuplicateReport(r.id.clone()));
            }
        }
        let mut keyed: Vec<((usize, usize), LinkEvidence)> = Vec::with_capacity(links.len());
        for l in links {
            let i = *index.get(&l.from).ok_or_else(|| ConnectionError::UnknownReport(l.from.clone()))?;
            let j = *index.get(&l.to).ok_or_else(|| ConnectionError::UnknownReport(l.to.clone()))?;
            if reports[j].time <= reports[i].time {
                return Err(ConnectionError::NotTimeOrdered { from: l.from, to: l.to });
            }
            if !(0.0..=1.0).contains(&l.q) {
                return Err(ConnectionError::InvalidMass { from: l.from, to: l.to, q: l.q });
            }
            if l.q < 1.0 {
                keyed.push(((i, j), l));
            }
        }
        keyed.sort_by_key(|(k, _)| *k);
        if let Some(w) = keyed.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ConnectionError::DuplicateLink {
                from: w[0].1.from.clone(),
                to: w[0].1.to.clone(),
            });
        }
        let n = reports.len();
        let mut successors = vec![Vec::new(); n];
        let mut predecessors = vec![Vec::new(); n];
        let mut edge_at = HashMap::with_capacity(keyed.len());
        let mut edges = Vec::with_capacity(keyed.len());
        for (e, ((i, j), l)) in keyed.into_iter().enumerate() {
            successors[i].push(j);
            predecessors[j].push(i);
            edge_at.insert((i, j), e);
            edges.push(l);
        }
        Ok(Self {
            reports,
            edges,
            type_id,
            index,
            edge_at,
            successors,
            predecessors,
        })
    }

    /// Convenience constructor from index triples `(i, j, q)` into `reports`.
    pub fn from_links(reports: Vec<Report>, links: &[(usize, usize, f64)]) -> Result<Self, ConnectionError> {
        let links = links
            .iter()
            .map(|&(i, j, q)| LinkEvidence::bare(&reports[i].id, &reports[j].id, q))
            .collect();
        Self::new(reports, links, None)
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn reports(&self) -> &[Report] {
        &self.reports
    }

    pub fn report(&self, i: usize) -> &Report {
        &self.reports[i]
    }

    pub fn edges(&self) -> &[LinkEvidence] {
        &self.edges
    }

    pub fn type_id(&self) -> Option<&str> {
        self.type_id.as_deref()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&LinkEvidence> {
        self.edge_at.get(&(i, j)).map(|&e| &self.edges[e])
    }

    /// Mass against the link `i -> j`; 1 when there is no edge.
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.edge(i, j).map_or(1.0, |l| l.q)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edge_at.contains_key(&(i, j))
    }

    pub fn successors(&self, i: usize) -> &[usize] {
        &self.successors[i]
    }

    pub fn predecessors(&self, i: usize) -> &[usize] {
        &self.predecessors[i]
    }

    /// Index pairs of all edges, in `(from, to)` order.
    pub fn edge_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .map(|l| (self.index[&l.from], self.index[&l.to]))
    }

    /// Export document; `threshold` keeps only links whose plausibility
    /// `1 - q` exceeds it.
    pub fn export(&self, threshold: Option<f64>) -> GraphExport {
        GraphExport {
            type_id: self.type_id.clone(),
            nodes: self.reports.iter().map(NodeExport::from).collect(),
            edges: self
                .edges
                .iter()
                .filter(|l| threshold.is_none_or(|t| l.plausibility() > t))
                .map(LinkEvidence::rounded)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExport {
    pub id: String,
    pub time: crate::scenario::Timestamp,
    pub position: Point,
    pub trust_p: f64,
}

impl From<&Report> for NodeExport {
    fn from(r: &Report) -> Self {
        Self {
            id: r.id.clone(),
            time: r.time,
            position: r.position,
            trust_p: r.trust_p,
        }
    }
}

/// JSON form of a connection graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    pub type_id: Option<String>,
    pub nodes: Vec<NodeExport>,
    pub edges: Vec<LinkEvidence>,
}

/// Evaluates every forward pair among the selected, unflagged reports.
/// Simultaneous reports are never linked. The submarine type is resolved
/// through [`Scenario::resolve_type`]; a scenario without types is accepted
/// only while it has fewer than two reports.
pub fn build_graph(scenario: &Scenario, filter: &ReportFilter, type_id: Option<&str>) -> Result<ConnectionGraph, ConnectionError> {
    let filter = ReportFilter {
        exclude_flagged: true,
        ..filter.clone()
    };
    let reports: Vec<Report> = select_reports(scenario, &filter).into_iter().cloned().collect();
    let ty = match scenario.resolve_type(type_id) {
        Ok(t) => Some(t),
        Err(ScenarioError::NoSubmarineType) if reports.len() < 2 => None,
        Err(e) => return Err(ConnectionError::Scenario(e)),
    };
    let mut pairs = Vec::new();
    for i in 0..reports.len() {
        for j in (i + 1)..reports.len() {
            if reports[i].time < reports[j].time {
                pairs.push((i, j));
            }
        }
    }
    let links: Vec<LinkEvidence> = match ty {
        Some(ty) => pairs
            .par_iter()
            .map(|&(i, j)| evaluate_link(scenario, &reports[i], &reports[j], ty))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    ConnectionGraph::new(reports, links, ty.map(|t| t.id.clone()))
}

/// A neighbour of a report in the connection graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Communicating {
    pub id: String,
    pub interval: EvidenceInterval,
}

/// Neighbours in either direction whose link plausibility exceeds
/// `threshold`, most plausible first, ties by id.
pub fn communicating_reports(graph: &ConnectionGraph, report_id: &str, threshold: f64) -> Result<Vec<Communicating>, ConnectionError> {
    let i = graph
        .index_of(report_id)
        .ok_or_else(|| ConnectionError::UnknownReport(report_id.into()))?;
    let mut out: Vec<Communicating> = graph
        .successors(i)
        .iter()
        .map(|&j| (j, graph.q(i, j)))
        .chain(graph.predecessors(i).iter().map(|&j| (j, graph.q(j, i))))
        .filter(|&(_, q)| 1.0 - q > threshold)
        .map(|(j, q)| Communicating {
            id: graph.report(j).id.clone(),
            interval: EvidenceInterval::against(q),
        })
        .collect();
    out.sort_by(|a, b| {
        b.interval
            .plausibility
            .total_cmp(&a.interval.plausibility)
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(out)
}
