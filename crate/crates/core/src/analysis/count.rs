use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cover::min_submarines;
use super::dp;
use super::{AnalysisError, AnalysisOptions};
use crate::connection::ConnectionGraph;
use crate::round::{ser_export, ser_export_pair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    /// Smallest submarine count with non-zero plausibility.
    pub min_count: usize,
    /// Submarines needed if every report is true.
    pub min_submarines: usize,
    /// `[support, plausibility]` per submarine count.
    #[serde(serialize_with = "ser_intervals")]
    pub intervals: BTreeMap<usize, [f64; 2]>,
    #[serde(serialize_with = "ser_export")]
    pub conflict_k: f64,
}

fn ser_intervals<S: serde::Serializer>(m: &BTreeMap<usize, [f64; 2]>, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        struct Pair<'a>(&'a [f64; 2]);
        impl Serialize for Pair<'_> {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                ser_export_pair(self.0, s)
            }
        }
        map.serialize_entry(k, &Pair(v))?;
    }
    map.end()
}

/// Evidence intervals for every submarine count from 0 up to the minimum
/// needed to explain all reports, over the joint hypotheses with at most
/// that many chains.
pub fn count_intervals(graph: &ConnectionGraph, opts: &AnalysisOptions) -> Result<CountResult, AnalysisError> {
    if graph.len() > opts.exact_limit {
        return Err(AnalysisError::TooManyReports {
            reports: graph.len(),
            limit: opts.exact_limit,
        });
    }
    let cap = min_submarines(graph);
    let at_most: Vec<dp::Existence> = (0..=cap)
        .map(|c| dp::existence(graph, c, 0, opts.budget.max_focal, &dp::Any))
        .collect::<Result<_, _>>()?;
    let norm = at_most[cap].found;
    if norm <= 0.0 {
        return Err(AnalysisError::TotalConflict("all reports".into()));
    }
    // every count from the fewest chains up to the cap is achievable, so
    // only the cap itself can be certain
    let intervals: BTreeMap<usize, [f64; 2]> = (0..=cap)
        .map(|c| {
            let pl = (at_most[c].found / norm).clamp(0.0, 1.0);
            let bel = if c == cap {
                let below = if c == 0 { 0.0 } else { at_most[c - 1].found };
                ((at_most[c].found - below) / norm).clamp(0.0, pl)
            } else {
                0.0
            };
            (c, [bel, pl])
        })
        .collect();
    let min_count = intervals
        .iter()
        .find(|(_, v)| v[1] > 0.0)
        .map(|(c, _)| *c)
        .unwrap_or(0);
    Ok(CountResult {
        min_count,
        min_submarines: cap,
        intervals,
        conflict_k: at_most[cap].conflict,
    })
}
