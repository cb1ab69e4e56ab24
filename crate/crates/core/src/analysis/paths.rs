use serde::{Deserialize, Serialize};

use super::dp;
use super::hypothesis::HypothesisSpace;
use super::joint::{Budget, JointMass};
use super::{AnalysisError, AnalysisOptions};
use crate::connection::ConnectionGraph;
use crate::evidence::EvidenceInterval;
use crate::round::ser_export;

/// One ranked chain. An empty chain stands for "every report is false".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub rank: usize,
    pub chain: Vec<String>,
    #[serde(serialize_with = "ser_export")]
    pub support: f64,
    #[serde(serialize_with = "ser_export")]
    pub plausibility: f64,
}

impl PathResult {
    pub fn interval(&self) -> EvidenceInterval {
        EvidenceInterval {
            support: self.support,
            plausibility: self.plausibility,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathsResult {
    pub paths: Vec<PathResult>,
    #[serde(serialize_with = "ser_export")]
    pub conflict_k: f64,
    pub approximate: bool,
    pub n_subs: usize,
    /// Size of the joint hypothesis space that was combined over.
    pub hypotheses: usize,
}

/// Chains ranked by support under the hypothesis "at most `n_subs`
/// submarines". A chain's support is the mass of joint hypotheses in which
/// it is one of the chains; its plausibility is the mass not contradicting
/// that. Graphs above the exact limit, or whose exact combination exceeds
/// the budget, are searched with a beam and flagged approximate.
pub fn ranked_paths(
    graph: &ConnectionGraph,
    n_subs: usize,
    top_n: Option<usize>,
    opts: &AnalysisOptions,
) -> Result<PathsResult, AnalysisError> {
    if n_subs < 1 {
        return Err(AnalysisError::InvalidParameter {
            name: "n_subs".into(),
            message: "must be at least 1".into(),
        });
    }
    if top_n == Some(0) {
        return Err(AnalysisError::InvalidParameter {
            name: "top_n".into(),
            message: "must be at least 1".into(),
        });
    }
    let cap = n_subs.min(graph.len().max(1));
    let exact = if graph.len() > opts.exact_limit {
        None
    } else {
        match exact_paths(graph, cap, opts) {
            Ok(r) => Some(r),
            Err(AnalysisError::TooComplex(_)) => None,
            Err(e) => return Err(e),
        }
    };
    let (mut paths, conflict_k, hypotheses, approximate) = match exact {
        Some((paths, k, h)) => (paths, k, h, false),
        None => {
            let budget = Budget {
                max_focal: opts.beam_focal,
                summarise: true,
                ..opts.budget
            };
            let jm = JointMass::combine(HypothesisSpace::beam(graph, cap, opts.beam_width)?, graph, &budget)?;
            let mut paths: Vec<PathResult> = jm
                .chain_intervals()
                .into_iter()
                .zip(jm.space().chains())
                .map(|((support, plausibility), chain)| result(graph, chain.iter().map(|&i| i as usize), support, plausibility))
                .collect();
            if let Some(h0) = jm.space().all_false() {
                let (support, plausibility) = jm.interval_where(|h| h == h0);
                paths.push(result(graph, std::iter::empty(), support, plausibility));
            }
            (paths, jm.conflict().value(), jm.space().len(), true)
        }
    };
    paths.sort_by(|a, b| {
        b.support
            .total_cmp(&a.support)
            .then(b.plausibility.total_cmp(&a.plausibility))
            .then_with(|| a.chain.cmp(&b.chain))
    });
    if let Some(n) = top_n {
        paths.truncate(n);
    }
    for (i, p) in paths.iter_mut().enumerate() {
        p.rank = i + 1;
    }
    Ok(PathsResult {
        paths,
        conflict_k,
        approximate,
        n_subs,
        hypotheses,
    })
}

fn result(graph: &ConnectionGraph, chain: impl Iterator<Item = usize>, support: f64, plausibility: f64) -> PathResult {
    PathResult {
        rank: 0,
        chain: chain.map(|i| graph.report(i).id.clone()).collect(),
        support,
        plausibility,
    }
}

/// Every path in the graph, each a candidate chain, in depth-first order.
fn all_chains(graph: &ConnectionGraph, limit: usize) -> Result<Vec<Vec<usize>>, AnalysisError> {
    fn walk(graph: &ConnectionGraph, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>, limit: usize) -> bool {
        out.push(path.clone());
        if out.len() > limit {
            return false;
        }
        let tail = *path.last().expect("non-empty path");
        for &j in graph.successors(tail) {
            path.push(j);
            let ok = walk(graph, path, out, limit);
            path.pop();
            if !ok {
                return false;
            }
        }
        true
    }
    let mut out = Vec::new();
    for i in 0..graph.len() {
        if !walk(graph, &mut vec![i], &mut out, limit) {
            return Err(AnalysisError::TooComplex(format!("more than {limit} candidate chains")));
        }
    }
    Ok(out)
}

/// Exact support and plausibility of every candidate chain and of the
/// all-false hypothesis. A chain is plausible when its links stand and the
/// other reports fit in one chain fewer; it is supported unless some
/// compatible hypothesis does without it.
fn exact_paths(graph: &ConnectionGraph, cap: usize, opts: &AnalysisOptions) -> Result<(Vec<PathResult>, f64, usize), AnalysisError> {
    if graph.is_empty() {
        // nothing to explain, so no chain to rank
        return Ok((Vec::new(), 0.0, 1));
    }
    let max_states = opts.budget.max_focal;
    let chains = all_chains(graph, opts.max_hypotheses)?;
    let total = dp::existence(graph, cap, 0, max_states, &dp::Any)?;
    let norm = total.found;
    if norm <= 0.0 {
        return Err(AnalysisError::TotalConflict("all reports".into()));
    }
    let mut paths = Vec::with_capacity(chains.len() + 1);
    for chain in &chains {
        let links: f64 = chain.windows(2).map(|w| 1.0 - graph.q(w[0], w[1])).product();
        let members = chain.iter().fold(0, |m, &i| m | 1 << i);
        let rest = dp::existence(graph, cap - 1, members, max_states, &dp::Any)?.found;
        let lacking = dp::existence(graph, cap, 0, max_states, &dp::LacksChain::new(graph.len(), chain))?.found;
        let plausibility = (links * rest / norm).clamp(0.0, 1.0);
        let support = ((norm - lacking) / norm).clamp(0.0, plausibility);
        paths.push(result(graph, chain.iter().copied(), support, plausibility));
    }
    let none_fired: f64 = graph.reports().iter().map(|r| 1.0 - r.trust_p).product();
    paths.push(result(graph, std::iter::empty(), 0.0, (none_fired / norm).clamp(0.0, 1.0)));
    let hypotheses = usize::try_from(dp::hypothesis_count(graph, cap)).unwrap_or(usize::MAX);
    Ok((paths, total.conflict, hypotheses))
}
