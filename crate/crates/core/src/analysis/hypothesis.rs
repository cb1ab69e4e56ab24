use std::collections::HashMap;

use super::AnalysisError;
use crate::connection::ConnectionGraph;

/// Label of a report that is false in a hypothesis.
pub const FALSE: u8 = 0;

/// A set of joint hypotheses over the reports of a connection graph.
///
/// Each hypothesis marks every report true or false and partitions the true
/// reports into time-ordered chains, one per submarine, where consecutive
/// chain members are joined by a graph edge. Chains are labelled `1..` in
/// order of their first report, so every hypothesis has one canonical
/// labelling.
#[derive(Debug, Clone)]
pub struct HypothesisSpace {
    n: usize,
    cap: usize,
    labels: Vec<u8>,
    chains: Vec<Vec<u16>>,
    chain_offsets: Vec<u32>,
    chain_ids: Vec<u32>,
}

struct Builder {
    n: usize,
    labels: Vec<u8>,
    chains: Vec<Vec<u16>>,
    chain_index: HashMap<Vec<u16>, u32>,
    chain_offsets: Vec<u32>,
    chain_ids: Vec<u32>,
}

impl Builder {
    fn new(n: usize) -> Self {
        Self {
            n,
            labels: Vec::new(),
            chains: Vec::new(),
            chain_index: HashMap::new(),
            chain_offsets: vec![0],
            chain_ids: Vec::new(),
        }
    }

    fn push(&mut self, labels: &[u8]) {
        self.labels.extend_from_slice(labels);
        let count = labels.iter().copied().max().unwrap_or(FALSE) as usize;
        let mut members: Vec<Vec<u16>> = vec![Vec::new(); count];
        for (i, &l) in labels.iter().enumerate() {
            if l != FALSE {
                members[l as usize - 1].push(i as u16);
            }
        }
        let mut ids: Vec<u32> = members
            .into_iter()
            .map(|c| {
                let next = self.chains.len() as u32;
                *self.chain_index.entry(c.clone()).or_insert_with(|| {
                    self.chains.push(c);
                    next
                })
            })
            .collect();
        ids.sort_unstable();
        self.chain_ids.extend(ids);
        self.chain_offsets.push(self.chain_ids.len() as u32);
    }

    fn len(&self) -> usize {
        self.chain_offsets.len() - 1
    }

    fn finish(self, cap: usize) -> HypothesisSpace {
        HypothesisSpace {
            n: self.n,
            cap,
            labels: self.labels,
            chains: self.chains,
            chain_offsets: self.chain_offsets,
            chain_ids: self.chain_ids,
        }
    }
}

fn check_cap(cap: usize) -> Result<(), AnalysisError> {
    if cap > u8::MAX as usize {
        return Err(AnalysisError::TooManySubmarines(cap));
    }
    Ok(())
}

impl HypothesisSpace {
    /// Every joint hypothesis with at most `cap` chains. Fails once more than
    /// `max_hypotheses` exist.
    pub fn enumerate(graph: &ConnectionGraph, cap: usize, max_hypotheses: usize) -> Result<Self, AnalysisError> {
        check_cap(cap)?;
        let n = graph.len();
        let mut b = Builder::new(n);
        let mut labels = vec![FALSE; n];
        let mut tails: Vec<u16> = Vec::new();
        dfs(graph, cap, 0, &mut labels, &mut tails, &mut b, max_hypotheses)?;
        Ok(b.finish(cap))
    }

    /// The `width` hypotheses with the highest singleton plausibility found
    /// by a beam search over reports in time order. A partial hypothesis
    /// scores the product of `1 - p` over its false reports and `1 - q` over
    /// its links; ties are broken by labelling.
    pub fn beam(graph: &ConnectionGraph, cap: usize, width: usize) -> Result<Self, AnalysisError> {
        check_cap(cap)?;
        if width == 0 {
            return Err(AnalysisError::InvalidParameter {
                name: "beam".into(),
                message: "beam width must be at least 1".into(),
            });
        }
        let n = graph.len();
        struct Partial {
            labels: Vec<u8>,
            tails: Vec<u16>,
            score: f64,
        }
        let mut beam = vec![Partial {
            labels: Vec::with_capacity(n),
            tails: Vec::new(),
            score: 0.0,
        }];
        for i in 0..n {
            let p = graph.report(i).trust_p;
            let mut next: Vec<Partial> = Vec::with_capacity(beam.len() * 3);
            for part in &beam {
                if p < 1.0 {
                    let mut labels = part.labels.clone();
                    labels.push(FALSE);
                    next.push(Partial {
                        labels,
                        tails: part.tails.clone(),
                        score: part.score + (1.0 - p).ln(),
                    });
                }
                for (k, &t) in part.tails.iter().enumerate() {
                    if graph.has_edge(t as usize, i) {
                        let mut labels = part.labels.clone();
                        labels.push(k as u8 + 1);
                        let mut tails = part.tails.clone();
                        tails[k] = i as u16;
                        next.push(Partial {
                            labels,
                            tails,
                            score: part.score + (1.0 - graph.q(t as usize, i)).ln(),
                        });
                    }
                }
                if part.tails.len() < cap {
                    let mut labels = part.labels.clone();
                    labels.push(part.tails.len() as u8 + 1);
                    let mut tails = part.tails.clone();
                    tails.push(i as u16);
                    next.push(Partial {
                        labels,
                        tails,
                        score: part.score,
                    });
                }
            }
            next.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.labels.cmp(&b.labels)));
            next.truncate(width);
            beam = next;
        }
        beam.sort_by(|a, b| a.labels.cmp(&b.labels));
        let mut b = Builder::new(n);
        for part in &beam {
            b.push(&part.labels);
        }
        Ok(b.finish(cap))
    }

    /// Number of hypotheses.
    pub fn len(&self) -> usize {
        self.chain_offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn report_count(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn labels(&self, h: usize) -> &[u8] {
        &self.labels[h * self.n..(h + 1) * self.n]
    }

    pub fn is_true(&self, h: usize, report: usize) -> bool {
        self.labels[h * self.n + report] != FALSE
    }

    /// Ids of the chains of hypothesis `h`, ascending.
    pub fn chain_ids(&self, h: usize) -> &[u32] {
        &self.chain_ids[self.chain_offsets[h] as usize..self.chain_offsets[h + 1] as usize]
    }

    pub fn chain_count(&self, h: usize) -> usize {
        self.chain_ids(h).len()
    }

    /// All distinct chains, as report indices in time order.
    pub fn chains(&self) -> &[Vec<u16>] {
        &self.chains
    }

    /// Index of the hypothesis in which every report is false, if present.
    pub fn all_false(&self) -> Option<usize> {
        (0..self.len()).find(|&h| self.chain_count(h) == 0)
    }

    /// Calls `f(a, b)` for every consecutive chain pair of hypothesis `h`.
    pub fn for_each_link(&self, h: usize, mut f: impl FnMut(usize, usize)) {
        for &c in self.chain_ids(h) {
            for w in self.chains[c as usize].windows(2) {
                f(w[0] as usize, w[1] as usize);
            }
        }
    }
}

fn dfs(
    graph: &ConnectionGraph,
    cap: usize,
    i: usize,
    labels: &mut Vec<u8>,
    tails: &mut Vec<u16>,
    out: &mut Builder,
    max: usize,
) -> Result<(), AnalysisError> {
    if i == labels.len() {
        if out.len() >= max {
            return Err(AnalysisError::TooComplex(format!(
                "more than {max} joint hypotheses"
            )));
        }
        out.push(labels);
        return Ok(());
    }
    labels[i] = FALSE;
    dfs(graph, cap, i + 1, labels, tails, out, max)?;
    for k in 0..tails.len() {
        let t = tails[k];
        if graph.has_edge(t as usize, i) {
            tails[k] = i as u16;
            labels[i] = k as u8 + 1;
            dfs(graph, cap, i + 1, labels, tails, out, max)?;
            tails[k] = t;
        }
    }
    if tails.len() < cap {
        tails.push(i as u16);
        labels[i] = tails.len() as u8;
        dfs(graph, cap, i + 1, labels, tails, out, max)?;
        tails.pop();
    }
    labels[i] = FALSE;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::scenario::Report;

    fn graph(n: usize, links: &[(usize, usize, f64)]) -> ConnectionGraph {
        let reports = (0..n)
            .map(|i| Report::new(format!("r{i}"), i as i64 * 1000, Point::new(0.0, 0.0), 0.5))
            .collect();
        ConnectionGraph::from_links(reports, links).unwrap()
    }

    #[test]
    fn two_reports_one_submarine() {
        let g = graph(2, &[(0, 1, 0.5)]);
        let s = HypothesisSpace::enumerate(&g, 1, 100).unwrap();
        // all false, r1 only, r2 only, r1 -> r2
        assert_eq!(s.len(), 4);
        let labels: Vec<&[u8]> = (0..s.len()).map(|h| s.labels(h)).collect();
        assert_eq!(labels, [&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
        assert_eq!(s.all_false(), Some(0));
        assert_eq!(s.chains().len(), 3);
    }

    #[test]
    fn no_edges_means_singleton_chains() {
        let g = graph(3, &[]);
        assert_eq!(HypothesisSpace::enumerate(&g, 3, 100).unwrap().len(), 8);
        // at most one submarine: at most one true report
        assert_eq!(HypothesisSpace::enumerate(&g, 1, 100).unwrap().len(), 4);
    }

    #[test]
    fn complete_dag_counts_set_partitions() {
        let n = 5;
        let links: Vec<(usize, usize, f64)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 0.5)))
            .collect();
        let g = graph(n, &links);
        // Bell(n + 1) partitions of the reports plus a "false" block
        assert_eq!(HypothesisSpace::enumerate(&g, n, 10_000).unwrap().len(), 203);
        assert!(HypothesisSpace::enumerate(&g, n, 100).is_err());
    }

    #[test]
    fn links_follow_chains() {
        let g = graph(3, &[(0, 1, 0.5), (1, 2, 0.5), (0, 2, 0.5)]);
        let s = HypothesisSpace::enumerate(&g, 1, 100).unwrap();
        let h = (0..s.len()).find(|&h| s.labels(h) == [1, 1, 1]).unwrap();
        let mut links = Vec::new();
        s.for_each_link(h, |a, b| links.push((a, b)));
        assert_eq!(links, [(0, 1), (1, 2)]);
    }

    #[test]
    fn wide_beam_finds_everything() {
        let g = graph(4, &[(0, 1, 0.5), (1, 2, 0.2), (0, 3, 0.1), (2, 3, 0.7)]);
        let exact = HypothesisSpace::enumerate(&g, 2, 1000).unwrap();
        let beam = HypothesisSpace::beam(&g, 2, 1000).unwrap();
        assert_eq!(exact.len(), beam.len());
        for h in 0..exact.len() {
            assert_eq!(exact.labels(h), beam.labels(h));
        }
        let narrow = HypothesisSpace::beam(&g, 2, 3).unwrap();
        assert_eq!(narrow.len(), 3);
    }
}
