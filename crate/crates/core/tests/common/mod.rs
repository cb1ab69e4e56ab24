//! Independent reference implementations for the analysis tests.
//!
//! Everything here works on explicit hypothesis lists and bitsets so it
//! shares no code with the library's dynamic programs.

#![allow(dead_code)]

use std::collections::HashMap;

use evtrack_core::connection::ConnectionGraph;
use evtrack_core::geometry::Point;
use evtrack_core::scenario::Report;
use rand::Rng;

/// One joint hypothesis: which reports are true and how the true ones are
/// split into time-ordered chains.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub truth: u32,
    pub chains: Vec<Vec<usize>>,
    /// Indices into the oracle's link list of the links the chains use.
    pub links: u64,
}

/// Bitset over hypothesis indices.
type Set = Vec<u64>;

fn set_with(n: usize, pred: impl Fn(usize) -> bool) -> Set {
    let mut s = vec![0u64; n.div_ceil(64)];
    for h in 0..n {
        if pred(h) {
            s[h / 64] |= 1 << (h % 64);
        }
    }
    s
}

fn intersect(a: &Set, b: &Set) -> Set {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn is_empty(a: &Set) -> bool {
    a.iter().all(|w| *w == 0)
}

fn subset_of(a: &Set, b: &Set) -> bool {
    a.iter().zip(b).all(|(x, y)| x & !y == 0)
}

/// Every hypothesis with at most `cap` chains whose consecutive reports are
/// joined by an edge of `graph`.
pub fn hypotheses(graph: &ConnectionGraph, cap: usize) -> (Vec<Hypothesis>, Vec<(usize, usize)>) {
    let n = graph.len();
    let links: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| graph.has_edge(i, j))
        .collect();
    let link_index: HashMap<(usize, usize), usize> = links.iter().enumerate().map(|(k, &l)| (l, k)).collect();
    let mut out = Vec::new();
    for truth in 0u32..(1 << n) {
        let mut chains: Vec<Vec<usize>> = Vec::new();
        split(graph, truth, 0, cap, &mut chains, &mut |chains| {
            let mut used = 0u64;
            for c in chains {
                for w in c.windows(2) {
                    used |= 1 << link_index[&(w[0], w[1])];
                }
            }
            out.push(Hypothesis {
                truth,
                chains: chains.to_vec(),
                links: used,
            });
        });
    }
    (out, links)
}

fn split(
    graph: &ConnectionGraph,
    truth: u32,
    i: usize,
    cap: usize,
    chains: &mut Vec<Vec<usize>>,
    emit: &mut dyn FnMut(&[Vec<usize>]),
) {
    if i == graph.len() {
        emit(chains);
        return;
    }
    if truth >> i & 1 == 0 {
        split(graph, truth, i + 1, cap, chains, emit);
        return;
    }
    for c in 0..chains.len() {
        if graph.has_edge(*chains[c].last().unwrap(), i) {
            chains[c].push(i);
            split(graph, truth, i + 1, cap, chains, emit);
            chains[c].pop();
        }
    }
    if chains.len() < cap {
        chains.push(vec![i]);
        split(graph, truth, i + 1, cap, chains, emit);
        chains.pop();
    }
}

/// Dempster combination of all report and link evidence over an explicit
/// hypothesis list, with focal sets merged by value.
pub struct JointOracle {
    pub hyps: Vec<Hypothesis>,
    focal: Vec<(Set, f64)>,
    pub conflict: f64,
}

impl JointOracle {
    pub fn new(graph: &ConnectionGraph, cap: usize) -> Self {
        let (hyps, links) = hypotheses(graph, cap);
        let n = hyps.len();
        let mut sources: Vec<(Set, f64)> = Vec::new();
        for (i, r) in graph.reports().iter().enumerate() {
            sources.push((set_with(n, |h| hyps[h].truth >> i & 1 == 1), r.trust_p));
        }
        for (k, &(i, j)) in links.iter().enumerate() {
            sources.push((set_with(n, |h| hyps[h].links >> k & 1 == 0), graph.q(i, j)));
        }
        let mut focal: HashMap<Set, f64> = HashMap::new();
        focal.insert(set_with(n, |_| true), 1.0);
        let mut conflict = 0.0;
        for (a, m) in sources {
            if m == 0.0 {
                continue;
            }
            let mut next: HashMap<Set, f64> = HashMap::new();
            for (f, w) in focal {
                let meet = intersect(&f, &a);
                if is_empty(&meet) {
                    conflict += w * m;
                } else {
                    *next.entry(meet).or_insert(0.0) += w * m;
                }
                if m < 1.0 {
                    *next.entry(f).or_insert(0.0) += w * (1.0 - m);
                }
            }
            focal = next;
        }
        Self {
            hyps,
            focal: focal.into_iter().collect(),
            conflict,
        }
    }

    pub fn norm(&self) -> f64 {
        self.focal.iter().map(|(_, w)| w).sum()
    }

    /// `[belief, plausibility]` of the hypotheses satisfying `pred`.
    pub fn interval(&self, pred: impl Fn(&Hypothesis) -> bool) -> [f64; 2] {
        let target = set_with(self.hyps.len(), |h| pred(&self.hyps[h]));
        let norm = self.norm();
        let mut bel = 0.0;
        let mut pl = 0.0;
        for (f, w) in &self.focal {
            if subset_of(f, &target) {
                bel += w;
            }
            if !is_empty(&intersect(f, &target)) {
                pl += w;
            }
        }
        [bel / norm, pl / norm]
    }

    pub fn chain_interval(&self, chain: &[usize]) -> [f64; 2] {
        if chain.is_empty() {
            self.interval(|h| h.truth == 0)
        } else {
            self.interval(|h| h.chains.iter().any(|c| c == chain))
        }
    }

    /// Every chain that occurs in some hypothesis.
    pub fn chains(&self) -> Vec<Vec<usize>> {
        let mut all: Vec<Vec<usize>> = self.hyps.iter().flat_map(|h| h.chains.iter().cloned()).collect();
        all.sort();
        all.dedup();
        all
    }
}

/// Fewest chains covering every report, by exhaustive search over all
/// assignments of reports to chains.
pub fn min_cover(n: usize, edge: &dyn Fn(usize, usize) -> bool) -> usize {
    fn go(i: usize, n: usize, edge: &dyn Fn(usize, usize) -> bool, tails: &mut Vec<usize>, best: &mut usize) {
        if tails.len() >= *best {
            return;
        }
        if i == n {
            *best = tails.len();
            return;
        }
        for c in 0..tails.len() {
            let t = tails[c];
            if edge(t, i) {
                tails[c] = i;
                go(i + 1, n, edge, tails, best);
                tails[c] = t;
            }
        }
        tails.push(i);
        go(i + 1, n, edge, tails, best);
        tails.pop();
    }
    let mut best = n + 1;
    go(0, n, edge, &mut Vec::new(), &mut best);
    best.min(n)
}

/// A trust value that is sometimes exactly 0 or 1.
pub fn trust(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen(),
    }
}

/// Random graph over `n` reports one second apart; each forward pair is
/// linked with probability `density`, with `q` sometimes exactly 0.
pub fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> ConnectionGraph {
    let reports: Vec<Report> = (0..n)
        .map(|i| Report::new(format!("r{i}"), i as i64 * 1000, Point::new(0.0, 0.0), trust(rng)))
        .collect();
    let mut links = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                let q = if rng.gen_range(0..6) == 0 { 0.0 } else { rng.gen_range(0.0..1.0) };
                links.push((i, j, q));
            }
        }
    }
    ConnectionGraph::from_links(reports, &links).unwrap()
}
