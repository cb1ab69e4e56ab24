use std::collections::HashMap;

use super::hypothesis::HypothesisSpace;
use super::AnalysisError;
use crate::connection::ConnectionGraph;
use crate::evidence::kernel::orthogonal_sum;
use crate::evidence::{Conflict, EvidenceError, FocalSet};

/// A subset of a hypothesis space, stored as a sorted member list when it
/// holds at most 1/32 of the space and as a bitset otherwise. The choice
/// depends only on the set's size, so equal sets always compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HypSet {
    words: u32,
    repr: Repr,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Repr {
    List(Box<[u32]>),
    Bits(Box<[u64]>),
}

fn words_for(universe: usize) -> usize {
    universe.div_ceil(64).max(1)
}

impl HypSet {
    fn from_bits(bits: Vec<u64>) -> Self {
        let words = bits.len() as u32;
        let len: u32 = bits.iter().map(|w| w.count_ones()).sum();
        if (len as usize) <= 2 * bits.len() {
            let mut list = Vec::with_capacity(len as usize);
            for (wi, &w) in bits.iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    list.push(wi as u32 * 64 + w.trailing_zeros());
                    w &= w - 1;
                }
            }
            Self { words, repr: Repr::List(list.into_boxed_slice()) }
        } else {
            Self { words, repr: Repr::Bits(bits.into_boxed_slice()) }
        }
    }

    fn from_list(words: u32, list: Vec<u32>) -> Self {
        if list.len() <= 2 * words as usize {
            Self { words, repr: Repr::List(list.into_boxed_slice()) }
        } else {
            let mut bits = vec![0u64; words as usize];
            for h in list {
                bits[h as usize / 64] |= 1 << (h % 64);
            }
            Self { words, repr: Repr::Bits(bits.into_boxed_slice()) }
        }
    }

    /// The set of hypotheses `h < universe` for which `pred(h)` holds.
    pub fn from_predicate(universe: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mut bits = vec![0u64; words_for(universe)];
        for h in 0..universe {
            if pred(h) {
                bits[h / 64] |= 1 << (h % 64);
            }
        }
        Self::from_bits(bits)
    }

    pub fn full(universe: usize) -> Self {
        Self::from_predicate(universe, |_| true)
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::List(l) => l.len(),
            Repr::Bits(b) => b.iter().map(|w| w.count_ones() as usize).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(&self.repr, Repr::List(l) if l.is_empty())
    }

    pub fn contains(&self, h: usize) -> bool {
        match &self.repr {
            Repr::List(l) => l.binary_search(&(h as u32)).is_ok(),
            Repr::Bits(b) => b.get(h / 64).is_some_and(|w| w >> (h % 64) & 1 == 1),
        }
    }

    /// Members in ascending order.
    pub fn members(&self) -> Box<dyn Iterator<Item = usize> + '_> {
        match &self.repr {
            Repr::List(l) => Box::new(l.iter().map(|&h| h as usize)),
            Repr::Bits(b) => Box::new(b.iter().enumerate().flat_map(|(wi, &w)| {
                let mut w = w;
                std::iter::from_fn(move || {
                    if w == 0 {
                        return None;
                    }
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + bit)
                })
            })),
        }
    }

    /// Storage footprint in 32-bit units.
    fn footprint(&self) -> usize {
        match &self.repr {
            Repr::List(l) => l.len(),
            Repr::Bits(b) => 2 * b.len(),
        }
    }
}

impl FocalSet for HypSet {
    fn meet(&self, other: &Self) -> Self {
        let words = self.words;
        match (&self.repr, &other.repr) {
            (Repr::List(a), Repr::List(b)) => {
                let (mut i, mut j) = (0, 0);
                let mut out = Vec::with_capacity(a.len().min(b.len()));
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            out.push(a[i]);
                            i += 1;
                            j += 1;
                        }
                    }
                }
                Self::from_list(words, out)
            }
            (Repr::List(l), Repr::Bits(_)) => {
                Self::from_list(words, l.iter().copied().filter(|&h| other.contains(h as usize)).collect())
            }
            (Repr::Bits(_), Repr::List(l)) => {
                Self::from_list(words, l.iter().copied().filter(|&h| self.contains(h as usize)).collect())
            }
            (Repr::Bits(a), Repr::Bits(b)) => Self::from_bits(a.iter().zip(b.iter()).map(|(x, y)| x & y).collect()),
        }
    }

    fn is_null(&self) -> bool {
        self.is_empty()
    }

    fn is_subset_of(&self, other: &Self) -> bool {
        self.members().all(|h| other.contains(h))
    }

    fn intersects(&self, other: &Self) -> bool {
        self.members().any(|h| other.contains(h))
    }
}

/// Limits on the size of a joint mass function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    /// Maximum number of focal sets after any combination step.
    pub max_focal: usize,
    /// Maximum total storage of all focal sets, in 32-bit units.
    pub max_footprint: usize,
    /// When over budget, move the mass of the smallest focal sets onto the
    /// whole space instead of failing.
    pub summarise: bool,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_focal: 1_000_000,
            max_footprint: 32 << 20,
            summarise: false,
        }
    }
}

/// One simple-support source over the joint space.
#[derive(Debug, Clone)]
pub struct JointEvidence {
    /// `report` or `from->to`.
    pub source: String,
    pub focal: HypSet,
    pub weight: f64,
}

/// Dempster combination of every report and link source of a connection
/// graph over a hypothesis space.
#[derive(Debug, Clone)]
pub struct JointMass {
    space: HypothesisSpace,
    focal: Vec<(HypSet, f64)>,
    conflict: Conflict,
    summarised: bool,
}

/// The sources in combination order: each report, then the links into it
/// from earlier reports. Sources with zero weight are left out.
pub fn joint_evidence(space: &HypothesisSpace, graph: &ConnectionGraph) -> Vec<JointEvidence> {
    let universe = space.len();
    let words = words_for(universe);
    let mut consecutive: HashMap<(usize, usize), Vec<u64>> = HashMap::new();
    for h in 0..universe {
        space.for_each_link(h, |a, b| {
            consecutive.entry((a, b)).or_insert_with(|| vec![0; words])[h / 64] |= 1 << (h % 64);
        });
    }
    let mut out = Vec::new();
    for i in 0..graph.len() {
        let r = graph.report(i);
        if r.trust_p > 0.0 {
            out.push(JointEvidence {
                source: r.id.clone(),
                focal: HypSet::from_predicate(universe, |h| space.is_true(h, i)),
                weight: r.trust_p,
            });
        }
        let mut preds = graph.predecessors(i).to_vec();
        preds.sort_unstable();
        for l in preds {
            let q = graph.q(l, i);
            if q <= 0.0 {
                continue;
            }
            // a link no hypothesis uses carries no information here
            let Some(bits) = consecutive.get(&(l, i)) else {
                continue;
            };
            let focal = HypSet::from_predicate(universe, |h| bits[h / 64] >> (h % 64) & 1 == 0);
            out.push(JointEvidence {
                source: format!("{}->{}", graph.report(l).id, r.id),
                focal,
                weight: q,
            });
        }
    }
    out
}

impl JointMass {
    pub fn combine(space: HypothesisSpace, graph: &ConnectionGraph, budget: &Budget) -> Result<Self, AnalysisError> {
        if space.is_empty() {
            return Err(AnalysisError::TooComplex("empty hypothesis space".into()));
        }
        let omega = HypSet::full(space.len());
        let mut focal = vec![(omega.clone(), 1.0)];
        let mut conflict = Conflict::NONE;
        let mut summarised = false;
        for ev in joint_evidence(&space, graph) {
            let source = [(ev.focal, ev.weight), (omega.clone(), 1.0 - ev.weight)];
            let sum = orthogonal_sum(&focal, &source).map_err(|e| match e {
                EvidenceError::TotalConflict => AnalysisError::TotalConflict(ev.source.clone()),
                e => AnalysisError::Evidence(e),
            })?;
            conflict = conflict.then(Conflict(sum.conflict));
            focal = sum.focal;
            let footprint: usize = focal.iter().map(|(s, _)| s.footprint()).sum();
            if focal.len() > budget.max_focal || footprint > budget.max_footprint {
                if !budget.summarise {
                    return Err(AnalysisError::TooComplex(format!(
                        "{} focal sets after combining {}",
                        focal.len(),
                        ev.source
                    )));
                }
                focal = summarise(focal, &omega, budget);
                summarised = true;
            }
        }
        Ok(Self { space, focal, conflict, summarised })
    }

    pub fn space(&self) -> &HypothesisSpace {
        &self.space
    }

    pub fn focal(&self) -> &[(HypSet, f64)] {
        &self.focal
    }

    /// Cumulative conflict of the whole combination.
    pub fn conflict(&self) -> Conflict {
        self.conflict
    }

    /// Whether mass was moved to the whole space to stay within budget.
    pub fn summarised(&self) -> bool {
        self.summarised
    }

    /// `[Bel, Pl]` of the set of hypotheses satisfying `pred`.
    pub fn interval_where(&self, mut pred: impl FnMut(usize) -> bool) -> (f64, f64) {
        let (mut bel, mut pl) = (0.0, 0.0);
        for (set, m) in &self.focal {
            let (mut all, mut any) = (true, false);
            for h in set.members() {
                if pred(h) {
                    any = true;
                } else {
                    all = false;
                }
                if any && !all {
                    break;
                }
            }
            if all {
                bel += m;
            }
            if any {
                pl += m;
            }
        }
        clamp_interval(bel, pl)
    }

    /// `[Bel, Pl]` of "chain c is one of the chains" for every chain id.
    pub fn chain_intervals(&self) -> Vec<(f64, f64)> {
        let chains = self.space.chains().len();
        let mut bel = vec![0.0; chains];
        let mut pl = vec![0.0; chains];
        let mut stamp = vec![usize::MAX; chains];
        let mut common: Vec<u32> = Vec::new();
        for (fi, (set, m)) in self.focal.iter().enumerate() {
            let mut first = true;
            for h in set.members() {
                let ids = self.space.chain_ids(h);
                for &c in ids {
                    if stamp[c as usize] != fi {
                        stamp[c as usize] = fi;
                        pl[c as usize] += m;
                    }
                }
                if first {
                    common.clear();
                    common.extend_from_slice(ids);
                    first = false;
                } else if !common.is_empty() {
                    common.retain(|c| ids.binary_search(c).is_ok());
                }
            }
            for &c in &common {
                bel[c as usize] += m;
            }
        }
        bel.into_iter().zip(pl).map(|(b, p)| clamp_interval(b, p)).collect()
    }

    /// `[Bel, Pl]` of "exactly c chains" for `c` in `0..=cap`.
    pub fn count_intervals(&self) -> Vec<(f64, f64)> {
        let cap = self.space.cap();
        let mut bel = vec![0.0; cap + 1];
        let mut pl = vec![0.0; cap + 1];
        let mut seen = vec![false; cap + 1];
        for (set, m) in &self.focal {
            seen.iter_mut().for_each(|s| *s = false);
            let mut distinct = 0;
            let mut only = 0;
            for h in set.members() {
                let c = self.space.chain_count(h);
                if !seen[c] {
                    seen[c] = true;
                    distinct += 1;
                    only = c;
                    pl[c] += m;
                }
            }
            if distinct == 1 {
                bel[only] += m;
            }
        }
        bel.into_iter().zip(pl).map(|(b, p)| clamp_interval(b, p)).collect()
    }
}

fn clamp_interval(bel: f64, pl: f64) -> (f64, f64) {
    let pl = pl.clamp(0.0, 1.0);
    (bel.clamp(0.0, pl), pl)
}

/// Keeps the heaviest focal sets within budget and moves the rest of the
/// mass onto `omega`.
fn summarise(mut focal: Vec<(HypSet, f64)>, omega: &HypSet, budget: &Budget) -> Vec<(HypSet, f64)> {
    focal.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut kept: Vec<(HypSet, f64)> = Vec::new();
    let mut footprint = omega.footprint();
    let mut moved = 0.0;
    for (set, m) in focal {
        if set == *omega {
            moved += m;
            continue;
        }
        let f = set.footprint();
        if kept.len() + 1 < budget.max_focal && footprint + f <= budget.max_footprint {
            footprint += f;
            kept.push((set, m));
        } else {
            moved += m;
        }
    }
    kept.push((omega.clone(), moved));
    kept.sort_by(|a, b| a.0.cmp(&b.0));
    kept
}
