//! Exact combination by dynamic programming over source outcomes.
//!
//! Every report and link source is a simple support function, so each
//! combination of fired and unfired sources has a product weight and a set
//! of compatible joint hypotheses. The queries the analyses need reduce to
//! the probability that some compatible hypothesis of a given kind exists:
//!
//! * the conflict is the probability that none exists at all;
//! * for a fixed outcome the achievable chain counts form an interval from
//!   the fewest chains up to the cap, because a chain can always be split
//!   or a singleton added while under the cap, so count intervals follow
//!   from "at most c chains" existence;
//! * a chain is contained in some compatible hypothesis iff its own links
//!   are unfired and the remaining reports can be covered by one chain
//!   fewer, and it is in all of them iff no compatible hypothesis lacks it.
//!
//! Reports are visited in time order. A partial hypothesis is summarised by
//! the tails of its chains that can still be extended, the number of chains
//! that cannot, and a small tag tracking the query. An outcome prefix is
//! summarised by the partial hypotheses still compatible with it; for
//! existence only the non-dominated ones matter, and prefixes with equal
//! summaries are merged.

use std::collections::HashMap;

use super::AnalysisError;
use crate::connection::ConnectionGraph;

/// Chain tails of a partial hypothesis, one bit per report.
pub(crate) type Tails = u64;

/// How report `i` enters a partial hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Move {
    /// The report is false.
    Skip,
    /// The report extends the chain ending at this report.
    Extend(usize),
    /// The report starts a new chain.
    Start,
}

/// The kind of hypothesis whose existence is asked for, as a tag carried
/// by each partial hypothesis.
pub(crate) trait Goal {
    fn initial(&self) -> u8;
    fn step(&self, tag: u8, i: usize, mv: Move) -> u8;
    fn accepts(&self, tag: u8) -> bool;
    /// Whether a member can still reach an accepted end after report `i`
    /// was placed, given its open tails.
    fn alive(&self, _tag: u8, _open: Tails, _i: usize) -> bool {
        true
    }
    /// Whether a member tagged `a` reaches an accepted end whenever one
    /// tagged `b` does, given the same moves.
    fn covers(&self, a: u8, b: u8) -> bool;
}

/// Any hypothesis.
pub(crate) struct Any;

impl Goal for Any {
    fn initial(&self) -> u8 {
        0
    }

    fn step(&self, _: u8, _: usize, _: Move) -> u8 {
        0
    }

    fn accepts(&self, _: u8) -> bool {
        true
    }

    fn covers(&self, _: u8, _: u8) -> bool {
        true
    }
}

const INTACT: u8 = 0;
const BROKEN: u8 = 1;

/// Hypotheses in which `chain` is not one of the chains.
pub(crate) struct LacksChain {
    position: Vec<Option<usize>>,
    chain: Vec<usize>,
}

impl LacksChain {
    pub fn new(n: usize, chain: &[usize]) -> Self {
        let mut position = vec![None; n];
        for (k, &i) in chain.iter().enumerate() {
            position[i] = Some(k);
        }
        Self {
            position,
            chain: chain.to_vec(),
        }
    }
}

impl Goal for LacksChain {
    fn initial(&self) -> u8 {
        INTACT
    }

    fn step(&self, tag: u8, i: usize, mv: Move) -> u8 {
        if tag == BROKEN {
            return BROKEN;
        }
        let intact = match (self.position[i], mv) {
            (Some(0), Move::Start) => true,
            (Some(k), Move::Extend(t)) => k > 0 && self.chain[k - 1] == t,
            (Some(_), _) => false,
            (None, Move::Extend(t)) => self.position[t].is_none(),
            (None, _) => true,
        };
        if intact {
            INTACT
        } else {
            BROKEN
        }
    }

    fn accepts(&self, tag: u8) -> bool {
        tag == BROKEN
    }

    /// An intact chain whose last report is closed stays intact.
    fn alive(&self, tag: u8, open: Tails, i: usize) -> bool {
        let last = *self.chain.last().expect("non-empty chain");
        tag == BROKEN || i < last || open >> last & 1 == 1
    }

    fn covers(&self, a: u8, b: u8) -> bool {
        a == BROKEN || a == b
    }
}

/// Open tails, closed chain count and tag.
type Member = (Tails, u8, u8);

/// Probability masses of one existence pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Existence {
    /// Outcomes with an accepted compatible hypothesis.
    pub found: f64,
    /// Outcomes with no compatible hypothesis that could be accepted; for
    /// [`Any`] this is the conflict.
    pub conflict: f64,
}

/// `closes_after[i]`: tails that can no longer be extended once report `i`
/// has been placed.
fn closing_masks(graph: &ConnectionGraph) -> Vec<Tails> {
    let n = graph.len();
    let mut out = vec![0; n];
    for t in 0..n {
        let last = graph.successors(t).iter().copied().max().unwrap_or(t).max(t);
        out[last] |= 1 << t;
    }
    out
}

/// Probability that the fired sources leave some hypothesis of the kind
/// `goal` asks for, over hypotheses with at most `cap` chains on the
/// reports outside `excluded`. Excluded reports and their links are left
/// out entirely.
pub(crate) fn existence(
    graph: &ConnectionGraph,
    cap: usize,
    excluded: Tails,
    max_states: usize,
    goal: &impl Goal,
) -> Result<Existence, AnalysisError> {
    let n = graph.len();
    if n > Tails::BITS as usize {
        return Err(AnalysisError::TooComplex(format!("{n} reports for exact combination")));
    }
    if cap > u8::MAX as usize {
        return Err(AnalysisError::TooManySubmarines(cap));
    }
    let closes_after = closing_masks(graph);
    let mut states: HashMap<Vec<Member>, f64> = HashMap::from([(vec![(0, 0, goal.initial())], 1.0)]);
    let mut conflict = 0.0;
    for i in 0..n {
        if excluded >> i & 1 == 1 {
            continue;
        }
        let p = graph.report(i).trust_p;
        let mut next: HashMap<Vec<Member>, f64> = HashMap::with_capacity(states.len() * 2);
        let mut ordered: Vec<(Vec<Member>, f64)> = states.into_iter().collect();
        ordered.sort_by(|a, b| a.0.cmp(&b.0));
        for (family, w) in ordered {
            let live = family.iter().fold(0, |a, (t, _, _)| a | t);
            let mut sure: Tails = 0;
            let mut random: Vec<(usize, f64)> = Vec::new();
            for &t in graph.predecessors(i) {
                if live >> t & 1 == 1 {
                    let q = graph.q(t, i);
                    if q <= 0.0 {
                        sure |= 1 << t;
                    } else {
                        random.push((t, q));
                    }
                }
            }
            if random.len() > 24 {
                return Err(AnalysisError::TooComplex(format!("{} uncertain links into one report", random.len())));
            }
            let random_mask = random.iter().fold(0, |m, &(t, _)| m | 1 << t);
            for (forced, pf) in [(true, p), (false, 1.0 - p)] {
                if pf == 0.0 {
                    continue;
                }
                let cands = candidates(&family, i, forced, sure, random_mask, cap, closes_after[i], goal);
                for pattern in 0u32..(1 << random.len()) {
                    let mut allowed: Tails = 0;
                    let mut pw = w * pf;
                    for (b, &(t, q)) in random.iter().enumerate() {
                        if pattern >> b & 1 == 1 {
                            allowed |= 1 << t;
                            pw *= 1.0 - q;
                        } else {
                            pw *= q;
                        }
                    }
                    if pw == 0.0 {
                        continue;
                    }
                    let succ: Vec<Member> = cands
                        .iter()
                        .filter(|c| (c.always || allowed & c.needs != 0) && allowed & c.beaten_by == 0)
                        .map(|c| c.member)
                        .collect();
                    if succ.is_empty() {
                        conflict += pw;
                    } else {
                        *next.entry(succ).or_insert(0.0) += pw;
                    }
                }
            }
        }
        if next.len() > max_states {
            return Err(AnalysisError::TooComplex(format!("{} states after {}", next.len(), graph.report(i).id)));
        }
        states = next;
    }
    let mut found = 0.0;
    let mut ordered: Vec<(Vec<Member>, f64)> = states.into_iter().collect();
    ordered.sort_by(|a, b| a.0.cmp(&b.0));
    for (family, w) in ordered {
        if family.iter().any(|&(_, _, tag)| goal.accepts(tag)) {
            found += w;
        }
    }
    Ok(Existence { found, conflict })
}

/// A possible successor member, present when it is `always` reachable or
/// one of the uncertain links in `needs` is allowed, and kept unless a link
/// in `beaten_by` is allowed, which brings in a member dominating it.
struct Candidate {
    member: Member,
    always: bool,
    needs: Tails,
    beaten_by: Tails,
}

/// Successor candidates after report `i`: each member leaves it false
/// (unless forced), extends a chain whose tail links to it, or starts a
/// chain while under `cap`. Links in `sure` cannot be cut; those in
/// `random` are decided per outcome. Tails in `closing` are then counted as
/// closed and dominated candidates resolved.
#[allow(clippy::too_many_arguments)]
fn candidates(
    family: &[Member],
    i: usize,
    forced: bool,
    sure: Tails,
    random: Tails,
    cap: usize,
    closing: Tails,
    goal: &impl Goal,
) -> Vec<Candidate> {
    let bit: Tails = 1 << i;
    let mut raw: Vec<(Member, Option<usize>)> = Vec::with_capacity(family.len() * 2);
    let mut push = |tails: Tails, closed: u8, tag: u8, link: Option<usize>| {
        let done = tails & closing;
        let m = (tails & !done, closed + done.count_ones() as u8, tag);
        if goal.alive(m.2, m.0, i) {
            raw.push((m, link));
        }
    };
    for &(tails, closed, tag) in family {
        if !forced {
            push(tails, closed, goal.step(tag, i, Move::Skip), None);
        }
        let mut ext = tails & (sure | random);
        while ext != 0 {
            let t = ext & ext.wrapping_neg();
            let from = t.trailing_zeros() as usize;
            let link = (t & sure == 0).then_some(from);
            push((tails & !t) | bit, closed, goal.step(tag, i, Move::Extend(from)), link);
            ext &= ext - 1;
        }
        if tails.count_ones() as usize + (closed as usize) < cap {
            push(tails | bit, closed, goal.step(tag, i, Move::Start), None);
        }
    }
    raw.sort_unstable();
    let mut cands: Vec<Candidate> = Vec::with_capacity(raw.len());
    for (m, link) in raw {
        match cands.last_mut() {
            Some(c) if c.member == m => match link {
                Some(t) => c.needs |= 1 << t,
                None => c.always = true,
            },
            _ => cands.push(Candidate {
                member: m,
                always: link.is_none(),
                needs: link.map_or(0, |t| 1 << t),
                beaten_by: 0,
            }),
        }
    }
    let chains = |m: &Member| m.0.count_ones() + m.1 as u32;
    let dominates = |a: &Member, b: &Member| a != b && a.0 & b.0 == b.0 && chains(a) <= chains(b) && goal.covers(a.2, b.2);
    let mut out = Vec::with_capacity(cands.len());
    for (x, c) in cands.iter().enumerate() {
        let mut beaten_by = 0;
        let mut always_beaten = false;
        for (y, d) in cands.iter().enumerate() {
            if x != y && dominates(&d.member, &c.member) {
                always_beaten |= d.always;
                beaten_by |= d.needs;
            }
        }
        if !always_beaten {
            out.push(Candidate {
                member: c.member,
                always: c.always,
                needs: c.needs,
                beaten_by,
            });
        }
    }
    out
}

/// Number of joint hypotheses with at most `cap` chains.
pub(crate) fn hypothesis_count(graph: &ConnectionGraph, cap: usize) -> u128 {
    let mut states: HashMap<Tails, u128> = HashMap::from([(0, 1)]);
    for i in 0..graph.len() {
        let bit: Tails = 1 << i;
        let mut preds: Tails = 0;
        for &t in graph.predecessors(i) {
            preds |= 1 << t;
        }
        let mut next: HashMap<Tails, u128> = HashMap::new();
        for (tails, c) in states {
            *next.entry(tails).or_default() += c;
            let mut ext = tails & preds;
            while ext != 0 {
                let t = ext & ext.wrapping_neg();
                *next.entry((tails & !t) | bit).or_default() += c;
                ext &= ext - 1;
            }
            if (tails.count_ones() as usize) < cap {
                *next.entry(tails | bit).or_default() += c;
            }
        }
        states = next;
    }
    states.values().sum()
}
