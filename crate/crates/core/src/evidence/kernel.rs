//! Set-representation-agnostic Dempster combination.
//!
//! Both the small-frame [`MassFunction`](super::MassFunction) and the joint
//! hypothesis spaces of the analysis layer (whose frames are far larger than
//! 30 elements) combine through [`orthogonal_sum`].

use std::cmp::Ordering;
use std::hash::Hash;

use super::EvidenceError;

/// Masses below this value are dropped after a combination and the
/// remainder renormalised.
pub const PRUNE_BELOW: f64 = 1e-15;

/// A subset type a mass function can be defined over.
pub trait FocalSet: Clone + Eq + Ord + Hash {
    fn meet(&self, other: &Self) -> Self;
    fn is_null(&self) -> bool;
    fn is_subset_of(&self, other: &Self) -> bool;
    fn intersects(&self, other: &Self) -> bool;
}

impl FocalSet for super::Subset {
    fn meet(&self, other: &Self) -> Self {
        self.intersection(*other)
    }
    fn is_null(&self) -> bool {
        self.is_empty()
    }
    fn is_subset_of(&self, other: &Self) -> bool {
        super::Subset::is_subset_of(*self, *other)
    }
    fn intersects(&self, other: &Self) -> bool {
        super::Subset::intersects(*self, *other)
    }
}

/// Normalised output of one orthogonal combination.
#[derive(Debug, Clone)]
pub struct OrthogonalSum<S> {
    /// Focal elements sorted by set, masses summing to one.
    pub focal: Vec<(S, f64)>,
    /// Mass the unnormalised product assigned to the empty set.
    pub conflict: f64,
}

/// Dempster's rule on two focal lists.
///
/// Every product mass is bucketed by its intersection; buckets are summed in
/// a canonical order (sorted by set, then by value) so that the result is
/// bit-for-bit independent of argument order.
pub fn orthogonal_sum<S: FocalSet>(
    a: &[(S, f64)],
    b: &[(S, f64)],
) -> Result<OrthogonalSum<S>, EvidenceError> {
    let mut products: Vec<(S, f64)> = Vec::with_capacity(a.len() * b.len());
    let mut conflicting: Vec<f64> = Vec::new();
    for (sa, ma) in a {
        for (sb, mb) in b {
            let m = ma * mb;
            if m == 0.0 {
                continue;
            }
            let meet = sa.meet(sb);
            if meet.is_null() {
                conflicting.push(m);
            } else {
                products.push((meet, m));
            }
        }
    }
    products.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
    conflicting.sort_by(f64::total_cmp);

    let mut merged: Vec<(S, f64)> = Vec::with_capacity(products.len());
    for (set, m) in products {
        match merged.last_mut() {
            Some((last, acc)) if *last == set => *acc += m,
            _ => merged.push((set, m)),
        }
    }
    let retained: f64 = merged.iter().map(|(_, m)| m).sum();
    let raw_conflict: f64 = conflicting.iter().sum();
    if merged.is_empty() || retained <= 0.0 {
        return Err(EvidenceError::TotalConflict);
    }
    let conflict = (raw_conflict / (raw_conflict + retained)).clamp(0.0, 1.0);
    let focal = normalise(merged, retained);
    Ok(OrthogonalSum { focal, conflict })
}

/// Divides by `total`, prunes negligible masses and renormalises again if
/// anything was pruned.
pub(crate) fn normalise<S: FocalSet>(focal: Vec<(S, f64)>, total: f64) -> Vec<(S, f64)> {
    let mut kept: Vec<(S, f64)> = focal
        .into_iter()
        .map(|(s, m)| (s, m / total))
        .filter(|(_, m)| *m >= PRUNE_BELOW)
        .collect();
    let sum: f64 = kept.iter().map(|(_, m)| m).sum();
    if sum != 1.0 && sum > 0.0 {
        for (_, m) in kept.iter_mut() {
            *m /= sum;
        }
    }
    kept
}

/// Sums masses of focal elements satisfying `pred`, in ascending-mass order.
pub(crate) fn stable_sum<'a, S: 'a, I, F>(focal: I, mut pred: F) -> f64
where
    I: IntoIterator<Item = &'a (S, f64)>,
    F: FnMut(&S) -> bool,
{
    let mut parts: Vec<f64> = focal
        .into_iter()
        .filter(|(s, _)| pred(s))
        .map(|(_, m)| *m)
        .collect();
    parts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    parts.iter().sum()
}
