use std::collections::BTreeMap;
use std::fmt;

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use super::kernel::{orthogonal_sum, stable_sum, FocalSet};
use super::{EvidenceError, Frame, Subset};

const SUM_TOLERANCE: f64 = 1e-12;

/// A normalised mass function over a small [`Frame`].
#[derive(Clone, PartialEq)]
pub struct MassFunction {
    frame: Frame,
    masses: BTreeMap<Subset, f64>,
}

/// `[support, plausibility]` for a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvidenceInterval {
    pub support: f64,
    pub plausibility: f64,
}

/// Mass the unnormalised combination placed on the empty set.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Conflict(pub f64);

impl Conflict {
    pub const NONE: Conflict = Conflict(0.0);

    pub fn value(self) -> f64 {
        self.0
    }

    /// Accumulates another step's conflict: the mass normalised away by both,
    /// measured against the raw product of all inputs.
    pub fn then(self, step: Conflict) -> Conflict {
        Conflict(1.0 - (1.0 - self.0) * (1.0 - step.0))
    }
}

impl EvidenceInterval {
    pub const IGNORANCE: EvidenceInterval = EvidenceInterval {
        support: 0.0,
        plausibility: 1.0,
    };
    pub const CERTAIN: EvidenceInterval = EvidenceInterval {
        support: 1.0,
        plausibility: 1.0,
    };

    pub fn new(support: f64, plausibility: f64) -> Result<Self, EvidenceError> {
        if !(0.0..=1.0).contains(&support)
            || !(0.0..=1.0).contains(&plausibility)
            || support > plausibility
        {
            return Err(EvidenceError::InvalidInterval {
                support,
                plausibility,
            });
        }
        Ok(Self {
            support,
            plausibility,
        })
    }

    /// Builds an interval from computed sums, absorbing rounding noise.
    pub(crate) fn from_sums(support: f64, plausibility: f64) -> Self {
        let plausibility = plausibility.clamp(0.0, 1.0);
        let support = support.clamp(0.0, plausibility);
        Self {
            support,
            plausibility,
        }
    }

    /// The negative-evidence form `[0, 1 - q]`.
    pub fn against(q: f64) -> Self {
        Self::from_sums(0.0, 1.0 - q)
    }

    pub fn width(&self) -> f64 {
        self.plausibility - self.support
    }
}

impl MassFunction {
    /// Validates and normalises a raw assignment. Zero entries are dropped;
    /// masses must be non-negative, avoid the empty set, and sum to one.
    pub fn from_masses<I>(frame: Frame, masses: I) -> Result<Self, EvidenceError>
    where
        I: IntoIterator<Item = (Subset, f64)>,
    {
        let mut map: BTreeMap<Subset, f64> = BTreeMap::new();
        for (set, m) in masses {
            if !(0.0..=1.0).contains(&m) || !m.is_finite() {
                return Err(EvidenceError::MassOutOfRange(m));
            }
            if m == 0.0 {
                continue;
            }
            if set.is_empty() {
                return Err(EvidenceError::MassOnEmptySet);
            }
            if !frame.contains(set) {
                return Err(EvidenceError::OutsideFrame);
            }
            *map.entry(set).or_insert(0.0) += m;
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(EvidenceError::NotNormalised(total));
        }
        Ok(Self { frame, masses: map })
    }

    /// Total ignorance: all mass on the frame.
    pub fn vacuous(frame: Frame) -> Self {
        let mut masses = BTreeMap::new();
        masses.insert(frame.theta(), 1.0);
        Self { frame, masses }
    }

    /// Mass `p` on `focal`, `1 - p` on the whole frame.
    pub fn simple_support(frame: Frame, focal: Subset, p: f64) -> Result<Self, EvidenceError> {
        if focal.is_empty() {
            return Err(EvidenceError::EmptyFocal);
        }
        if !frame.contains(focal) {
            return Err(EvidenceError::OutsideFrame);
        }
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(EvidenceError::MassOutOfRange(p));
        }
        let theta = frame.theta();
        let mut masses = BTreeMap::new();
        if focal == theta {
            masses.insert(theta, 1.0);
        } else {
            if p > 0.0 {
                masses.insert(focal, p);
            }
            if p < 1.0 {
                masses.insert(theta, 1.0 - p);
            }
        }
        Ok(Self { frame, masses })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn mass(&self, set: Subset) -> f64 {
        self.masses.get(&set).copied().unwrap_or(0.0)
    }

    pub fn focal_elements(&self) -> impl Iterator<Item = (Subset, f64)> + '_ {
        self.masses.iter().map(|(s, m)| (*s, *m))
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn is_vacuous(&self) -> bool {
        self.masses.len() == 1 && self.masses.contains_key(&self.frame.theta())
    }

    /// Dempster's rule of combination.
    pub fn combine(&self, other: &MassFunction) -> Result<(MassFunction, Conflict), EvidenceError> {
        if self.frame != other.frame {
            return Err(EvidenceError::FrameMismatch);
        }
        let a: Vec<(Subset, f64)> = self.focal_elements().collect();
        let b: Vec<(Subset, f64)> = other.focal_elements().collect();
        let sum = orthogonal_sum(&a, &b)?;
        Ok((
            MassFunction {
                frame: self.frame.clone(),
                masses: sum.focal.into_iter().collect(),
            },
            Conflict(sum.conflict),
        ))
    }

    /// `[Bel(h), Pl(h)]` for a non-empty hypothesis.
    pub fn interval(&self, hypothesis: Subset) -> Result<EvidenceInterval, EvidenceError> {
        if hypothesis.is_empty() {
            return Err(EvidenceError::EmptyHypothesis);
        }
        if !self.frame.contains(hypothesis) {
            return Err(EvidenceError::OutsideFrame);
        }
        let focal: Vec<(Subset, f64)> = self.focal_elements().collect();
        let support = stable_sum(&focal, |s| s.is_subset_of(&hypothesis));
        let plausibility = stable_sum(&focal, |s| FocalSet::intersects(s, &hypothesis));
        Ok(EvidenceInterval::from_sums(support, plausibility))
    }

    pub fn belief(&self, hypothesis: Subset) -> Result<f64, EvidenceError> {
        self.interval(hypothesis).map(|i| i.support)
    }

    pub fn plausibility(&self, hypothesis: Subset) -> Result<f64, EvidenceError> {
        self.interval(hypothesis).map(|i| i.plausibility)
    }
}

/// Step-by-step record of a fold of [`MassFunction::combine`].
#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub mass: MassFunction,
    pub conflict: Conflict,
    pub step_conflicts: Vec<Conflict>,
}

/// Combines a non-empty list left to right.
pub fn combine_all(ms: &[MassFunction]) -> Result<(MassFunction, Conflict), EvidenceError> {
    combine_all_traced(ms).map(|o| (o.mass, o.conflict))
}

pub fn combine_all_traced(ms: &[MassFunction]) -> Result<FoldOutcome, EvidenceError> {
    let (first, rest) = ms.split_first().ok_or(EvidenceError::EmptyList)?;
    let mut acc = first.clone();
    let mut conflict = Conflict::NONE;
    let mut step_conflicts = Vec::with_capacity(rest.len());
    for m in rest {
        let (next, k) = acc.combine(m)?;
        step_conflicts.push(k);
        conflict = conflict.then(k);
        acc = next;
    }
    Ok(FoldOutcome {
        mass: acc,
        conflict,
        step_conflicts,
    })
}

impl fmt::Debug for MassFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (set, m) in &self.masses {
            map.entry(&self.frame.labels_of(*set), m);
        }
        map.finish()
    }
}

/// Serialises as `{"a,b": mass, ...}`.
impl Serialize for MassFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.masses.len()))?;
        for (set, m) in &self.masses {
            map.serialize_entry(&self.frame.labels_of(*set).join(","), m)?;
        }
        map.end()
    }
}
