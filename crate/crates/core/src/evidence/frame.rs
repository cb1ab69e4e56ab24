use std::fmt;
use std::sync::Arc;

use super::EvidenceError;

/// Largest frame the bitset representation supports.
pub const MAX_FRAME_SIZE: usize = 30;

/// An ordered, finite frame of discernment.
///
/// Cloning is cheap; labels live behind an `Arc`.
#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    labels: Arc<[String]>,
}

impl Frame {
    pub fn new<I, S>(labels: I) -> Result<Self, EvidenceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(EvidenceError::EmptyFrame);
        }
        if labels.len() > MAX_FRAME_SIZE {
            return Err(EvidenceError::FrameTooLarge(labels.len()));
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(EvidenceError::DuplicateLabel(label.clone()));
            }
        }
        Ok(Self {
            labels: labels.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The full frame (total ignorance).
    pub fn theta(&self) -> Subset {
        Subset((1u32 << self.len()) - 1)
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Builds a subset from labels, failing on unknown labels.
    pub fn subset<'a, I>(&self, labels: I) -> Result<Subset, EvidenceError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut bits = 0u32;
        for label in labels {
            let i = self
                .index_of(label)
                .ok_or_else(|| EvidenceError::UnknownLabel(label.to_string()))?;
            bits |= 1 << i;
        }
        Ok(Subset(bits))
    }

    pub fn singleton(&self, label: &str) -> Result<Subset, EvidenceError> {
        self.subset([label])
    }

    pub fn contains(&self, subset: Subset) -> bool {
        subset.0 & !self.theta().0 == 0
    }

    pub fn complement(&self, subset: Subset) -> Subset {
        Subset(self.theta().0 & !subset.0)
    }

    /// Labels of the elements in `subset`, in frame order.
    pub fn labels_of(&self, subset: Subset) -> Vec<&str> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(i, _)| subset.0 & (1 << i) != 0)
            .map(|(_, l)| l.as_str())
            .collect()
    }
}

impl fmt::Debug for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels.iter()).finish()
    }
}

/// A subset of a [`Frame`], stored as a bitset over frame positions.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn intersection(self, other: Subset) -> Subset {
        Subset(self.0 & other.0)
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn intersects(self, other: Subset) -> bool {
        self.0 & other.0 != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subset({:#b})", self.0)
    }
}
