use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};

/// Largest supported item count.
pub const MAX_ITEMS: usize = 63;

/// A set of items `{0, .., m-1}` packed into a bitmask.
///
/// Sets are ordered lexicographically on their ascending index sequences,
/// with a strict prefix preceding its extensions: `{0} < {0,1} < {0,2} < {1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ItemSet(u64);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        ItemSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// All items `{0, .., m-1}`.
    pub fn full(m: usize) -> Self {
        debug_assert!(m <= MAX_ITEMS);
        ItemSet((1u64 << m) - 1)
    }

    pub fn singleton(item: usize) -> Self {
        debug_assert!(item < MAX_ITEMS);
        ItemSet(1u64 << item)
    }

    /// Builds a set from indices, rejecting duplicates and out-of-range items.
    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Result<Self> {
        let mut bits = 0u64;
        for i in items {
            if i >= MAX_ITEMS {
                return Err(LabError::Invalid(format!(
                    "item index {i} exceeds the supported maximum {}",
                    MAX_ITEMS - 1
                )));
            }
            if bits & (1 << i) != 0 {
                return Err(LabError::Invalid(format!("duplicate item index {i}")));
            }
            bits |= 1 << i;
        }
        Ok(ItemSet(bits))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, item: usize) -> bool {
        item < 64 && self.0 & (1 << item) != 0
    }

    pub fn is_subset(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: ItemSet) -> Self {
        ItemSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ItemSet) -> Self {
        ItemSet(self.0 & other.0)
    }

    pub fn difference(self, other: ItemSet) -> Self {
        ItemSet(self.0 & !other.0)
    }

    pub fn with(self, item: usize) -> Self {
        ItemSet(self.0 | (1 << item))
    }

    pub fn without(self, item: usize) -> Self {
        ItemSet(self.0 & !(1 << item))
    }

    /// Largest index plus one, 0 for the empty set.
    pub fn span(self) -> usize {
        64 - self.0.leading_zeros() as usize
    }

    /// Item indices in ascending order.
    pub fn iter(self) -> Items {
        Items(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Every subset of `self`, including `∅` and `self`, in descending bit order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            universe: self.0,
            next: Some(self.0),
        }
    }
}

impl Ord for ItemSet {
    fn cmp(&self, other: &Self) -> Ordering {
        let diff = self.0 ^ other.0;
        if diff == 0 {
            return Ordering::Equal;
        }
        // Both sequences agree below the lowest differing index j. The set
        // holding j is smaller unless the other one has nothing above j
        // (then the other one is a strict prefix).
        let j = diff.trailing_zeros();
        let above = if j == 63 { 0 } else { !0u64 << (j + 1) };
        if self.0 & (1 << j) != 0 {
            if other.0 & above != 0 {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        } else if self.0 & above != 0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
}

impl PartialOrd for ItemSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for ItemSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ItemSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(d)?;
        ItemSet::from_items(items).map_err(serde::de::Error::custom)
    }
}

pub struct Items(u64);

impl Iterator for Items {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let i = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(i)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Items {}

pub struct Subsets {
    universe: u64,
    next: Option<u64>,
}

impl Iterator for Subsets {
    type Item = ItemSet;

    fn next(&mut self) -> Option<ItemSet> {
        let cur = self.next?;
        self.next = if cur == 0 {
            None
        } else {
            Some((cur - 1) & self.universe)
        };
        Some(ItemSet(cur))
    }
}

/// A nonempty item set carrying a bonus weight.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Hyperedge(ItemSet);

impl Hyperedge {
    pub fn new(items: ItemSet) -> Result<Self> {
        if items.is_empty() {
            return Err(LabError::Invalid("hyperedges must be nonempty".into()));
        }
        Ok(Hyperedge(items))
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> Result<Self> {
        Hyperedge::new(ItemSet::from_items(items)?)
    }

    pub fn singleton(item: usize) -> Self {
        Hyperedge(ItemSet::singleton(item))
    }

    pub fn items(self) -> ItemSet {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.len()
    }
}

impl<'de> Deserialize<'de> for Hyperedge {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Hyperedge::new(ItemSet::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for Hyperedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Display for Hyperedge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(items: &[usize]) -> ItemSet {
        ItemSet::from_items(items.iter().copied()).unwrap()
    }

    #[test]
    fn lexicographic_order_examples() {
        let mut sets = vec![set(&[2]), set(&[1, 2]), set(&[0, 2]), set(&[1]), set(&[0, 1, 2]), set(&[0]), set(&[0, 1])];
        sets.sort();
        let expect = vec![set(&[0]), set(&[0, 1]), set(&[0, 1, 2]), set(&[0, 2]), set(&[1]), set(&[1, 2]), set(&[2])];
        assert_eq!(sets, expect);
    }

    #[test]
    fn duplicates_rejected() {
        assert!(ItemSet::from_items([1, 1]).is_err());
        assert!(Hyperedge::from_items([]).is_err());
    }

    #[test]
    fn subsets_cover_power_set() {
        let s = set(&[0, 2, 5]);
        let subs: Vec<_> = s.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|t| t.is_subset(s)));
        assert_eq!(ItemSet::EMPTY.subsets().count(), 1);
    }

    proptest! {
        #[test]
        fn order_matches_vec_order(a in 0u64..1024, b in 0u64..1024) {
            let (x, y) = (ItemSet(a), ItemSet(b));
            prop_assert_eq!(x.cmp(&y), x.to_vec().cmp(&y.to_vec()));
        }
    }
}
