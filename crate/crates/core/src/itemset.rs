//! Bundles of items as fixed-width bitmasks.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest supported item count. Exhaustive routines enumerate `2^m` bundles.
pub const MAX_ITEMS: usize = 24;

/// A subset of the items `0..m`, stored as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ItemSet(pub u32);

impl ItemSet {
    pub const EMPTY: ItemSet = ItemSet(0);

    /// The full item set `{0, .., m-1}`.
    pub fn full(m: usize) -> ItemSet {
        assert!(m <= MAX_ITEMS, "at most {MAX_ITEMS} items are supported");
        ItemSet(((1u64 << m) - 1) as u32)
    }

    pub fn singleton(j: usize) -> ItemSet {
        ItemSet(1 << j)
    }

    pub fn from_items<I: IntoIterator<Item = usize>>(items: I) -> ItemSet {
        items.into_iter().fold(ItemSet::EMPTY, |s, j| s.with(j))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn contains(self, j: usize) -> bool {
        (self.0 >> j) & 1 == 1
    }

    #[inline]
    pub fn with(self, j: usize) -> ItemSet {
        ItemSet(self.0 | (1 << j))
    }

    #[inline]
    pub fn without(self, j: usize) -> ItemSet {
        ItemSet(self.0 & !(1 << j))
    }

    #[inline]
    pub fn union(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 | other.0)
    }

    #[inline]
    pub fn intersection(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 & other.0)
    }

    #[inline]
    pub fn difference(self, other: ItemSet) -> ItemSet {
        ItemSet(self.0 & !other.0)
    }

    #[inline]
    pub fn is_subset(self, other: ItemSet) -> bool {
        self.0 & !other.0 == 0
    }

    #[inline]
    pub fn is_disjoint(self, other: ItemSet) -> bool {
        self.0 & other.0 == 0
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// True when no bit at or above `m` is set.
    pub fn fits(self, m: usize) -> bool {
        m >= 32 || self.0 >> m == 0
    }

    /// Items in increasing index order.
    pub fn iter(self) -> Items {
        Items(self.0)
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// All subsets of `self`, in increasing bitmask order, starting with the empty set.
    pub fn subsets(self) -> Subsets {
        Subsets { mask: self.0, next: Some(0) }
    }
}

impl fmt::Debug for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for ItemSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, j) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, "}}")
    }
}

pub struct Items(u32);

impl Iterator for Items {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let j = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(j)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for Items {}

/// Submask enumeration via `(s - mask) & mask`.
pub struct Subsets {
    mask: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = ItemSet;

    fn next(&mut self) -> Option<ItemSet> {
        let cur = self.next?;
        self.next = if cur == self.mask { None } else { Some((cur.wrapping_sub(self.mask)) & self.mask) };
        Some(ItemSet(cur))
    }
}

/// All `2^m` bundles over `m` items.
pub fn all_bundles(m: usize) -> impl Iterator<Item = ItemSet> {
    (0..1u32 << m).map(ItemSet)
}

impl Serialize for ItemSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for ItemSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let items = Vec::<usize>::deserialize(d)?;
        let mut s = ItemSet::EMPTY;
        for j in items {
            if j >= MAX_ITEMS {
                return Err(serde::de::Error::custom(format!("item index {j} exceeds the {MAX_ITEMS}-item limit")));
            }
            s = s.with(j);
        }
        Ok(s)
    }
}
