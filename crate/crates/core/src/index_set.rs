use std::fmt;

use crate::error::{Error, Result};

/// Largest number of coordinates an [`IndexSet`] can address.
pub const MAX_INDEX_COORDS: usize = 32;

/// A set of distinct 0-based coordinate indices, stored as a bitmask.
///
/// Iteration is always in ascending order, so the set has a single canonical
/// form regardless of how it was built.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSet(u32);

impl IndexSet {
    pub const EMPTY: IndexSet = IndexSet(0);

    /// Builds a set from indices that must be distinct and `< n`.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I, n: usize) -> Result<Self> {
        let mut bits = 0u32;
        for i in indices {
            if i >= n || i >= MAX_INDEX_COORDS {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if bits & (1 << i) != 0 {
                return Err(Error::DuplicateIndex(i));
            }
            bits |= 1 << i;
        }
        Ok(IndexSet(bits))
    }

    pub const fn from_bits(bits: u32) -> Self {
        IndexSet(bits)
    }

    pub const fn bits(self) -> u32 {
        self.0
    }

    /// `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_INDEX_COORDS);
        if n >= 32 {
            IndexSet(u32::MAX)
        } else {
            IndexSet((1u32 << n) - 1)
        }
    }

    /// `{0, .., i-1}`: the coordinates strictly before `i`.
    pub fn prefix(i: usize) -> Self {
        Self::full(i)
    }

    pub fn singleton(i: usize) -> Self {
        debug_assert!(i < MAX_INDEX_COORDS);
        IndexSet(1 << i)
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        i < MAX_INDEX_COORDS && self.0 & (1 << i) != 0
    }

    #[must_use]
    pub fn with(self, i: usize) -> Self {
        IndexSet(self.0 | (1 << i))
    }

    #[must_use]
    pub fn without(self, i: usize) -> Self {
        IndexSet(self.0 & !(1 << i))
    }

    #[must_use]
    pub const fn union(self, other: Self) -> Self {
        IndexSet(self.0 | other.0)
    }

    #[must_use]
    pub const fn intersection(self, other: Self) -> Self {
        IndexSet(self.0 & other.0)
    }

    #[must_use]
    pub const fn difference(self, other: Self) -> Self {
        IndexSet(self.0 & !other.0)
    }

    /// Complement within `{0, .., n-1}`.
    #[must_use]
    pub fn complement(self, n: usize) -> Self {
        Self::full(n).difference(self)
    }

    pub const fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    /// Smallest index, if any.
    pub fn first(self) -> Option<usize> {
        (self.0 != 0).then(|| self.0.trailing_zeros() as usize)
    }

    /// Largest index, if any.
    pub fn last(self) -> Option<usize> {
        (self.0 != 0).then(|| 31 - self.0.leading_zeros() as usize)
    }

    pub fn iter(self) -> Indices {
        Indices(self.0)
    }

    /// All subsets of `self` (including the empty set and `self`), in
    /// increasing bitmask order.
    pub fn subsets(self) -> Subsets {
        Subsets {
            mask: self.0,
            next: Some(0),
        }
    }

    /// Every subset of `{0, .., n-1}` with exactly `k` elements, in increasing
    /// bitmask order.
    pub fn all_of_size(n: usize, k: usize) -> OfSize {
        debug_assert!(n <= 31);
        let next = if k > n {
            None
        } else {
            Some(((1u64 << k) - 1) as u32)
        };
        OfSize {
            limit: 1u64 << n,
            next,
        }
    }

    /// Every subset of `{0, .., n-1}` in increasing bitmask order.
    pub fn all(n: usize) -> impl Iterator<Item = IndexSet> {
        IndexSet::full(n).subsets()
    }
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (pos, i) in self.iter().enumerate() {
            if pos > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str("}")
    }
}

impl IntoIterator for IndexSet {
    type Item = usize;
    type IntoIter = Indices;

    fn into_iter(self) -> Indices {
        self.iter()
    }
}

#[derive(Clone, Debug)]
pub struct Indices(u32);

impl Iterator for Indices {
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
        let c = self.0.count_ones() as usize;
        (c, Some(c))
    }
}

impl ExactSizeIterator for Indices {}

#[derive(Clone, Debug)]
pub struct Subsets {
    mask: u32,
    next: Option<u32>,
}

impl Iterator for Subsets {
    type Item = IndexSet;

    fn next(&mut self) -> Option<IndexSet> {
        let cur = self.next?;
        self.next = if cur == self.mask {
            None
        } else {
            Some(cur.wrapping_sub(self.mask) & self.mask)
        };
        Some(IndexSet(cur))
    }
}

/// Gosper's hack over fixed-popcount masks.
#[derive(Clone, Debug)]
pub struct OfSize {
    limit: u64,
    next: Option<u32>,
}

impl Iterator for OfSize {
    type Item = IndexSet;

    fn next(&mut self) -> Option<IndexSet> {
        let cur = self.next?;
        if u64::from(cur) >= self.limit {
            self.next = None;
            return None;
        }
        self.next = if cur == 0 {
            None
        } else {
            let c = u64::from(cur);
            let lowest = c & c.wrapping_neg();
            let ripple = c + lowest;
            let succ = (((ripple ^ c) >> 2) / lowest) | ripple;
            (succ < self.limit).then_some(succ as u32)
        };
        Some(IndexSet(cur))
    }
}
