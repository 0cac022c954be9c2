//! Fixed-width bit-indexed subsets of a ground set.
//!
//! A [`Subset`] holds up to [`MAX_ELEMENTS`] elements in four machine words,
//! so union, intersection, containment and cardinality are constant time.
//! Its `Ord` implementation is the canonical order used everywhere: by size
//! first, then lexicographically by sorted element indices.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{BitAnd, BitOr, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const WORDS: usize = 4;

/// Largest supported ground set.
pub const MAX_ELEMENTS: usize = WORDS * 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Subset([u64; WORDS]);

impl Subset {
    pub const fn empty() -> Self {
        Subset([0; WORDS])
    }

    pub fn singleton(x: usize) -> Self {
        let mut s = Self::empty();
        s.insert(x);
        s
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_ELEMENTS);
        let mut s = Self::empty();
        for (w, word) in s.0.iter_mut().enumerate() {
            let lo = w * 64;
            if n >= lo + 64 {
                *word = u64::MAX;
            } else if n > lo {
                *word = (1u64 << (n - lo)) - 1;
            }
        }
        s
    }

    pub fn insert(&mut self, x: usize) {
        assert!(x < MAX_ELEMENTS, "element {x} out of subset capacity");
        self.0[x / 64] |= 1 << (x % 64);
    }

    pub fn remove(&mut self, x: usize) {
        if x < MAX_ELEMENTS {
            self.0[x / 64] &= !(1 << (x % 64));
        }
    }

    pub fn contains(&self, x: usize) -> bool {
        x < MAX_ELEMENTS && self.0[x / 64] >> (x % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &Subset) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &Subset) -> bool {
        self.0.iter().zip(other.0.iter()).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &Subset) -> Subset {
        *self | *other
    }

    pub fn intersection(&self, other: &Subset) -> Subset {
        *self & *other
    }

    pub fn difference(&self, other: &Subset) -> Subset {
        *self - *other
    }

    /// Smallest element, if any.
    pub fn min_element(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    /// Largest element, if any.
    pub fn max_element(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + 63 - w.leading_zeros() as usize)
    }

    /// Elements in ascending order.
    pub fn iter(&self) -> Elements {
        Elements {
            words: self.0,
            word: 0,
        }
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Every element lies in `[0, n)`.
    pub fn fits(&self, n: usize) -> bool {
        self.max_element().is_none_or(|m| m < n)
    }

    /// The elements of `elements` picked out by the bits of `mask`: bit `j`
    /// selects `elements[j]`.
    pub fn select(elements: &[usize], mask: u64) -> Subset {
        let mut s = Subset::empty();
        let mut m = mask;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            s.insert(elements[j]);
            m &= m - 1;
        }
        s
    }

    /// All subsets of `self`, in no particular order. Panics above 63 elements.
    pub fn subsets(&self) -> impl Iterator<Item = Subset> {
        let elements = self.to_vec();
        assert!(elements.len() < 64, "too many elements to enumerate subsets");
        (0..1u64 << elements.len()).map(move |mask| Subset::select(&elements, mask))
    }
}

impl Ord for Subset {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.len().cmp(&other.len()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // Equal sizes: the set holding the smallest element of the symmetric
        // difference comes first.
        let diff = (*self - *other) | (*other - *self);
        match diff.min_element() {
            None => Ordering::Equal,
            Some(x) if self.contains(x) => Ordering::Less,
            Some(_) => Ordering::Greater,
        }
    }
}

impl PartialOrd for Subset {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl BitOr for Subset {
    type Output = Subset;
    fn bitor(self, rhs: Subset) -> Subset {
        let mut out = self;
        for (a, b) in out.0.iter_mut().zip(rhs.0) {
            *a |= b;
        }
        out
    }
}

impl BitAnd for Subset {
    type Output = Subset;
    fn bitand(self, rhs: Subset) -> Subset {
        let mut out = self;
        for (a, b) in out.0.iter_mut().zip(rhs.0) {
            *a &= b;
        }
        out
    }
}

impl Sub for Subset {
    type Output = Subset;
    fn sub(self, rhs: Subset) -> Subset {
        let mut out = self;
        for (a, b) in out.0.iter_mut().zip(rhs.0) {
            *a &= !b;
        }
        out
    }
}

impl FromIterator<usize> for Subset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = Subset::empty();
        for x in iter {
            s.insert(x);
        }
        s
    }
}

impl<'a> IntoIterator for &'a Subset {
    type Item = usize;
    type IntoIter = Elements;
    fn into_iter(self) -> Elements {
        self.iter()
    }
}

pub struct Elements {
    words: [u64; WORDS],
    word: usize,
}

impl Iterator for Elements {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        while self.word < WORDS {
            let w = self.words[self.word];
            if w != 0 {
                let bit = w.trailing_zeros() as usize;
                self.words[self.word] &= w - 1;
                return Some(self.word * 64 + bit);
            }
            self.word += 1;
        }
        None
    }
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let elements = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&bad) = elements.iter().find(|&&x| x >= MAX_ELEMENTS) {
            return Err(serde::de::Error::custom(format!(
                "element {bad} exceeds capacity {MAX_ELEMENTS}"
            )));
        }
        Ok(elements.into_iter().collect())
    }
}
