use std::fmt;

use crate::error::{Error, Result};

/// Largest ambient dimension a mask can address.
pub const MAX_MASK_DIM: usize = 64;

/// A subset of the basis indices `0..n`, stored as a bit set.
///
/// Ordering compares the ascending index lists lexicographically, which is
/// the canonical order used for maximal-set antichains and tie-breaking.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubsetMask {
    bits: u64,
    n: usize,
}

fn low_bits(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl SubsetMask {
    pub fn empty(n: usize) -> Self {
        assert!(n <= MAX_MASK_DIM, "mask dimension {n} exceeds {MAX_MASK_DIM}");
        SubsetMask { bits: 0, n }
    }

    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_MASK_DIM, "mask dimension {n} exceeds {MAX_MASK_DIM}");
        SubsetMask {
            bits: low_bits(n),
            n,
        }
    }

    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        if n > MAX_MASK_DIM {
            return Err(Error::SizeCap {
                n,
                cap: MAX_MASK_DIM,
            });
        }
        if bits & !low_bits(n) != 0 {
            return Err(Error::InvalidInput(format!(
                "bit pattern {bits:#x} has indices outside 0..{n}"
            )));
        }
        Ok(SubsetMask { bits, n })
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        if n > MAX_MASK_DIM {
            return Err(Error::SizeCap {
                n,
                cap: MAX_MASK_DIM,
            });
        }
        let mut mask = SubsetMask::empty(n);
        for &i in indices {
            if i >= n {
                return Err(Error::InvalidInput(format!(
                    "index {i} out of range for dimension {n}"
                )));
            }
            mask.bits |= 1 << i;
        }
        Ok(mask)
    }

    /// Parses comma-separated zero-based indices, e.g. `0,2,5`. An empty
    /// string is the empty set.
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(SubsetMask::empty(n));
        }
        let indices = text
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("subset index {tok:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        SubsetMask::from_indices(n, &indices)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.bits & (1 << i) != 0
    }

    pub fn with(mut self, i: usize) -> Self {
        assert!(i < self.n, "index {i} out of range for dimension {}", self.n);
        self.bits |= 1 << i;
        self
    }

    pub fn without(mut self, i: usize) -> Self {
        if i < self.n {
            self.bits &= !(1 << i);
        }
        self
    }

    pub fn union(self, other: SubsetMask) -> Self {
        debug_assert_eq!(self.n, other.n);
        SubsetMask {
            bits: self.bits | other.bits,
            n: self.n,
        }
    }

    pub fn intersection(self, other: SubsetMask) -> Self {
        debug_assert_eq!(self.n, other.n);
        SubsetMask {
            bits: self.bits & other.bits,
            n: self.n,
        }
    }

    pub fn difference(self, other: SubsetMask) -> Self {
        debug_assert_eq!(self.n, other.n);
        SubsetMask {
            bits: self.bits & !other.bits,
            n: self.n,
        }
    }

    pub fn complement(self) -> Self {
        SubsetMask {
            bits: !self.bits & low_bits(self.n),
            n: self.n,
        }
    }

    pub fn is_subset_of(&self, other: &SubsetMask) -> bool {
        self.bits & !other.bits == 0
    }

    /// Ascending indices.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let mut rest = self.bits;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let i = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(i)
            }
        })
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Every subset of `self`, including `self` and the empty set.
    pub fn subsets(&self) -> impl Iterator<Item = SubsetMask> + '_ {
        let full = self.bits;
        let n = self.n;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(SubsetMask { bits: cur, n })
        })
    }

    /// Maps a mask over `0..self.len()` (positions inside `self`) back to the
    /// ambient indices of `self`.
    pub fn lift(&self, local: &SubsetMask) -> SubsetMask {
        let mut out = SubsetMask::empty(self.n);
        for (pos, i) in self.iter().enumerate() {
            if local.contains(pos) {
                out.bits |= 1 << i;
            }
        }
        out
    }
}

impl PartialOrd for SubsetMask {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SubsetMask {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter()).then(self.n.cmp(&other.n))
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.iter().map(|i| i.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_iterate() {
        let m = SubsetMask::parse(6, "4, 0,2").unwrap();
        assert_eq!(m.indices(), vec![0, 2, 4]);
        assert_eq!(m.len(), 3);
        assert!(SubsetMask::parse(3, "3").is_err());
        assert!(SubsetMask::parse(3, "a").is_err());
        assert!(SubsetMask::parse(3, "").unwrap().is_empty());
    }

    #[test]
    fn subsets_enumerates_power_set() {
        let m = SubsetMask::from_indices(8, &[1, 3, 6]).unwrap();
        let subs: Vec<_> = m.subsets().collect();
        assert_eq!(subs.len(), 8);
        assert!(subs.iter().all(|s| s.is_subset_of(&m)));
        let full = SubsetMask::full(64);
        assert_eq!(full.len(), 64);
        assert_eq!(full.complement().len(), 0);
    }

    #[test]
    fn lexicographic_order() {
        let a = SubsetMask::from_indices(4, &[0, 1, 3]).unwrap();
        let b = SubsetMask::from_indices(4, &[0, 2, 3]).unwrap();
        let c = SubsetMask::from_indices(4, &[1]).unwrap();
        assert!(a < b);
        assert!(b < c);
    }

    #[test]
    fn lift_maps_positions() {
        let host = SubsetMask::from_indices(6, &[1, 3, 5]).unwrap();
        let local = SubsetMask::from_indices(3, &[0, 2]).unwrap();
        assert_eq!(host.lift(&local).indices(), vec![1, 5]);
    }
}
