//! Binary feature masks.

use std::fmt;

/// A binary selection over `len()` features; bit `i` set means feature `i` is used.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask(Vec<bool>);

impl FeatureMask {
    pub fn empty(len: usize) -> Self {
        FeatureMask(vec![false; len])
    }

    pub fn full(len: usize) -> Self {
        FeatureMask(vec![true; len])
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        FeatureMask(bits)
    }

    /// Builds a mask of length `len` with the given indices set.
    ///
    /// Panics if an index is out of range.
    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut bits = vec![false; len];
        for &i in indices {
            assert!(i < len, "feature index {i} out of range for mask of length {len}");
            bits[i] = true;
        }
        FeatureMask(bits)
    }

    /// Parses a `0`/`1` string, most significant position first.
    pub fn from_bitstring(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(FeatureMask)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn popcount(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Selected positions in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn complement(&self) -> Self {
        FeatureMask(self.0.iter().map(|b| !b).collect())
    }

    /// True when every selected bit of `self` is also selected in `other`.
    pub fn is_subset_of(&self, other: &FeatureMask) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    /// Re-expresses a mask over a feature subspace in the original index space.
    /// Bit `i` of `self` corresponds to feature `subspace[i]`.
    pub fn lift(&self, subspace: &[usize], full_len: usize) -> FeatureMask {
        assert_eq!(self.len(), subspace.len());
        let selected: Vec<usize> = self.indices().into_iter().map(|i| subspace[i]).collect();
        FeatureMask::from_indices(full_len, &selected)
    }
}

impl fmt::Debug for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FeatureMask({self})")
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_and_popcount() {
        let m = FeatureMask::from_indices(6, &[4, 1]);
        assert_eq!(m.indices(), vec![1, 4]);
        assert_eq!(m.popcount(), 2);
        assert_eq!(m.to_string(), "010010");
    }

    #[test]
    fn lift_maps_through_subspace() {
        let m = FeatureMask::from_bitstring("101").unwrap();
        let lifted = m.lift(&[7, 2, 5], 10);
        assert_eq!(lifted.indices(), vec![5, 7]);
    }

    #[test]
    fn subset_relation() {
        let a = FeatureMask::from_bitstring("0100").unwrap();
        let b = FeatureMask::from_bitstring("1100").unwrap();
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
    }
}
