//! Colour subsets `F ⊆ {1..N}` and multi-indices `n ∈ Z_+^N`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const MAX_COLORS: usize = 16;

/// A subset of colours, stored as a bitmask over `0..N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ColorSet(u32);

impl ColorSet {
    pub const EMPTY: ColorSet = ColorSet(0);

    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_COLORS);
        ColorSet(((1u64 << n) - 1) as u32)
    }

    pub fn from_bits(bits: u32) -> Self {
        ColorSet(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn singleton(i: usize) -> Self {
        ColorSet(1 << i)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(it: I) -> Self {
        ColorSet(it.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    /// Parses 1-based colour labels, checking them against `n`.
    pub fn from_labels(labels: &[usize], n: usize) -> Result<Self> {
        let mut bits = 0u32;
        for &l in labels {
            if l == 0 || l > n {
                return Err(Error::InvalidInput(format!("colour {l} outside 1..={n}")));
            }
            bits |= 1 << (l - 1);
        }
        Ok(ColorSet(bits))
    }

    /// Accepts `"{1,2}"`, `"1,2"`, `"{}"` or an empty string.
    pub fn parse(s: &str, n: usize) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let mut labels = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            labels.push(
                part.parse::<usize>()
                    .map_err(|_| Error::InvalidInput(format!("bad colour label {part:?}")))?,
            );
        }
        Self::from_labels(&labels, n)
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: ColorSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: ColorSet) -> ColorSet {
        ColorSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ColorSet) -> ColorSet {
        ColorSet(self.0 & other.0)
    }

    pub fn difference(self, other: ColorSet) -> ColorSet {
        ColorSet(self.0 & !other.0)
    }

    pub fn complement(self, n: usize) -> ColorSet {
        ColorSet(!self.0 & ColorSet::full(n).0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..MAX_COLORS).filter(move |&i| self.contains(i))
    }

    /// All `2^n` subsets in bitmask order.
    pub fn all(n: usize) -> impl Iterator<Item = ColorSet> {
        (0..(1u32 << n)).map(ColorSet)
    }

    /// Every `C` with `self ⊆ C ⊆ {0..n}`.
    pub fn supersets(self, n: usize) -> impl Iterator<Item = ColorSet> {
        ColorSet::all(n).filter(move |c| self.is_subset(*c))
    }

    pub fn labels(self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }
}

impl fmt::Display for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.labels().iter().map(|l| l.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for ColorSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.labels().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ColorSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let labels = Vec::<usize>::deserialize(d)?;
        if labels.iter().any(|&l| l == 0 || l > MAX_COLORS) {
            return Err(serde::de::Error::custom("colour labels are 1-based and at most 16"));
        }
        Ok(ColorSet::from_indices(labels.into_iter().map(|l| l - 1)))
    }
}

/// A multidegree `n ∈ Z_+^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zero(n);
        m.0[i] = 1;
        m
    }

    /// `k · 1_F`.
    pub fn scaled_indicator(n: usize, f: ColorSet, k: u32) -> Self {
        MultiIndex((0..n).map(|i| if f.contains(i) { k } else { 0 }).collect())
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&x| x as u64).sum()
    }

    pub fn support(&self) -> ColorSet {
        ColorSet::from_indices(self.0.iter().enumerate().filter(|(_, &x)| x > 0).map(|(i, _)| i))
    }

    /// `n ∈ F` in the sense `supp n ⊆ F`.
    pub fn lies_in(&self, f: ColorSet) -> bool {
        self.support().is_subset(f)
    }

    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn join(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn meet(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| *a.min(b)).collect())
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        Some(MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }

    /// `n_F`: the coordinates outside `F` set to zero.
    pub fn restrict(&self, f: ColorSet) -> MultiIndex {
        MultiIndex(
            self.0
                .iter()
                .enumerate()
                .map(|(i, &x)| if f.contains(i) { x } else { 0 })
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// All `m` with `0 ≤ m ≤ bound` in lexicographic order.
    pub fn box_iter(bound: &MultiIndex) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero(bound.rank())];
        for (i, &b) in bound.0.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * (b as usize + 1));
            for m in &out {
                for k in 0..=b {
                    let mut m2 = m.clone();
                    m2.0[i] = k;
                    next.push(m2);
                }
            }
            out = next;
        }
        out
    }

    /// All `m` with `|m| = k` supported in `F`.
    pub fn with_total(n: usize, f: ColorSet, k: u32) -> Vec<MultiIndex> {
        let colors: Vec<usize> = f.iter().filter(|&i| i < n).collect();
        let mut out = Vec::new();
        fn rec(colors: &[usize], left: u32, cur: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
            match colors {
                [] => {
                    if left == 0 {
                        out.push(cur.clone());
                    }
                }
                [last] => {
                    cur.0[*last] = left;
                    out.push(cur.clone());
                    cur.0[*last] = 0;
                }
                [first, rest @ ..] => {
                    for j in 0..=left {
                        cur.0[*first] = j;
                        rec(rest, left - j, cur, out);
                    }
                    cur.0[*first] = 0;
                }
            }
        }
        rec(&colors, k, &mut MultiIndex::zero(n), &mut out);
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let f = ColorSet::parse("{1,3}", 3).unwrap();
        assert!(f.contains(0) && !f.contains(1) && f.contains(2));
        assert_eq!(f.to_string(), "{1,3}");
        assert_eq!(ColorSet::parse("", 2).unwrap(), ColorSet::EMPTY);
        assert!(ColorSet::parse("{0}", 2).is_err());
        assert!(ColorSet::parse("{3}", 2).is_err());
    }

    #[test]
    fn supersets_and_complement() {
        let f = ColorSet::singleton(1);
        let sups: Vec<_> = f.supersets(3).collect();
        assert_eq!(sups.len(), 4);
        assert!(sups.iter().all(|c| f.is_subset(*c)));
        assert_eq!(f.complement(3), ColorSet::from_indices([0, 2]));
    }

    #[test]
    fn multi_index_lattice_ops() {
        let a = MultiIndex(vec![2, 0, 1]);
        let b = MultiIndex(vec![1, 3, 1]);
        assert_eq!(a.join(&b), MultiIndex(vec![2, 3, 1]));
        assert_eq!(a.meet(&b), MultiIndex(vec![1, 0, 1]));
        assert_eq!(a.restrict(ColorSet::singleton(0)), MultiIndex(vec![2, 0, 0]));
        assert!(a.checked_sub(&b).is_none());
        assert_eq!(MultiIndex::box_iter(&MultiIndex(vec![1, 2])).len(), 6);
        assert_eq!(MultiIndex::with_total(3, ColorSet::full(3), 2).len(), 6);
        assert_eq!(MultiIndex::with_total(3, ColorSet::singleton(1), 4), vec![MultiIndex(vec![0, 4, 0])]);
        assert_eq!(MultiIndex::with_total(2, ColorSet::EMPTY, 0).len(), 1);
        assert!(MultiIndex::with_total(2, ColorSet::EMPTY, 1).is_empty());
    }
}
