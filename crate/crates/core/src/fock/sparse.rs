//! Column-major sparse matrices over `i64` (identity checks) and `f64` (dumps of
//! β-weighted operators).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

pub trait Scalar:
    Copy + PartialEq + Default + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn one() -> Self;
    fn magnitude(self) -> f64;
}

impl Scalar for i64 {
    fn one() -> Self {
        1
    }
    fn magnitude(self) -> f64 {
        self.unsigned_abs() as f64
    }
}

impl Scalar for f64 {
    fn one() -> Self {
        1.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sparse<T = i64> {
    n: usize,
    /// `cols[c]` holds `(row, value)` sorted by row, without explicit zeros.
    cols: Vec<Vec<(u32, T)>>,
}

impl<T: Scalar> Sparse<T> {
    pub fn zeros(n: usize) -> Self {
        Sparse { n, cols: vec![Vec::new(); n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![T::one(); n])
    }

    pub fn diag(d: &[T]) -> Self {
        let cols = d
            .iter()
            .enumerate()
            .map(|(i, &x)| if x == T::default() { Vec::new() } else { vec![(i as u32, x)] })
            .collect();
        Sparse { n: d.len(), cols }
    }

    /// The partial map sending basis vector `c` to `f(c)`.
    pub fn from_map(n: usize, f: impl Fn(usize) -> Option<usize>) -> Self {
        let cols = (0..n).map(|c| f(c).map(|r| vec![(r as u32, T::one())]).unwrap_or_default()).collect();
        Sparse { n, cols }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    pub fn column(&self, c: usize) -> &[(u32, T)] {
        &self.cols[c]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.cols[c]
            .binary_search_by_key(&(r as u32), |e| e.0)
            .map(|k| self.cols[c][k].1)
            .unwrap_or_default()
    }

    fn from_maps(n: usize, maps: Vec<BTreeMap<u32, T>>) -> Self {
        let cols = maps
            .into_iter()
            .map(|m| m.into_iter().filter(|(_, v)| *v != T::default()).collect())
            .collect();
        Sparse { n, cols }
    }

    pub fn transpose(&self) -> Self {
        let mut maps = vec![BTreeMap::new(); self.n];
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                maps[r as usize].insert(c as u32, v);
            }
        }
        Self::from_maps(self.n, maps)
    }

    /// `self · other`.
    pub fn mul(&self, other: &Sparse<T>) -> Self {
        let maps = other
            .cols
            .iter()
            .map(|col| {
                let mut acc = BTreeMap::new();
                for &(k, b) in col {
                    for &(r, a) in &self.cols[k as usize] {
                        let e = acc.entry(r).or_insert_with(T::default);
                        *e = *e + a * b;
                    }
                }
                acc
            })
            .collect();
        Self::from_maps(self.n, maps)
    }

    fn combine(&self, other: &Sparse<T>, sign: T) -> Self {
        let maps = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| {
                let mut acc: BTreeMap<u32, T> = a.iter().copied().collect();
                for &(r, v) in b {
                    let e = acc.entry(r).or_insert_with(T::default);
                    *e = *e + sign * v;
                }
                acc
            })
            .collect();
        Self::from_maps(self.n, maps)
    }

    pub fn add(&self, other: &Sparse<T>) -> Self {
        self.combine(other, T::one())
    }

    pub fn sub(&self, other: &Sparse<T>) -> Self {
        self.combine(other, -T::one())
    }

    pub fn scale(&self, s: T) -> Self {
        let maps = self.cols.iter().map(|c| c.iter().map(|&(r, v)| (r, s * v)).collect()).collect();
        Self::from_maps(self.n, maps)
    }

    /// Keeps the entries for which `keep(row, col)` holds.
    pub fn filter(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let cols = self
            .cols
            .iter()
            .enumerate()
            .map(|(c, col)| col.iter().copied().filter(|&(r, _)| keep(r as usize, c)).collect())
            .collect();
        Sparse { n: self.n, cols }
    }

    /// Largest entry of `self − other` in the listed columns.
    pub fn max_diff_on(&self, other: &Sparse<T>, cols: &[usize]) -> f64 {
        let d = self.filter(|_, c| cols.binary_search(&c).is_ok()).sub(&other.filter(|_, c| cols.binary_search(&c).is_ok()));
        d.cols.iter().flatten().map(|&(_, v)| v.magnitude()).fold(0.0, f64::max)
    }

    /// `row col value` lines, 0-based.
    pub fn triplets(&self) -> String
    where
        T: std::fmt::Display,
    {
        let mut out = String::new();
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, v) in col {
                let _ = writeln!(out, "{r} {c} {v}");
            }
        }
        out
    }
}
