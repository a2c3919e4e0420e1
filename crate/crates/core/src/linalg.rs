//! Dense integer matrices and the spectral tools used on nonnegative transfer matrices.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

/// Dense block size above which the Perron root is found by power iteration.
pub const DENSE_EIGEN_MAX: usize = 64;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

/// Square matrix with `i64` entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<i64>>", try_from = "Vec<Vec<i64>>")]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix { n, data: vec![0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Result<Self, String> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(format!("row {r} has length {} in a {n}x{n} matrix", row.len()));
            }
            data.extend(row);
        }
        Ok(IntMatrix { n, data })
    }

    pub fn diag(entries: &[i64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &x) in entries.iter().enumerate() {
            m.set(i, i, x);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, x: i64) {
        self.data[r * self.n + c] = x;
    }

    pub fn row(&self, r: usize) -> &[i64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<i64>> {
        (0..self.n).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for r in 0..self.n {
            for c in 0..self.n {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn checked_mul(&self, other: &IntMatrix) -> Option<IntMatrix> {
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..n {
                    let b = other.get(k, c);
                    if b != 0 {
                        let idx = r * n + c;
                        out.data[idx] = out.data[idx].checked_add(a.checked_mul(b)?)?;
                    }
                }
            }
        }
        Some(out)
    }

    pub fn checked_pow(&self, k: u32) -> Option<IntMatrix> {
        let mut acc = Self::identity(self.n);
        for _ in 0..k {
            acc = acc.checked_mul(self)?;
        }
        Some(acc)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|&x| x >= 0)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|r| (0..self.n).all(|c| r == c || self.get(r, c) == 0))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn total(&self) -> i64 {
        self.data.iter().sum()
    }

    pub fn column_sum(&self, c: usize) -> i64 {
        (0..self.n).map(|r| self.get(r, c)).sum()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.get(r, c) as f64)
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal(&self, idx: &[usize]) -> IntMatrix {
        let mut m = Self::zeros(idx.len());
        for (a, &r) in idx.iter().enumerate() {
            for (b, &c) in idx.iter().enumerate() {
                m.set(a, b, self.get(r, c));
            }
        }
        m
    }

    /// `B x` for a real vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).iter().zip(x).map(|(&a, &b)| a as f64 * b).sum())
            .collect()
    }

    /// `Bᵀ x` for a real vector.
    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for r in 0..self.n {
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.get(r, c) as f64 * x[r];
            }
        }
        out
    }
}

impl From<IntMatrix> for Vec<Vec<i64>> {
    fn from(m: IntMatrix) -> Self {
        m.rows()
    }
}

impl TryFrom<Vec<Vec<i64>>> for IntMatrix {
    type Error = String;
    fn try_from(rows: Vec<Vec<i64>>) -> Result<Self, String> {
        IntMatrix::from_rows(rows)
    }
}

/// Strongly connected components of the support graph of `m`, restricted to `idx`.
fn components(m: &IntMatrix, idx: &[usize]) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<(), ()>::with_capacity(idx.len(), 0);
    let nodes: Vec<_> = idx.iter().map(|_| g.add_node(())).collect();
    for (a, &r) in idx.iter().enumerate() {
        for (b, &c) in idx.iter().enumerate() {
            if m.get(r, c) != 0 {
                g.add_edge(nodes[b], nodes[a], ());
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|n| idx[n.index()]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    comps.sort();
    comps
}

fn is_cyclic_component(m: &IntMatrix, comp: &[usize]) -> bool {
    comp.len() > 1 || m.get(comp[0], comp[0]) != 0
}

/// Perron root of an irreducible nonnegative block.
fn perron_root(block: &IntMatrix) -> f64 {
    let n = block.dim();
    if n == 1 {
        return block.get(0, 0) as f64;
    }
    if n <= DENSE_EIGEN_MAX {
        return block
            .to_f64()
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
    }
    // Shifting by the identity makes the block primitive without moving the Perron vector.
    let a = block.to_f64() + DMatrix::<f64>::identity(n, n);
    let mut x = DVector::<f64>::from_element(n, 1.0 / n as f64);
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITER {
        let y = &a * &x;
        let s = y.sum();
        let next = y / s;
        let diff = (&next - &x).abs().max();
        x = next;
        lambda = s;
        if diff < POWER_TOL {
            break;
        }
    }
    lambda - 1.0
}

/// Spectral radius of the nonnegative matrix `m` restricted to the coordinates `idx`.
///
/// The block is split into strongly connected components first, so defective
/// eigenvalues of reducible matrices never reach the eigensolver. Nilpotent blocks
/// return exactly `0`.
pub fn spectral_radius_on(m: &IntMatrix, idx: &[usize]) -> f64 {
    components(m, idx)
        .iter()
        .filter(|c| is_cyclic_component(m, c))
        .map(|c| perron_root(&m.principal(c)))
        .fold(0.0, f64::max)
}

pub fn spectral_radius(m: &IntMatrix) -> f64 {
    let idx: Vec<usize> = (0..m.dim()).collect();
    spectral_radius_on(m, &idx)
}

/// Real eigenvalues of `m`, gathered block by block over its strongly connected components.
///
/// Complex eigenvalues with imaginary part below `imag_tol` are reported as real.
/// Multiplicities are not tracked; the result is sorted and deduplicated within `imag_tol`.
pub fn real_eigenvalues(m: &IntMatrix, imag_tol: f64) -> Vec<f64> {
    let idx: Vec<usize> = (0..m.dim()).collect();
    let mut out: Vec<f64> = Vec::new();
    for c in components(m, &idx) {
        let block = m.principal(&c);
        if c.len() == 1 {
            out.push(block.get(0, 0) as f64);
            continue;
        }
        for z in block.to_f64().complex_eigenvalues().iter() {
            if z.im.abs() <= imag_tol * z.norm().max(1.0) {
                out.push(z.re);
            }
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out.dedup_by(|a, b| (*a - *b).abs() <= imag_tol * a.abs().max(1.0));
    out
}

/// Smallest superset of `start` closed under `v ↦ {r : B[r][v] > 0}` for every matrix given.
pub fn forward_closure(mats: &[&IntMatrix], start: &[usize], n: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for &v in start {
        if !seen[v] {
            seen[v] = true;
            stack.push(v);
        }
    }
    while let Some(w) = stack.pop() {
        for b in mats {
            for (r, s) in seen.iter_mut().enumerate() {
                if !*s && b.get(r, w) != 0 {
                    *s = true;
                    stack.push(r);
                }
            }
        }
    }
    (0..n).filter(|&v| seen[v]).collect()
}

/// Solves `(I − t·B|_idx) x = y|_idx` and scatters the result back to full length.
/// Returns `None` when the restricted system is singular.
pub fn neumann_solve(b: &IntMatrix, t: f64, idx: &[usize], y: &[f64]) -> Option<Vec<f64>> {
    let k = idx.len();
    let mut out = vec![0.0; b.dim()];
    if k == 0 {
        return Some(out);
    }
    let sub = b.principal(idx).to_f64();
    let a = DMatrix::<f64>::identity(k, k) - sub * t;
    let rhs = DVector::from_iterator(k, idx.iter().map(|&v| y[v]));
    let x = a.lu().solve(&rhs)?;
    for (a, &v) in idx.iter().enumerate() {
        out[v] = x[a];
    }
    Some(out)
}

/// Support of a vector, entries with `|x| > tol`.
pub fn support(x: &[f64], tol: f64) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, v)| v.abs() > tol).map(|(i, _)| i).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_radius() {
        let b = IntMatrix::from_rows(vec![vec![1, 1], vec![1, 0]]).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((spectral_radius(&b) - phi).abs() < 1e-12);
    }

    #[test]
    fn defective_and_nilpotent_blocks() {
        let jordan = IntMatrix::from_rows(vec![vec![2, 0], vec![1, 2]]).unwrap();
        assert_eq!(spectral_radius(&jordan), 2.0);
        assert_eq!(real_eigenvalues(&jordan, 1e-9), vec![2.0]);
        let nil = IntMatrix::from_rows(vec![vec![0, 0], vec![1, 0]]).unwrap();
        assert_eq!(spectral_radius(&nil), 0.0);
    }

    #[test]
    fn power_iteration_matches_dense() {
        let n = DENSE_EIGEN_MAX + 6;
        let mut m = IntMatrix::zeros(n);
        for i in 0..n {
            m.set((i + 1) % n, i, 1);
            m.set(i, i, 1);
        }
        assert!((spectral_radius(&m) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn closure_follows_source_to_range() {
        // single edge from vertex 0 to vertex 1
        let b = IntMatrix::from_rows(vec![vec![0, 0], vec![1, 0]]).unwrap();
        assert_eq!(forward_closure(&[&b], &[0], 2), vec![0, 1]);
        assert_eq!(forward_closure(&[&b], &[1], 2), vec![1]);
    }

    #[test]
    fn neumann_geometric_scalar() {
        let b = IntMatrix::diag(&[2]);
        let x = neumann_solve(&b, 1.0 / 3.0, &[0], &[1.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn checked_mul_detects_overflow() {
        let b = IntMatrix::diag(&[i64::MAX / 2 + 1]);
        assert!(b.checked_mul(&b).is_none());
    }
}
