//! Vertex enumeration for polytopes `{x ≥ 0, Σx = 1, Ax = 0}` by the double
//! description method, generic over an exact or a tolerance-based field.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait Field: Clone + Debug + PartialEq {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(x: i64) -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// Sign, with a tolerance band around zero for inexact fields.
    fn sign(&self) -> Ordering;
    fn abs_val(&self) -> Self;

    fn is_zero_val(&self) -> bool {
        self.sign() == Ordering::Equal
    }

    /// Rescales a ray; exact fields leave it alone.
    fn normalize(_v: &mut [Self]) {}
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite input")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if self.is_zero() {
            Ordering::Equal
        } else if self.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
}

/// `f64` treating `|x| ≤ 1e-10` as zero; rays are kept at unit sup-norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approx(pub f64);

pub const APPROX_EPS: f64 = 1e-10;

impl Field for Approx {
    fn zero() -> Self {
        Approx(0.0)
    }
    fn one() -> Self {
        Approx(1.0)
    }
    fn from_i64(x: i64) -> Self {
        Approx(x as f64)
    }
    fn from_f64(x: f64) -> Self {
        Approx(x)
    }
    fn to_f64(&self) -> f64 {
        self.0
    }
    fn add(&self, o: &Self) -> Self {
        Approx(self.0 + o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Approx(self.0 - o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Approx(self.0 * o.0)
    }
    fn div(&self, o: &Self) -> Self {
        Approx(self.0 / o.0)
    }
    fn sign(&self) -> Ordering {
        if self.0.abs() <= APPROX_EPS {
            Ordering::Equal
        } else if self.0 > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
    fn abs_val(&self) -> Self {
        Approx(self.0.abs())
    }
    fn normalize(v: &mut [Self]) {
        let m = v.iter().map(|x| x.0.abs()).fold(0.0, f64::max);
        if m > 0.0 {
            v.iter_mut().for_each(|x| x.0 /= m);
        }
    }
}

/// Reduced row echelon form in place, pivoting among the first `ncols` columns and
/// carrying any further (augmented) columns along; returns the pivot columns.
pub fn rref<T: Field>(m: &mut [Vec<T>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == m.len() {
            break;
        }
        // largest pivot keeps the inexact case stable
        let best = (row..m.len())
            .filter(|&r| !m[r][col].is_zero_val())
            .max_by(|&a, &b| {
                m[a][col].abs_val().to_f64().total_cmp(&m[b][col].abs_val().to_f64())
            });
        let Some(p) = best else { continue };
        m.swap(row, p);
        let inv = T::one().div(&m[row][col]);
        for x in m[row].iter_mut() {
            *x = x.mul(&inv);
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero_val() {
                let factor = m[r][col].clone();
                for c in 0..m[r].len() {
                    let sub = factor.mul(&m[row][c]);
                    m[r][c] = m[r][c].sub(&sub);
                }
            }
        }
        for r in 0..m.len() {
            if m[r][col].is_zero_val() {
                m[r][col] = T::zero();
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

pub fn rank<T: Field>(rows: &[Vec<T>], ncols: usize) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, ncols).len()
}

/// Columns spanning `{x : Ax = 0}`, each of length `ncols`.
pub fn nullspace<T: Field>(a: &[Vec<T>], ncols: usize) -> Vec<Vec<T>> {
    let mut m = a.to_vec();
    let pivots = rref(&mut m, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); ncols];
            v[f] = T::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = T::zero().sub(&m[r][f]);
            }
            v
        })
        .collect()
}

fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

struct Ray<T> {
    y: Vec<T>,
    /// Indices of processed constraints that vanish on the ray.
    zeros: Vec<usize>,
}

/// Extreme rays of the pointed cone `{y : H y ≥ 0}`, `H` of full column rank `r`.
pub fn extreme_rays<T: Field>(h: &[Vec<T>], r: usize) -> Vec<Vec<T>> {
    if r == 0 {
        return Vec::new();
    }
    // pick r independent rows for the initial simplicial cone
    let mut basis: Vec<usize> = Vec::new();
    let mut acc: Vec<Vec<T>> = Vec::new();
    for (i, row) in h.iter().enumerate() {
        let mut trial = acc.clone();
        trial.push(row.clone());
        if rank(&trial, r) > acc.len() {
            acc = trial;
            basis.push(i);
            if basis.len() == r {
                break;
            }
        }
    }
    assert_eq!(basis.len(), r, "constraint matrix must have full column rank");
    // rays are the columns of the inverse of the basis block
    let mut aug: Vec<Vec<T>> = acc
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut x = row.clone();
            x.extend((0..r).map(|j| if i == j { T::one() } else { T::zero() }));
            x
        })
        .collect();
    rref(&mut aug, r);
    let mut rays: Vec<Ray<T>> = (0..r)
        .map(|k| {
            let mut y: Vec<T> = (0..r).map(|i| aug[i][r + k].clone()).collect();
            T::normalize(&mut y);
            Ray { y, zeros: basis.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, &b)| b).collect() }
        })
        .collect();
    for (ci, row) in h.iter().enumerate() {
        if basis.contains(&ci) {
            continue;
        }
        let vals: Vec<T> = rays.iter().map(|ray| dot(row, &ray.y)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].sign() == Ordering::Greater).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| vals[k].sign() == Ordering::Less).collect();
        let mut next: Vec<Ray<T>> = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let common: Vec<usize> =
                    rays[p].zeros.iter().filter(|z| rays[q].zeros.contains(z)).copied().collect();
                if common.len() + 2 < r {
                    continue;
                }
                let adjacent = !(0..rays.len()).any(|k| {
                    k != p && k != q && common.iter().all(|z| rays[k].zeros.contains(z))
                });
                if !adjacent {
                    continue;
                }
                let mut y: Vec<T> = rays[q]
                    .y
                    .iter()
                    .zip(&rays[p].y)
                    .map(|(yq, yp)| vals[p].mul(yq).sub(&vals[q].mul(yp)))
                    .collect();
                T::normalize(&mut y);
                let mut zeros = common;
                zeros.push(ci);
                next.push(Ray { y, zeros });
            }
        }
        for (k, ray) in rays.into_iter().enumerate() {
            match vals[k].sign() {
                Ordering::Less => {}
                Ordering::Equal => {
                    let mut ray = ray;
                    ray.zeros.push(ci);
                    next.push(ray);
                }
                Ordering::Greater => next.push(ray),
            }
        }
        rays = next;
    }
    rays.into_iter().map(|r| r.y).collect()
}

/// Extreme points of `{x ∈ R^n : x ≥ 0, Σx = 1, Ax = 0}`.
pub fn polytope_vertices<T: Field>(a: &[Vec<T>], n: usize) -> Vec<Vec<T>> {
    let basis = nullspace(a, n);
    let r = basis.len();
    if r == 0 {
        return Vec::new();
    }
    // H[j][k] = basis[k][j]: x = H y
    let h: Vec<Vec<T>> = (0..n).map(|j| basis.iter().map(|b| b[j].clone()).collect()).collect();
    let mut out: Vec<Vec<T>> = Vec::new();
    for y in extreme_rays(&h, r) {
        let mut x: Vec<T> = h.iter().map(|row| dot(row, &y)).collect();
        for v in x.iter_mut() {
            if v.is_zero_val() {
                *v = T::zero();
            }
        }
        let s = x.iter().fold(T::zero(), |acc, v| acc.add(v));
        if s.sign() != Ordering::Greater {
            continue;
        }
        let x: Vec<T> = x.iter().map(|v| v.div(&s)).collect();
        let dup = out.iter().any(|o| {
            o.iter().zip(&x).all(|(p, q)| p.sub(q).is_zero_val())
        });
        if !dup {
            out.push(x);
        }
    }
    out
}

/// Affine dimension of a finite point set.
pub fn affine_dim(points: &[Vec<f64>]) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let n = points[0].len();
    let diffs: Vec<Vec<Approx>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(&points[0]).map(|(a, b)| Approx(a - b)).collect())
        .collect();
    rank(&diffs, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: i64) -> BigRational {
        BigRational::from_i64(x)
    }

    #[test]
    fn full_simplex_vertices() {
        let v = polytope_vertices::<BigRational>(&[], 3);
        assert_eq!(v.len(), 3);
        for (k, p) in v.iter().enumerate() {
            assert_eq!(p.iter().filter(|x| **x == q(1)).count(), 1, "vertex {k}");
        }
    }

    #[test]
    fn eigenvector_of_pf_pair() {
        // (B - 2) x = 0 for B = [[1,1],[1,1]]
        let a = vec![vec![q(-1), q(1)], vec![q(1), q(-1)]];
        let v = polytope_vertices(&a, 2);
        let half = BigRational::new(1.into(), 2.into());
        assert_eq!(v, vec![vec![half.clone(), half]]);
    }

    #[test]
    fn square_cross_section() {
        // x0 + x1 = x2 + x3 on the 3-simplex: vertices are the four edges' midpoints
        let a = vec![vec![q(1), q(1), q(-1), q(-1)]];
        let v = polytope_vertices(&a, 4);
        assert_eq!(v.len(), 4);
        let f: Vec<Vec<f64>> = v.iter().map(|p| p.iter().map(Field::to_f64).collect()).collect();
        assert_eq!(affine_dim(&f), 2);
        let approx = polytope_vertices(
            &[vec![Approx(1.0), Approx(1.0), Approx(-1.0), Approx(-1.0)]],
            4,
        );
        assert_eq!(approx.len(), 4);
    }

    #[test]
    fn empty_when_only_zero_solves() {
        let a = vec![vec![q(1), q(0)], vec![q(0), q(1)]];
        assert!(polytope_vertices(&a, 2).is_empty());
        // x0 = -x1 forces x = 0 on the nonnegative orthant
        let b = vec![vec![q(1), q(1)]];
        assert!(polytope_vertices(&b, 2).is_empty());
    }
}
