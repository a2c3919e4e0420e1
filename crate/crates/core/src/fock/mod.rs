//! Truncated Fock representation, used as a brute-force oracle.
//!
//! The basis consists of the normal-form words of multidegree `n ≤ K·1`. Creation
//! operators drop whatever leaves the truncation, so every identity is only checked on
//! the interior: the domain vectors whose computation never climbs above degree `K`.

pub mod oracle;
pub mod sparse;

use std::collections::HashMap;

use serde::Serialize;

use crate::colors::{ColorSet, MultiIndex};
use crate::equilibrium::inner_product;
use crate::error::{Error, Result};
use crate::model::words::{Gen, Word};
use crate::model::Instance;
use crate::par::Exec;

pub use oracle::{check_kms, oracle_state_eval, KmsReport, OracleValue, StateOracle};
pub use sparse::Sparse;

pub const BASIS_CAP: usize = 1_000_000;

/// Operator together with its degree bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Op {
    pub m: Sparse<i64>,
    /// Net degree change on vectors it does not kill.
    pub shift: Vec<i64>,
    /// Highest degree reached above the input degree while applying it.
    pub up: Vec<i64>,
}

impl Op {
    fn level(m: Sparse<i64>, n: usize) -> Self {
        Op { m, shift: vec![0; n], up: vec![0; n] }
    }

    /// `self · other`: `other` acts first.
    pub fn then(&self, other: &Op) -> Op {
        let up = other
            .up
            .iter()
            .zip(other.shift.iter().zip(&self.up))
            .map(|(&u, (&s, &a))| u.max(s + a))
            .collect();
        let shift = self.shift.iter().zip(&other.shift).map(|(a, b)| a + b).collect();
        Op { m: self.m.mul(&other.m), shift, up }
    }

    fn merge(&self, other: &Op, m: Sparse<i64>) -> Op {
        Op {
            m,
            shift: self.shift.clone(),
            up: self.up.iter().zip(&other.up).map(|(a, b)| *a.max(b)).collect(),
        }
    }

    pub fn plus(&self, other: &Op) -> Op {
        self.merge(other, self.m.add(&other.m))
    }

    pub fn minus(&self, other: &Op) -> Op {
        self.merge(other, self.m.sub(&other.m))
    }

    pub fn scaled(&self, s: i64) -> Op {
        Op { m: self.m.scale(s), ..self.clone() }
    }

    pub fn adjoint(&self) -> Op {
        // t* first lowers then returns, so it never climbs above the input degree
        let shift: Vec<i64> = self.shift.iter().map(|s| -s).collect();
        let up = self.up.iter().zip(&self.shift).map(|(u, s)| (u - s).max(0)).collect();
        Op { m: self.m.transpose(), shift, up }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectionKind {
    /// `p_n`, onto the degree-`n` summand.
    P { n: Vec<u32> },
    /// `P_i`.
    Pi { color: usize },
    /// `P_{k·i}`.
    Pki { k: u32, color: usize },
    PF { f: ColorSet },
    QF { f: ColorSet },
    /// `Q_F^n`.
    QFn { f: ColorSet, n: Vec<u32> },
    /// `R_F^m` for the window `k`.
    R { f: ColorSet, m: Vec<u32>, k: u32 },
}

#[derive(Debug, Clone)]
pub struct TruncatedFock {
    inst: Instance,
    k: u32,
    basis: Vec<Word>,
    index: HashMap<Word, usize>,
    degrees: Vec<MultiIndex>,
    atoms: Vec<usize>,
    /// `creation[i][j]` is `t(x_{i,j})`.
    creation: Vec<Vec<Op>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub max_residual: f64,
    /// Domain vectors on which the identity was checked.
    pub interior: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    #[serde(rename = "K")]
    pub k: u32,
    pub basis_size: usize,
    pub checks: Vec<IdentityCheck>,
    pub all_pass: bool,
}

pub fn build_fock(inst: &Instance, k: u32) -> Result<TruncatedFock> {
    if k == 0 {
        return Err(Error::InvalidInput("truncation K must be at least 1".into()));
    }
    inst.require_factorization()?;
    let n = inst.rank();
    let mut basis = inst.roots();
    let mut index: HashMap<Word, usize> =
        basis.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let mut next = 0;
    while next < basis.len() {
        let w = basis[next].clone();
        next += 1;
        let d = inst.degree(&w);
        for i in 0..n {
            if d.0[i] >= k {
                continue;
            }
            for j in 0..inst.unit_sizes()[i] as usize {
                if let Some(x) = inst.create(Gen::new(i, j), &w)? {
                    if !index.contains_key(&x) {
                        if basis.len() >= BASIS_CAP {
                            return Err(Error::SizeCap(basis.len() + 1, BASIS_CAP));
                        }
                        index.insert(x.clone(), basis.len());
                        basis.push(x);
                    }
                }
            }
        }
    }
    let mut keyed: Vec<(MultiIndex, Word)> = basis.into_iter().map(|w| (inst.degree(&w), w)).collect();
    keyed.sort();
    let degrees: Vec<MultiIndex> = keyed.iter().map(|(d, _)| d.clone()).collect();
    let basis: Vec<Word> = keyed.into_iter().map(|(_, w)| w).collect();
    let index: HashMap<Word, usize> = basis.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    let atoms = basis.iter().map(|w| inst.atom_of(w)).collect();
    let mut fock = TruncatedFock { inst: inst.clone(), k, basis, index, degrees, atoms, creation: Vec::new() };
    fock.creation = (0..n)
        .map(|i| {
            (0..inst.unit_sizes()[i] as usize)
                .map(|j| fock.monomial(&[Gen::new(i, j)]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(fock)
}

impl TruncatedFock {
    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Word] {
        &self.basis
    }

    pub fn degrees(&self) -> &[MultiIndex] {
        &self.degrees
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        self.index.get(w).copied()
    }

    /// Number of basis vectors in each multidegree, in basis order.
    pub fn sizes_by_degree(&self) -> Vec<(MultiIndex, usize)> {
        let mut out: Vec<(MultiIndex, usize)> = Vec::new();
        for d in &self.degrees {
            match out.last_mut() {
                Some((e, c)) if e == d => *c += 1,
                _ => out.push((d.clone(), 1)),
            }
        }
        out
    }

    fn n(&self) -> usize {
        self.inst.rank()
    }

    fn identity_op(&self) -> Op {
        Op::level(Sparse::identity(self.dim()), self.n())
    }

    fn zero_op(&self) -> Op {
        Op::level(Sparse::zeros(self.dim()), self.n())
    }

    pub fn creation(&self, g: Gen) -> &Op {
        &self.creation[g.color][g.index]
    }

    /// `t(x_{g_1}) ⋯ t(x_{g_m})` on the truncation.
    pub fn monomial(&self, gens: &[Gen]) -> Result<Op> {
        let mut d = vec![0i64; self.n()];
        for g in gens {
            d[g.color] += 1;
        }
        let mut targets = Vec::with_capacity(self.dim());
        for w in &self.basis {
            targets.push(match self.inst.apply_monomial(gens, w)? {
                Some(x) => self.index.get(&x).copied(),
                None => None,
            });
        }
        Ok(Op { m: Sparse::from_map(self.dim(), |c| targets[c]), up: d.clone(), shift: d })
    }

    /// `t(x_p)` for a basis path `p`; empty paths give vertex projections.
    pub fn path_op(&self, p: &Word) -> Result<Op> {
        let d: Vec<i64> = self.inst.degree(p).0.iter().map(|&x| i64::from(x)).collect();
        let mut targets = Vec::with_capacity(self.dim());
        for w in &self.basis {
            targets.push(match self.inst.apply_path(p, w)? {
                Some(x) => self.index.get(&x).copied(),
                None => None,
            });
        }
        Ok(Op { m: Sparse::from_map(self.dim(), |c| targets[c]), up: d.clone(), shift: d })
    }

    /// `π(a)` for a function on atoms.
    pub fn diag(&self, a: &[i64]) -> Op {
        let d: Vec<i64> = self.atoms.iter().map(|&x| a[x]).collect();
        Op::level(Sparse::diag(&d), self.n())
    }

    fn degree_projection(&self, keep: impl Fn(&MultiIndex) -> bool) -> Op {
        let d: Vec<i64> = self.degrees.iter().map(|n| i64::from(keep(n))).collect();
        Op::level(Sparse::diag(&d), self.n())
    }

    /// Basis words of degree exactly `n`.
    pub fn words_of_degree(&self, n: &MultiIndex) -> Vec<&Word> {
        let lo = self.degrees.partition_point(|d| d < n);
        let hi = self.degrees.partition_point(|d| d <= n);
        self.basis[lo..hi].iter().collect()
    }

    /// `Σ_{ℓ(μ)=n} t(x_μ) X t(x_μ)*`.
    fn conjugate_sum(&self, n: &MultiIndex, x: &Op) -> Result<Op> {
        let mut acc = self.zero_op();
        for w in self.words_of_degree(n) {
            let t = self.path_op(w)?;
            acc = acc.plus(&t.then(x).then(&t.adjoint()));
        }
        Ok(acc)
    }

    fn check_index(&self, n: &[u32]) -> Result<MultiIndex> {
        if n.len() != self.n() || n.iter().any(|&x| x > self.k) {
            return Err(Error::OutOfTruncation(format!("degree {n:?} with K = {}", self.k)));
        }
        Ok(MultiIndex(n.to_vec()))
    }

    fn check_color(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::OutOfTruncation(format!("colour {}", i + 1)));
        }
        Ok(())
    }

    fn p_i(&self, i: usize) -> Op {
        let mut acc = self.zero_op();
        for t in &self.creation[i] {
            acc = acc.plus(&t.then(&t.adjoint()));
        }
        acc
    }

    fn q_f(&self, f: ColorSet) -> Op {
        f.iter().fold(self.identity_op(), |acc, i| acc.then(&self.identity_op().minus(&self.p_i(i))))
    }

    pub fn projection_op(&self, kind: &ProjectionKind) -> Result<Op> {
        let full = self.inst.full();
        let check_set = |f: &ColorSet| {
            if f.is_subset(full) {
                Ok(())
            } else {
                Err(Error::OutOfTruncation(format!("colour set {f}")))
            }
        };
        match kind {
            ProjectionKind::P { n } => {
                let n = self.check_index(n)?;
                Ok(self.degree_projection(|d| *d == n))
            }
            ProjectionKind::Pi { color } => {
                self.check_color(*color)?;
                Ok(self.p_i(*color))
            }
            ProjectionKind::Pki { k, color } => {
                self.check_color(*color)?;
                if *k > self.k + 1 {
                    return Err(Error::OutOfTruncation(format!("k = {k} with K = {}", self.k)));
                }
                let mut n = MultiIndex::zero(self.n());
                n.0[*color] = *k;
                if *k > self.k {
                    return Ok(self.zero_op());
                }
                self.conjugate_sum(&n, &self.identity_op())
            }
            ProjectionKind::PF { f } => {
                check_set(f)?;
                Ok(f.iter().fold(self.identity_op(), |acc, i| acc.then(&self.p_i(i))))
            }
            ProjectionKind::QF { f } => {
                check_set(f)?;
                Ok(self.q_f(*f))
            }
            ProjectionKind::QFn { f, n } => {
                check_set(f)?;
                let n = self.check_index(n)?;
                self.conjugate_sum(&n, &self.q_f(*f))
            }
            ProjectionKind::R { f, m, k } => {
                check_set(f)?;
                let m = self.check_index(m)?;
                let mut x = self.q_f(*f);
                for i in f.complement(self.n()).iter() {
                    let p = self.projection_op(&ProjectionKind::Pki { k: k + 1, color: i })?;
                    x = p.then(&x);
                }
                self.conjugate_sum(&m, &x)
            }
        }
    }

    pub fn projection(&self, kind: &ProjectionKind) -> Result<Sparse<i64>> {
        Ok(self.projection_op(kind)?.m)
    }

    /// Compression to the degree-preserving blocks.
    pub fn conditional_expectation(&self, x: &Sparse<i64>) -> Sparse<i64> {
        x.filter(|r, c| self.degrees[r] == self.degrees[c])
    }

    /// Basis indices `w` with `deg(w) + up ≤ K·1`.
    pub fn interior(&self, up: &[i64]) -> Vec<usize> {
        (0..self.dim())
            .filter(|&w| self.degrees[w].0.iter().zip(up).all(|(&d, &u)| i64::from(d) + u.max(0) <= i64::from(self.k)))
            .collect()
    }

    fn compare(&self, name: String, lhs: &Op, rhs: &Op) -> IdentityCheck {
        let up: Vec<i64> = lhs.up.iter().zip(&rhs.up).map(|(a, b)| *a.max(b)).collect();
        let interior = self.interior(&up);
        let max_residual = lhs.m.max_diff_on(&rhs.m, &interior);
        IdentityCheck { name, max_residual, interior: interior.len(), pass: max_residual == 0.0 }
    }

    /// Every degree `n` with `supp n ⊆ f` and `n ≤ bound·1`.
    fn degrees_in(&self, f: ColorSet, bound: u32) -> Vec<MultiIndex> {
        MultiIndex::box_iter(&MultiIndex::scaled_indicator(self.n(), f, bound))
    }

    /// The operator identities on the interior of the truncation.
    pub fn check_identities(&self, exec: Exec) -> Result<IdentityReport> {
        type Job<'a> = Box<dyn Fn() -> Result<Vec<IdentityCheck>> + Send + Sync + 'a>;
        let jobs: Vec<Job> = vec![
            Box::new(|| self.check_tt()),
            Box::new(|| self.check_sum_tt()),
            Box::new(|| self.check_pf()),
            Box::new(|| self.check_nica()),
            Box::new(|| self.check_lemma_proj()),
            Box::new(|| self.check_p_r()),
            Box::new(|| self.check_pqr()),
        ];
        let results = exec.map(&jobs, |job| job());
        let mut checks = Vec::new();
        for r in results {
            checks.extend(r?);
        }
        let all_pass = checks.iter().all(|c| c.pass);
        Ok(IdentityReport { k: self.k, basis_size: self.dim(), checks, all_pass })
    }

    /// `t(x_{i,j})* t(x_{i,l}) = δ_{j,l} π(⟨x_{i,j}, x_{i,l}⟩)`.
    fn check_tt(&self) -> Result<Vec<IdentityCheck>> {
        let mut worst = Vec::new();
        for i in 0..self.n() {
            let mut acc = IdentityCheck { name: format!("t*t, colour {}", i + 1), max_residual: 0.0, interior: 0, pass: true };
            for (j, tj) in self.creation[i].iter().enumerate() {
                for (l, tl) in self.creation[i].iter().enumerate() {
                    let lhs = tj.adjoint().then(tl);
                    let rhs = if j == l {
                        let ip = inner_product(&self.inst, &[Gen::new(i, j)], &[Gen::new(i, l)])?;
                        self.diag(&ip.iter().map(|&x| x as i64).collect::<Vec<_>>())
                    } else {
                        self.zero_op()
                    };
                    let c = self.compare(String::new(), &lhs, &rhs);
                    acc.max_residual = acc.max_residual.max(c.max_residual);
                    acc.interior = c.interior;
                }
            }
            acc.pass = acc.max_residual == 0.0;
            worst.push(acc);
        }
        Ok(worst)
    }

    /// `Σ_j t(x_{i,j}) t(x_{i,j})* = Σ{p_n | n ≥ e_i}` and its powers `P_{k·i}`.
    fn check_sum_tt(&self) -> Result<Vec<IdentityCheck>> {
        let mut out = Vec::new();
        for i in 0..self.n() {
            let rhs = self.degree_projection(|d| d.0[i] >= 1);
            out.push(self.compare(format!("sum t t* = P_{}", i + 1), &self.p_i(i), &rhs));
            let mut acc = IdentityCheck { name: format!("P_(k*{})", i + 1), max_residual: 0.0, interior: self.dim(), pass: true };
            for k in 1..=self.k {
                let lhs = self.projection_op(&ProjectionKind::Pki { k, color: i })?;
                let rhs = self.degree_projection(|d| d.0[i] >= k);
                let c = self.compare(String::new(), &lhs, &rhs);
                acc.max_residual = acc.max_residual.max(c.max_residual);
            }
            acc.pass = acc.max_residual == 0.0;
            out.push(acc);
        }
        Ok(out)
    }

    /// `P_F = Σ{p_n | n ≥ 1_F} = Σ_{ℓ(μ)=1_F} t(x_μ) t(x_μ)*`, and `Q_∅ = 1`.
    fn check_pf(&self) -> Result<Vec<IdentityCheck>> {
        let mut acc = IdentityCheck { name: "P_F".into(), max_residual: 0.0, interior: self.dim(), pass: true };
        for f in ColorSet::all(self.n()) {
            let lhs = self.projection_op(&ProjectionKind::PF { f })?;
            let by_degree = self.degree_projection(|d| f.iter().all(|i| d.0[i] >= 1));
            let one_f = MultiIndex::scaled_indicator(self.n(), f, 1);
            let by_frame = self.conjugate_sum(&one_f, &self.identity_op())?;
            for rhs in [by_degree, by_frame] {
                let c = self.compare(String::new(), &lhs, &rhs);
                acc.max_residual = acc.max_residual.max(c.max_residual);
            }
        }
        acc.pass = acc.max_residual == 0.0;
        let q_empty = self.compare("Q_{} = 1".into(), &self.q_f(ColorSet::EMPTY), &self.identity_op());
        Ok(vec![acc, q_empty])
    }

    /// Nica covariance on the frame projections: `P_{≥n} P_{≥m} = P_{≥n∨m}`.
    fn check_nica(&self) -> Result<Vec<IdentityCheck>> {
        let all = self.degrees_in(self.inst.full(), self.k);
        let frames: HashMap<MultiIndex, Op> = all
            .iter()
            .map(|n| Ok((n.clone(), self.conjugate_sum(n, &self.identity_op())?)))
            .collect::<Result<_>>()?;
        let mut acc = IdentityCheck { name: "Nica covariance".into(), max_residual: 0.0, interior: self.dim(), pass: true };
        for n in &all {
            for m in &all {
                let lhs = frames[n].then(&frames[m]);
                let c = self.compare(String::new(), &lhs, &frames[&n.join(m)]);
                acc.max_residual = acc.max_residual.max(c.max_residual);
            }
        }
        acc.pass = acc.max_residual == 0.0;
        Ok(vec![acc])
    }

    fn qfn(&self, f: ColorSet, n: &MultiIndex) -> Result<Op> {
        self.projection_op(&ProjectionKind::QFn { f, n: n.0.clone() })
    }

    /// `Q_F^n Q_C^m = δ_{n, m_F} Q_C^m` for `∅ ≠ F ⊆ C`, `n ∈ F`, `m ∈ C`.
    fn check_lemma_proj(&self) -> Result<Vec<IdentityCheck>> {
        let n_col = self.n();
        let mut acc = IdentityCheck { name: "Q_F^n Q_C^m".into(), max_residual: 0.0, interior: 0, pass: true };
        let mut cache: HashMap<(ColorSet, MultiIndex), Op> = HashMap::new();
        let mut get = |f: ColorSet, n: &MultiIndex| -> Result<Op> {
            if let Some(x) = cache.get(&(f, n.clone())) {
                return Ok(x.clone());
            }
            let x = self.qfn(f, n)?;
            cache.insert((f, n.clone()), x.clone());
            Ok(x)
        };
        let bound = self.k.saturating_sub(1);
        for c in ColorSet::all(n_col) {
            for f in ColorSet::all(n_col).filter(|f| !f.is_empty() && f.is_subset(c)) {
                for n in self.degrees_in(f, bound) {
                    for m in self.degrees_in(c, bound) {
                        let lhs = get(f, &n)?.then(&get(c, &m)?);
                        let qcm = get(c, &m)?;
                        let rhs = if m.restrict(f) == n { qcm } else { self.zero_op().merge(&qcm, Sparse::zeros(self.dim())) };
                        let r = self.compare(String::new(), &lhs, &rhs);
                        acc.max_residual = acc.max_residual.max(r.max_residual);
                        acc.interior = acc.interior.max(r.interior);
                    }
                }
            }
        }
        acc.pass = acc.max_residual == 0.0;
        Ok(vec![acc])
    }

    /// `Q_F^n t(ξ_m) = t(ξ_m) Q_F^{n − m_F}` when `n ≥ m_F`, and `0` otherwise.
    fn check_p_r(&self) -> Result<Vec<IdentityCheck>> {
        let n_col = self.n();
        let mut acc = IdentityCheck { name: "Q_F^n t(x)".into(), max_residual: 0.0, interior: 0, pass: true };
        let bound = self.k.saturating_sub(1);
        let words: Vec<&Word> = (0..self.dim())
            .filter(|&w| self.degrees[w].0.iter().all(|&d| d <= 1))
            .map(|w| &self.basis[w])
            .collect();
        for f in ColorSet::all(n_col).filter(|f| !f.is_empty()) {
            for n in self.degrees_in(f, bound) {
                let q = self.qfn(f, &n)?;
                for w in &words {
                    let t = self.path_op(w)?;
                    let lhs = q.then(&t);
                    let mf = self.inst.degree(w).restrict(f);
                    let rhs = match n.checked_sub(&mf) {
                        Some(rest) => t.then(&self.qfn(f, &rest)?),
                        None => Op { m: Sparse::zeros(self.dim()), ..lhs.clone() },
                    };
                    let r = self.compare(String::new(), &lhs, &rhs);
                    acc.max_residual = acc.max_residual.max(r.max_residual);
                    acc.interior = acc.interior.max(r.interior);
                }
            }
        }
        acc.pass = acc.max_residual == 0.0;
        Ok(vec![acc])
    }

    /// `R_F^m = Σ{(−1)^{|C∖F|} Q_C^{m+w} | w ≤ k·1_{C∖F}, C ⊇ F}`.
    fn check_pqr(&self) -> Result<Vec<IdentityCheck>> {
        let n_col = self.n();
        let mut acc = IdentityCheck { name: "R_F^m".into(), max_residual: 0.0, interior: 0, pass: true };
        for k in 0..self.k {
            for f in ColorSet::all(n_col) {
                for m in self.degrees_in(f, k) {
                    let lhs = self.projection_op(&ProjectionKind::R { f, m: m.0.clone(), k })?;
                    let mut rhs = Op { m: Sparse::zeros(self.dim()), ..lhs.clone() };
                    for c in f.supersets(n_col) {
                        let sign = if (c.len() - f.len()) % 2 == 0 { 1 } else { -1 };
                        for w in self.degrees_in(c.difference(f), k) {
                            rhs = rhs.plus(&self.qfn(c, &m.add(&w))?.scaled(sign));
                        }
                    }
                    let r = self.compare(String::new(), &lhs, &rhs);
                    acc.max_residual = acc.max_residual.max(r.max_residual);
                    acc.interior = acc.interior.max(r.interior);
                }
            }
        }
        acc.pass = acc.max_residual == 0.0;
        Ok(vec![acc])
    }

    /// Triplet dumps of the creation operators and `π(δ_α)`, keyed by a file stem.
    pub fn dump_ops(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (i, row) in self.creation.iter().enumerate() {
            for (j, t) in row.iter().enumerate() {
                out.push((format!("t_{}_{}", i + 1, j + 1), t.m.triplets()));
            }
        }
        for a in 0..self.inst.dim() {
            let mut e = vec![0; self.inst.dim()];
            e[a] = 1;
            out.push((format!("pi_{}", a + 1), self.diag(&e).m.triplets()));
        }
        out
    }
}
