//! Direct-summation evaluation of equilibrium states, independent of the Neumann closed
//! form, and a KMS residual check built on it.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::beta::Beta;
use crate::colors::{ColorSet, MultiIndex};
use crate::entropy::reachable_support;
use crate::equilibrium::{Component, EquilibriumStateHandle, Monomial, MonomialQuery};
use crate::error::{Error, Result};
use crate::linalg::spectral_radius_on;
use crate::model::words::{Gen, Word};
use crate::model::Instance;

/// A word `x_μ ζ_α` with its tail degree `ℓ(μ)` and the atom `α` it was grown from.
#[derive(Debug, Clone)]
struct Tail {
    word: Word,
    degree: MultiIndex,
    atom: usize,
}

/// Words `x_μ ζ_α` for every charged atom `α`, with `ℓ(μ) ∈ f` and `ℓ(μ) ≤ bound`.
fn grow(inst: &Instance, tau: &[f64], f: ColorSet, bound: &[u32]) -> Result<Vec<Tail>> {
    let mut out = Vec::new();
    for (a, &t) in tau.iter().enumerate() {
        if t == 0.0 {
            continue;
        }
        let start = out.len();
        let mut seen = HashSet::new();
        let root = inst.zeta(a);
        seen.insert(root.clone());
        out.push(Tail { word: root, degree: MultiIndex::zero(inst.rank()), atom: a });
        let mut next = start;
        while next < out.len() {
            let cur = out[next].clone();
            next += 1;
            for i in f.iter().filter(|&i| cur.degree.0[i] < bound[i]) {
                for j in 0..inst.unit_sizes()[i] as usize {
                    if let Some(w) = inst.create(Gen::new(i, j), &cur.word)? {
                        if seen.insert(w.clone()) {
                            if out.len() >= super::BASIS_CAP {
                                return Err(Error::SizeCap(out.len() + 1, super::BASIS_CAP));
                            }
                            let mut d = cur.degree.clone();
                            d.0[i] += 1;
                            out.push(Tail { word: w, degree: d, atom: a });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleValue {
    /// `S_K / c_K`.
    pub value: f64,
    /// Bound on `|value − exact|`, `None` without a convergence certificate.
    pub tail_bound: Option<f64>,
    pub certified: bool,
    /// Truncated normalizers `c_K`, one per component.
    pub normalizers: Vec<f64>,
    pub terms: usize,
}

/// Rigorous bound on `Σ_{n ∈ F, n ≰ K·1} e^{−|n|β} τ(Φ_n(1))`.
///
/// With `u = Π_{i∈F} (I − M_i/s_i)^{−1} 1` on the closure of `supp τ` one has
/// `M_i u ≤ s_i u`, hence each term is at most `Π (s_i e^{−β})^{n_i} ⟨u, τ⟩ / min u`.
pub fn tail_bound(inst: &Instance, tau: &[f64], beta: Beta, f: ColorSet, k: u32) -> Option<f64> {
    if f.is_empty() {
        return Some(0.0);
    }
    let r = reachable_support(inst, tau, f);
    let x = beta.exp();
    let rho: Vec<f64> = f.iter().map(|i| spectral_radius_on(inst.b(i), &r)).collect();
    if rho.iter().any(|&p| p >= x) {
        return None;
    }
    let m: Vec<DMatrix<f64>> = f.iter().map(|i| inst.b(i).principal(&r).to_f64().transpose()).collect();
    let dim = r.len();
    let tau_r: Vec<f64> = r.iter().map(|&v| tau[v]).collect();
    let mut best: Option<f64> = None;
    for theta in [1e-9, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.25, 0.5] {
        let s: Vec<f64> = rho.iter().map(|&p| p + theta * (x - p)).collect();
        let mut u = DVector::from_element(dim, 1.0);
        let mut ok = true;
        for (mi, si) in m.iter().zip(&s) {
            let a = DMatrix::<f64>::identity(dim, dim) - mi / *si;
            match a.lu().solve(&u) {
                Some(v) => u = v,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || u.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            continue;
        }
        if m.iter().zip(&s).any(|(mi, si)| (mi * &u).iter().zip(u.iter()).any(|(a, b)| *a > si * b * (1.0 + 1e-9))) {
            continue;
        }
        let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let mass: f64 = u.iter().zip(&tau_r).map(|(a, b)| a * b).sum::<f64>() / umin;
        let q: Vec<f64> = s.iter().map(|si| si / x).collect();
        let all: f64 = q.iter().map(|qi| 1.0 / (1.0 - qi)).product();
        let in_box: f64 = q.iter().map(|qi| (1.0 - qi.powi(k as i32 + 1)) / (1.0 - qi)).product();
        let b = mass * (all - in_box).max(0.0) * (1.0 + 1e-9);
        best = Some(best.map_or(b, |c: f64| c.min(b)));
    }
    best
}

/// `(Σ_tails weight · ⟨query⟩, scale)` for one term; `image(μ)` gives the interned word
/// `x_μ w` for every tail `w`.
fn term_value(
    inst: &Instance,
    beta: Beta,
    tails: &[Tail],
    tau: &[f64],
    m: &Monomial,
    image: impl Fn(&[Gen]) -> Result<Arc<Vec<Option<u32>>>>,
) -> Result<(f64, f64)> {
    match m {
        Monomial::Diag(a) => {
            if a.len() != inst.dim() {
                return Err(Error::InvalidInput("diag query has the wrong length".into()));
            }
            let s = tails
                .iter()
                .map(|t| tau[t.atom] * beta.weight(t.degree.total()) * a[inst.atom_of(&t.word)])
                .sum();
            Ok((s, a.iter().fold(0.0f64, |x, y| x.max(y.abs()))))
        }
        Monomial::Pair { mu, nu } => {
            inst.check_monomial(mu)?;
            inst.check_monomial(nu)?;
            let deg = |g: &[Gen]| {
                let mut d = MultiIndex::zero(inst.rank());
                g.iter().for_each(|x| d.0[x.color] += 1);
                d
            };
            let (dm, dn) = (deg(mu), deg(nu));
            if dm != dn {
                return Ok((0.0, 0.0));
            }
            let w = beta.weight(dm.total());
            let (xm, xn) = (image(mu)?, image(nu)?);
            let s = tails
                .iter()
                .zip(xm.iter().zip(xn.iter()))
                .filter(|(_, (a, b))| a.is_some() && a == b)
                .map(|(t, _)| tau[t.atom] * beta.weight(t.degree.total()))
                .sum::<f64>();
            Ok((w * s, w))
        }
    }
}

struct ComponentTails {
    tails: Vec<Tail>,
    c_k: f64,
    tail_c: Option<f64>,
}

#[derive(Default)]
struct Memo {
    ids: HashMap<Word, u32>,
    images: HashMap<(usize, Vec<Gen>), Arc<Vec<Option<u32>>>>,
}

/// Truncated tails of every component of a state, built once and reused across queries.
/// Monomial images on the tails are memoized.
pub struct StateOracle<'a> {
    inst: &'a Instance,
    handle: &'a EquilibriumStateHandle,
    parts: Vec<ComponentTails>,
    memo: Mutex<Memo>,
}

impl<'a> StateOracle<'a> {
    pub fn new(inst: &'a Instance, handle: &'a EquilibriumStateHandle, k: u32) -> Result<Self> {
        let beta = handle.beta;
        let bound = vec![k; inst.rank()];
        let parts = handle
            .components
            .iter()
            .map(|comp| {
                let tails = grow(inst, &comp.tau, comp.f, &bound)?;
                let c_k = tails.iter().map(|t| comp.tau[t.atom] * beta.weight(t.degree.total())).sum();
                let tail_c = tail_bound(inst, &comp.tau, beta, comp.f, k);
                Ok(ComponentTails { tails, c_k, tail_c })
            })
            .collect::<Result<_>>()?;
        Ok(StateOracle { inst, handle, parts, memo: Mutex::default() })
    }

    /// Direct summation of the state formula over the stored tails.
    pub fn eval(&self, q: &MonomialQuery) -> Result<OracleValue> {
        let beta = self.handle.beta;
        let mut value = 0.0;
        let mut bound = Some(0.0);
        for (part, (comp, p)) in self.handle.components.iter().zip(&self.parts).enumerate() {
            let mut v_comp = 0.0;
            let mut err = 0.0;
            for (coef, m) in &q.terms {
                let image = |g: &[Gen]| self.image(part, g);
                let (s, scale) = term_value(self.inst, beta, &p.tails, &comp.tau, m, image)?;
                let v = s / p.c_k;
                v_comp += coef * v;
                if let Some(tc) = p.tail_c {
                    err += coef.abs() * (scale + v.abs()) * tc / p.c_k;
                }
            }
            value += comp.weight * v_comp;
            bound = match (bound, p.tail_c) {
                (Some(b), Some(_)) => Some(b + comp.weight * err),
                _ => None,
            };
        }
        Ok(OracleValue {
            value,
            certified: bound.is_some(),
            tail_bound: bound,
            normalizers: self.parts.iter().map(|p| p.c_k).collect(),
            terms: self.parts.iter().map(|p| p.tails.len()).sum(),
        })
    }
}

impl StateOracle<'_> {
    fn image(&self, part: usize, g: &[Gen]) -> Result<Arc<Vec<Option<u32>>>> {
        let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(x) = memo.images.get(&(part, g.to_vec())) {
            return Ok(x.clone());
        }
        let mut out = Vec::with_capacity(self.parts[part].tails.len());
        for t in &self.parts[part].tails {
            out.push(match self.inst.apply_monomial(g, &t.word)? {
                Some(w) => {
                    let next = memo.ids.len() as u32;
                    Some(*memo.ids.entry(w).or_insert(next))
                }
                None => None,
            });
        }
        let out = Arc::new(out);
        memo.images.insert((part, g.to_vec()), out.clone());
        Ok(out)
    }
}

/// Direct summation of the state formula over tails `ℓ(μ) ≤ K·1`, `ℓ(μ) ∈ F`.
pub fn oracle_state_eval(
    inst: &Instance,
    handle: &EquilibriumStateHandle,
    q: &MonomialQuery,
    k: u32,
) -> Result<OracleValue> {
    StateOracle::new(inst, handle, k)?.eval(q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmsReport {
    pub degree_bound: Vec<u32>,
    /// `max |φ(t(a)·t(b)t(c)*) − e^{−|a|β} φ(t(b)t(c)*·t(a))|`.
    pub max_residual: f64,
    /// `max |φ(t(x_μ)t(x_ν)*)|` over `ℓ(μ) ≠ ℓ(ν)`, which `φ∘E = φ` forces to vanish.
    pub gauge_residual: f64,
    pub tolerance: f64,
    pub triples: usize,
    pub pass: bool,
}

/// Per-component density `ρ_w = τ_α e^{−|ℓ(w)|β}` on words with `F`-degree in a box and
/// `F^c`-degree fixed, and a table of annihilations `t(x_p)* w`.
struct Window {
    weights: Vec<f64>,
    f_degree: Vec<MultiIndex>,
    /// `ann[p][w]`: interned id of `t(x_p)* w`.
    ann: Vec<Vec<Option<u32>>>,
    norm: f64,
}

impl Window {
    fn build(
        inst: &Instance,
        comp: &Component,
        beta: Beta,
        f: ColorSet,
        bound: &MultiIndex,
        paths: &[Word],
        intern: &mut HashMap<Word, u32>,
    ) -> Result<Self> {
        let n = inst.rank();
        let k_f = 2 * f.iter().map(|i| bound.0[i]).max().unwrap_or(0) + 2;
        let cap: Vec<u32> = (0..n).map(|i| if f.contains(i) { k_f } else { bound.0[i] + 1 }).collect();
        let words = grow(inst, &comp.tau, inst.full(), &cap)?;
        let words: Vec<Tail> = words
            .into_iter()
            .filter(|t| f.complement(n).iter().all(|i| t.degree.0[i] == cap[i]))
            .collect();
        let weights: Vec<f64> =
            words.iter().map(|t| comp.tau[t.atom] * beta.weight(t.degree.total())).collect();
        let norm = weights.iter().sum();
        let id = |w: Word, intern: &mut HashMap<Word, u32>| {
            let next = intern.len() as u32;
            *intern.entry(w).or_insert(next)
        };
        let mut ann = Vec::with_capacity(paths.len());
        for p in paths {
            let mut row = Vec::with_capacity(words.len());
            for t in &words {
                row.push(inst.annihilate_path(p, &t.word)?.map(|x| id(x, intern)));
            }
            ann.push(row);
        }
        Ok(Window { f_degree: words.iter().map(|t| t.degree.restrict(f)).collect(), weights, ann, norm })
    }

    /// `Σ_{w, ℓ(w)_F ≤ cap} ρ_w ⟨t(x_μ)* w, t(x_ν)* w⟩ / norm`.
    fn pair(&self, mu: usize, nu: usize, cap: Option<&MultiIndex>) -> f64 {
        let mut s = 0.0;
        for (w, &rho) in self.weights.iter().enumerate() {
            if let Some(c) = cap {
                if !self.f_degree[w].le(c) {
                    continue;
                }
            }
            if let (Some(a), Some(b)) = (self.ann[mu][w], self.ann[nu][w]) {
                if a == b {
                    s += rho;
                }
            }
        }
        s / self.norm
    }
}

/// Checks `φ(t(a) · t(b)t(c)*) = e^{−|a|β} φ(t(b)t(c)* · t(a))` over all basis paths of
/// degree at most `bound`, with `φ` evaluated as a density over Fock words. The window for
/// the right side is shifted by `ℓ(a)_F`, so truncation cancels and a genuine equilibrium
/// state gives a residual at rounding level. Graph and dynamics instances only.
pub fn check_kms(inst: &Instance, handle: &EquilibriumStateHandle, bound: &MultiIndex) -> Result<KmsReport> {
    if inst.graph().is_none() {
        return Err(Error::Unsupported("the KMS residual check needs a graph or dynamics instance".into()));
    }
    if bound.rank() != inst.rank() {
        return Err(Error::InvalidInput("degree bound has the wrong rank".into()));
    }
    inst.require_factorization()?;
    let beta = handle.beta;
    let paths_w: Vec<Word> = grow(inst, &vec![1.0; inst.dim()], inst.full(), &bound.0)?
        .into_iter()
        .map(|t| t.word)
        .collect();
    let index: HashMap<&Word, usize> = paths_w.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let degs: Vec<MultiIndex> = paths_w.iter().map(|w| inst.degree(w)).collect();
    let mut intern = HashMap::new();
    let windows: Vec<Window> = handle
        .components
        .iter()
        .map(|c| Window::build(inst, c, beta, c.f, bound, &paths_w, &mut intern))
        .collect::<Result<_>>()?;
    let mut memo: HashMap<(usize, usize, usize, Option<MultiIndex>), f64> = HashMap::new();
    let mut phi = |mu: usize, nu: usize, shift: Option<&MultiIndex>| -> f64 {
        let mut total = 0.0;
        for (ci, (comp, win)) in handle.components.iter().zip(&windows).enumerate() {
            let cap = shift.map(|a| {
                let k_f = 2 * comp.f.iter().map(|i| bound.0[i]).max().unwrap_or(0) + 2;
                let mut c = MultiIndex::scaled_indicator(inst.rank(), comp.f, k_f);
                for i in comp.f.iter() {
                    c.0[i] -= a.0[i];
                }
                c
            });
            let key = (ci, mu, nu, cap.clone());
            let v = *memo.entry(key).or_insert_with(|| win.pair(mu, nu, cap.as_ref()));
            total += comp.weight * v;
        }
        total
    };
    let mut max_residual: f64 = 0.0;
    let mut triples = 0;
    for (a, wa) in paths_w.iter().enumerate() {
        for (b, wb) in paths_w.iter().enumerate() {
            for (c, wc) in paths_w.iter().enumerate() {
                if degs[c] != degs[a].add(&degs[b]) {
                    continue;
                }
                triples += 1;
                // t(a)t(b) = t(ab) and t(c)*t(a) = t(c'')* where c = a c''
                let lhs = match inst.apply_path(wa, wb)? {
                    Some(ab) => index.get(&ab).map_or(0.0, |&m| phi(m, c, None)),
                    None => 0.0,
                };
                let rhs = match inst.annihilate_path(wa, wc)? {
                    Some(rest) => {
                        let rest = index[&rest];
                        beta.weight(degs[a].total()) * phi(b, rest, Some(&degs[a]))
                    }
                    None => 0.0,
                };
                max_residual = max_residual.max((lhs - rhs).abs());
            }
        }
    }
    let mut gauge_residual: f64 = 0.0;
    for mu in 0..paths_w.len() {
        for nu in 0..paths_w.len() {
            if degs[mu] != degs[nu] {
                gauge_residual = gauge_residual.max(phi(mu, nu, None).abs());
            }
        }
    }
    let tolerance = 1e-10;
    Ok(KmsReport {
        degree_bound: bound.0.clone(),
        max_residual,
        gauge_residual,
        tolerance,
        triples,
        pass: max_residual <= tolerance && gauge_residual <= tolerance,
    })
}
