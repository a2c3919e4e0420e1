//! Concrete finite-rank product systems and their linear-algebraic shadow.
//!
//! Every instance is reduced to `N` commuting nonnegative integer matrices `B_i` on the
//! atoms of the commutative coefficient algebra `A`. For graphs and dynamics the atoms
//! are vertices; for factorial languages they are classes of words with the same
//! predecessor set (see [`mfl::MflAlgebra`]).

pub mod mfl;
pub mod words;

use std::collections::{BTreeMap, HashMap, HashSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::colors::{ColorSet, MultiIndex, MAX_COLORS};
use crate::error::{Error, Result};
use crate::linalg::IntMatrix;

pub use mfl::{Language, MflAlgebra, MflSpec, MflWord, SymbolCounts, WordCount};
pub use words::{Gen, Word};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceSpec {
    Graph(GraphSpec),
    Mfl(MflSpec),
    Dynamics(DynamicsSpec),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub vertices: Vec<String>,
    /// `matrices[i][v][w]`: number of colour-`i` edges with source `w` and range `v`.
    pub matrices: Vec<Vec<Vec<i64>>>,
    #[serde(default)]
    pub factorizations: Option<Vec<FactorizationSpec>>,
}

/// Bijection between bicoloured 2-paths for one colour pair.
///
/// With `colors = [i, j]`, each entry `[[a, b], [c, d]]` identifies the path made of
/// colour-`i` edge `a` (range end) followed by colour-`j` edge `b` (source end) with the
/// path made of colour-`j` edge `c` followed by colour-`i` edge `d`. Colours and edge
/// numbers are 1-based; the edges of colour `i` are numbered by range, then source,
/// then multiplicity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactorizationSpec {
    pub colors: [usize; 2],
    pub pairs: Vec<[[usize; 2]; 2]>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicsSpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub vertices: Vec<String>,
    /// `maps[i][v]`: 0-based image of vertex `v` under the `i`-th map.
    pub maps: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Graph,
    Mfl,
    Dynamics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub range: usize,
    pub source: usize,
}

/// Factorization rule for colours `lo < hi`, on 0-based edge indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairMap {
    /// `(lo edge at range end, hi edge at source end) ↦ (hi edge, lo edge)`.
    pub fwd: HashMap<(usize, usize), (usize, usize)>,
    /// Inverse of `fwd`.
    pub inv: HashMap<(usize, usize), (usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorizationSource {
    Supplied,
    Flip,
    Forced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphData {
    pub edges: Vec<Vec<Edge>>,
    /// `pairs[(lo, hi)]`; absent when no rule was supplied and none is forced.
    pub pairs: HashMap<(usize, usize), (PairMap, FactorizationSource)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Structure {
    Graph(GraphData),
    Mfl { lang: Language, algebra: MflAlgebra },
}

/// A validated instance. Immutable; safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    spec: InstanceSpec,
    kind: InstanceKind,
    n: usize,
    labels: Vec<String>,
    b: Vec<IntMatrix>,
    unit_sizes: Vec<u64>,
    pub(crate) structure: Structure,
}

pub fn parse_spec(json: &str) -> Result<InstanceSpec> {
    serde_json::from_str(json).map_err(|e| Error::InvalidInput(format!("instance JSON: {e}")))
}

/// Parses and validates an instance in one step.
pub fn load(json: &str) -> Result<Instance> {
    validate(&parse_spec(json)?)
}

fn check_rank(n: usize) -> Result<()> {
    if n == 0 || n > MAX_COLORS {
        return Err(Error::InvalidInput(format!("rank N = {n} outside 1..=16")));
    }
    Ok(())
}

fn check_labels(labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("vertex list is empty".into()));
    }
    let uniq: HashSet<&String> = labels.iter().collect();
    if uniq.len() != labels.len() {
        return Err(Error::InvalidInput("vertex labels are not distinct".into()));
    }
    Ok(())
}

fn check_commuting(b: &[IntMatrix]) -> Result<()> {
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            let ij = b[i].checked_mul(&b[j]);
            let ji = b[j].checked_mul(&b[i]);
            match (ij, ji) {
                (Some(x), Some(y)) if x == y => {}
                (Some(_), Some(_)) => return Err(Error::Commutation(i + 1, j + 1)),
                _ => return Err(Error::InvalidInput("matrix products overflow i64".into())),
            }
        }
    }
    Ok(())
}

pub fn validate(spec: &InstanceSpec) -> Result<Instance> {
    match spec {
        InstanceSpec::Graph(g) => validate_graph(spec, g),
        InstanceSpec::Dynamics(d) => validate_dynamics(spec, d),
        InstanceSpec::Mfl(m) => validate_mfl(spec, m),
    }
}

fn enumerate_edges(b: &IntMatrix) -> Vec<Edge> {
    let n = b.dim();
    let mut out = Vec::new();
    for v in 0..n {
        for w in 0..n {
            for _ in 0..b.get(v, w) {
                out.push(Edge { range: v, source: w });
            }
        }
    }
    out
}

fn validate_graph(spec: &InstanceSpec, g: &GraphSpec) -> Result<Instance> {
    check_rank(g.n)?;
    check_labels(&g.vertices)?;
    if g.matrices.len() != g.n {
        return Err(Error::InvalidInput(format!("expected {} matrices, got {}", g.n, g.matrices.len())));
    }
    let dim = g.vertices.len();
    let mut b = Vec::with_capacity(g.n);
    for (i, rows) in g.matrices.iter().enumerate() {
        let m = IntMatrix::from_rows(rows.clone()).map_err(Error::InvalidInput)?;
        if m.dim() != dim {
            return Err(Error::InvalidInput(format!("matrix {} is not {dim}x{dim}", i + 1)));
        }
        if !m.is_nonnegative() {
            return Err(Error::InvalidInput(format!("matrix {} has a negative entry", i + 1)));
        }
        b.push(m);
    }
    check_commuting(&b)?;
    let edges: Vec<Vec<Edge>> = b.iter().map(enumerate_edges).collect();
    let unit_sizes = edges.iter().map(|e| e.len() as u64).collect();
    let pairs = build_factorizations(&b, &edges, g.factorizations.as_deref())?;
    Ok(Instance {
        spec: spec.clone(),
        kind: InstanceKind::Graph,
        n: g.n,
        labels: g.vertices.clone(),
        b,
        unit_sizes,
        structure: Structure::Graph(GraphData { edges, pairs }),
    })
}

fn validate_dynamics(spec: &InstanceSpec, d: &DynamicsSpec) -> Result<Instance> {
    check_rank(d.n)?;
    check_labels(&d.vertices)?;
    let dim = d.vertices.len();
    if d.maps.len() != d.n {
        return Err(Error::Dynamics(format!("expected {} maps, got {}", d.n, d.maps.len())));
    }
    for (i, m) in d.maps.iter().enumerate() {
        if m.len() != dim || m.iter().any(|&x| x >= dim) {
            return Err(Error::Dynamics(format!("map {} is not a function on the vertices", i + 1)));
        }
    }
    for i in 0..d.n {
        for j in i + 1..d.n {
            if (0..dim).any(|v| d.maps[i][d.maps[j][v]] != d.maps[j][d.maps[i][v]]) {
                return Err(Error::Dynamics(format!("maps {} and {} do not commute", i + 1, j + 1)));
            }
        }
    }
    let b: Vec<IntMatrix> = d
        .maps
        .iter()
        .map(|m| {
            let mut x = IntMatrix::zeros(dim);
            for (v, &img) in m.iter().enumerate() {
                x.set(img, v, 1);
            }
            x
        })
        .collect();
    let edges: Vec<Vec<Edge>> = b.iter().map(enumerate_edges).collect();
    let pairs = build_factorizations(&b, &edges, None)?;
    // the edge frame {δ_v}: t(1) is the sum of its creation operators
    let unit_sizes = vec![dim as u64; d.n];
    Ok(Instance {
        spec: spec.clone(),
        kind: InstanceKind::Dynamics,
        n: d.n,
        labels: d.vertices.clone(),
        b,
        unit_sizes,
        structure: Structure::Graph(GraphData { edges, pairs }),
    })
}

fn validate_mfl(spec: &InstanceSpec, m: &MflSpec) -> Result<Instance> {
    let lang = Language::compile(m)?;
    let algebra = MflAlgebra::build(&lang)?;
    let labels = algebra.representatives.iter().map(mfl::word_label).collect();
    let b = algebra.matrices.clone();
    check_commuting(&b)?;
    Ok(Instance {
        spec: spec.clone(),
        kind: InstanceKind::Mfl,
        n: lang.rank(),
        labels,
        b,
        unit_sizes: lang.symbols().iter().map(|&d| d as u64).collect(),
        structure: Structure::Mfl { lang, algebra },
    })
}

/// Number of `lo`-then-`hi` paths (lo edge at the range end) from `w` to `v`.
fn two_path_counts(b: &[IntMatrix], first: usize, second: usize) -> IntMatrix {
    b[first].checked_mul(&b[second]).expect("checked during commutation test")
}

fn build_factorizations(
    b: &[IntMatrix],
    edges: &[Vec<Edge>],
    supplied: Option<&[FactorizationSpec]>,
) -> Result<HashMap<(usize, usize), (PairMap, FactorizationSource)>> {
    let n = b.len();
    let mut out = HashMap::new();
    for f in supplied.unwrap_or_default() {
        let [ci, cj] = f.colors;
        if ci == 0 || cj == 0 || ci > n || cj > n || ci == cj {
            return Err(Error::Factorization(format!("bad colour pair {:?}", f.colors)));
        }
        let (i, j) = (ci - 1, cj - 1);
        let key = (i.min(j), i.max(j));
        if out.contains_key(&key) {
            return Err(Error::Factorization(format!("colour pair {:?} given twice", f.colors)));
        }
        let map = supplied_pair(b, edges, i, j, &f.pairs)?;
        out.insert(key, (map, FactorizationSource::Supplied));
    }
    for lo in 0..n {
        for hi in lo + 1..n {
            if out.contains_key(&(lo, hi)) {
                continue;
            }
            if let Some(d) = default_pair(b, edges, lo, hi) {
                out.insert((lo, hi), d);
            }
        }
    }
    if supplied.is_some() || n >= 3 {
        check_associativity(edges, &mut out, supplied.is_some())?;
    }
    Ok(out)
}

fn supplied_pair(
    b: &[IntMatrix],
    edges: &[Vec<Edge>],
    i: usize,
    j: usize,
    pairs: &[[[usize; 2]; 2]],
) -> Result<PairMap> {
    let (lo, hi) = (i.min(j), i.max(j));
    let edge = |c: usize, id: usize| -> Result<Edge> {
        if id == 0 || id > edges[c].len() {
            return Err(Error::Factorization(format!("colour {} has no edge {id}", c + 1)));
        }
        Ok(edges[c][id - 1])
    };
    let mut map = PairMap::default();
    for &[[a, bb], [c, d]] in pairs {
        // (i-edge a, j-edge bb) ~ (j-edge c, i-edge d)
        let (ea, eb, ec, ed) = (edge(i, a)?, edge(j, bb)?, edge(j, c)?, edge(i, d)?);
        if ea.source != eb.range || ec.source != ed.range {
            return Err(Error::Factorization("a listed 2-path is not composable".into()));
        }
        if ea.range != ec.range || eb.source != ed.source {
            return Err(Error::Factorization("paired 2-paths have different endpoints".into()));
        }
        let (key, val) = if i == lo {
            ((a - 1, bb - 1), (c - 1, d - 1))
        } else {
            ((c - 1, d - 1), (a - 1, bb - 1))
        };
        if map.fwd.insert(key, val).is_some() || map.inv.insert(val, key).is_some() {
            return Err(Error::Factorization("bijection lists a 2-path twice".into()));
        }
    }
    let total = two_path_counts(b, lo, hi).total() as usize;
    if map.fwd.len() != total {
        return Err(Error::Factorization(format!(
            "colours {} and {}: {} pairs listed but there are {total} bicoloured 2-paths",
            lo + 1,
            hi + 1,
            map.fwd.len()
        )));
    }
    Ok(map)
}

/// Flip for two diagonal colours, the unique bijection when every 2-path count is at
/// most one, and nothing otherwise.
fn default_pair(
    b: &[IntMatrix],
    edges: &[Vec<Edge>],
    lo: usize,
    hi: usize,
) -> Option<(PairMap, FactorizationSource)> {
    let lo_hi = lo_hi_paths(edges, lo, hi);
    let hi_lo = lo_hi_paths(edges, hi, lo);
    let mut map = PairMap::default();
    if b[lo].is_diagonal() && b[hi].is_diagonal() {
        for &(x, y) in &lo_hi {
            map.fwd.insert((x, y), (y, x));
            map.inv.insert((y, x), (x, y));
        }
        return Some((map, FactorizationSource::Flip));
    }
    let counts = two_path_counts(b, lo, hi);
    let dim = counts.dim();
    if (0..dim).all(|v| (0..dim).all(|w| counts.get(v, w) <= 1)) {
        let mut by_ends: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for &(y, x) in &hi_lo {
            by_ends.insert((edges[hi][y].range, edges[lo][x].source), (y, x));
        }
        for &(x, y) in &lo_hi {
            let val = by_ends[&(edges[lo][x].range, edges[hi][y].source)];
            map.fwd.insert((x, y), val);
            map.inv.insert(val, (x, y));
        }
        return Some((map, FactorizationSource::Forced));
    }
    None
}

/// Composable pairs `(a, b)` with `a` of colour `first` at the range end.
fn lo_hi_paths(edges: &[Vec<Edge>], first: usize, second: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (a, ea) in edges[first].iter().enumerate() {
        for (b, eb) in edges[second].iter().enumerate() {
            if ea.source == eb.range {
                out.push((a, b));
            }
        }
    }
    out
}

/// For colours `i < j < k`, the two ways of sorting a `k, j, i` path must agree.
/// Defaults failing the test are dropped; supplied data failing it is rejected.
fn check_associativity(
    edges: &[Vec<Edge>],
    pairs: &mut HashMap<(usize, usize), (PairMap, FactorizationSource)>,
    strict: bool,
) -> Result<()> {
    let n = edges.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let keys = [(i, j), (i, k), (j, k)];
                if keys.iter().any(|key| !pairs.contains_key(key)) {
                    continue;
                }
                // swap a (hi-edge, lo-edge) path into (lo-edge, hi-edge)
                let swap = |lo: usize, hi: usize, h: usize, l: usize| -> (usize, usize) {
                    pairs[&(lo, hi)].0.inv[&(h, l)]
                };
                let mut ok = true;
                'outer: for (ek, e_k) in edges[k].iter().enumerate() {
                    for (ej, e_j) in edges[j].iter().enumerate() {
                        if e_k.source != e_j.range {
                            continue;
                        }
                        for (ei, e_i) in edges[i].iter().enumerate() {
                            if e_j.source != e_i.range {
                                continue;
                            }
                            let a = {
                                let (i1, j1) = swap(i, j, ej, ei);
                                let (i2, k1) = swap(i, k, ek, i1);
                                let (j2, k2) = swap(j, k, k1, j1);
                                (i2, j2, k2)
                            };
                            let b = {
                                let (j1, k1) = swap(j, k, ek, ej);
                                let (i1, k2) = swap(i, k, k1, ei);
                                let (i2, j2) = swap(i, j, j1, i1);
                                (i2, j2, k2)
                            };
                            if a != b {
                                ok = false;
                                break 'outer;
                            }
                        }
                    }
                }
                if !ok {
                    if strict && keys.iter().all(|key| pairs[key].1 == FactorizationSource::Supplied) {
                        return Err(Error::Factorization(format!(
                            "factorization rules for colours {}, {}, {} are not associative",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                    for key in keys {
                        if pairs[&key].1 != FactorizationSource::Supplied {
                            pairs.remove(&key);
                        }
                    }
                    if keys.iter().all(|key| pairs.contains_key(key)) {
                        return Err(Error::Factorization(format!(
                            "factorization rules for colours {}, {}, {} are not associative",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// `Π_i M_i^{n_i}` with an exact copy when no entry overflows `i64`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiTransfer {
    pub exact: Option<IntMatrix>,
    pub float: DMatrix<f64>,
    /// Set when the exact computation overflowed and only the float copy is valid.
    pub overflowed: bool,
}

impl Instance {
    pub fn spec(&self) -> &InstanceSpec {
        &self.spec
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    /// Rank `N`.
    pub fn rank(&self) -> usize {
        self.n
    }

    /// Dimension of the coefficient algebra.
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Trace-side matrix `B_i` (0-based colour).
    pub fn b(&self, i: usize) -> &IntMatrix {
        &self.b[i]
    }

    pub fn matrices(&self) -> &[IntMatrix] {
        &self.b
    }

    /// `d_i`, the size of the unit decomposition of colour `i`.
    pub fn unit_sizes(&self) -> &[u64] {
        &self.unit_sizes
    }

    pub fn full(&self) -> ColorSet {
        ColorSet::full(self.n)
    }

    pub fn graph(&self) -> Option<&GraphData> {
        match &self.structure {
            Structure::Graph(g) => Some(g),
            Structure::Mfl { .. } => None,
        }
    }

    pub fn language(&self) -> Option<&Language> {
        match &self.structure {
            Structure::Mfl { lang, .. } => Some(lang),
            Structure::Graph(_) => None,
        }
    }

    /// `M_i = B_iᵀ`, the transfer map on functions (0-based colour).
    pub fn transfer_map(&self, i: usize) -> IntMatrix {
        self.b[i].transpose()
    }

    /// `M_n = Π_i M_i^{n_i}`.
    pub fn multidegree_transfer(&self, n: &MultiIndex) -> MultiTransfer {
        let mut acc = Some(IntMatrix::identity(self.dim()));
        for (i, &k) in n.0.iter().enumerate() {
            for _ in 0..k {
                acc = acc.and_then(|a| a.checked_mul(&self.b[i]));
            }
        }
        match acc {
            Some(bn) => {
                let m = bn.transpose();
                MultiTransfer { float: m.to_f64(), exact: Some(m), overflowed: false }
            }
            None => {
                let mut f = DMatrix::<f64>::identity(self.dim(), self.dim());
                for (i, &k) in n.0.iter().enumerate() {
                    let bi = self.b[i].to_f64();
                    for _ in 0..k {
                        f = &bi * f;
                    }
                }
                MultiTransfer { exact: None, float: f.transpose(), overflowed: true }
            }
        }
    }

    /// Boolean support of `Π_{i∈F} B_i`.
    fn block_support(&self, f: ColorSet) -> Vec<Vec<bool>> {
        let n = self.dim();
        let mut acc: Vec<Vec<bool>> = (0..n).map(|r| (0..n).map(|c| r == c).collect()).collect();
        for i in f.iter() {
            let b = &self.b[i];
            let mut next = vec![vec![false; n]; n];
            for r in 0..n {
                for k in 0..n {
                    if acc[r][k] {
                        for c in 0..n {
                            if b.get(k, c) != 0 {
                                next[r][c] = true;
                            }
                        }
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// `fI_F`: vertices whose row in some power `(Π_{i∈F} B_i)^k`, `k ≤ dim A`, vanishes.
    pub fn compute_fi(&self, f: ColorSet) -> Vec<usize> {
        if f.is_empty() {
            return Vec::new();
        }
        let p = self.block_support(f);
        let n = self.dim();
        // zero[v] after step k: row v of P^k vanishes; rows only ever become zero.
        let mut zero = vec![false; n];
        for _ in 0..=n {
            let next: Vec<bool> = (0..n).map(|v| (0..n).all(|u| !p[v][u] || zero[u])).collect();
            if next == zero {
                break;
            }
            zero = next;
        }
        (0..n).filter(|&v| zero[v]).collect()
    }

    /// `ker φ_i`: atoms receiving no colour-`i` edge.
    pub fn kernel(&self, i: usize) -> Vec<usize> {
        (0..self.dim()).filter(|&v| self.b[i].row(v).iter().all(|&x| x == 0)).collect()
    }

    /// The Cuntz–Nica–Pimsner lattice `{𝕀_F}`.
    pub fn compute_cnp_ideals(&self) -> IdealLattice {
        let n = self.dim();
        let mut ideals = BTreeMap::new();
        for f in ColorSet::all(self.n).filter(|f| !f.is_empty()) {
            // J_F: atoms outside ∩_{i∈F} ker φ_i
            let mut set: Vec<bool> = (0..n)
                .map(|v| f.iter().any(|i| self.b[i].row(v).iter().any(|&x| x != 0)))
                .collect();
            let perp: Vec<usize> = f.complement(self.n).iter().collect();
            loop {
                let mut changed = false;
                for v in 0..n {
                    if set[v]
                        && perp
                            .iter()
                            .any(|&i| (0..n).any(|w| self.b[i].get(v, w) != 0 && !set[w]))
                    {
                        set[v] = false;
                        changed = true;
                    }
                }
                if !changed {
                    break;
                }
            }
            ideals.insert(f, (0..n).filter(|&v| set[v]).collect());
        }
        IdealLattice { n: self.n, ideals }
    }
}

/// A family `{I_F : ∅ ≠ F}` of vertex ideals; missing entries are the zero ideal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IdealLattice {
    n: usize,
    ideals: BTreeMap<ColorSet, Vec<usize>>,
}

#[derive(Deserialize)]
struct LatticeJson {
    ideals: BTreeMap<String, Vec<String>>,
}

impl IdealLattice {
    pub fn zero(n: usize) -> Self {
        IdealLattice { n, ideals: BTreeMap::new() }
    }

    pub fn from_sets(n: usize, ideals: BTreeMap<ColorSet, Vec<usize>>) -> Self {
        let ideals = ideals
            .into_iter()
            .map(|(f, mut v)| {
                v.sort_unstable();
                v.dedup();
                (f, v)
            })
            .collect();
        IdealLattice { n, ideals }
    }

    pub fn get(&self, f: ColorSet) -> &[usize] {
        self.ideals.get(&f).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ColorSet, &[usize])> {
        self.ideals.iter().map(|(f, v)| (*f, v.as_slice()))
    }

    pub fn is_zero(&self) -> bool {
        self.ideals.values().all(Vec::is_empty)
    }

    /// Parses `{"ideals": {"{1}": ["u"], ...}}` against the instance labels and checks
    /// monotonicity and ⊥-invariance.
    pub fn from_json(inst: &Instance, json: &str) -> Result<Self> {
        let raw: LatticeJson = serde_json::from_str(json)
            .map_err(|e| Error::InvalidLattice(format!("lattice JSON: {e}")))?;
        let mut ideals = BTreeMap::new();
        for (key, labels) in raw.ideals {
            let f = ColorSet::parse(&key, inst.rank())
                .map_err(|e| Error::InvalidLattice(e.to_string()))?;
            if f.is_empty() {
                return Err(Error::InvalidLattice("the empty colour set carries no ideal".into()));
            }
            let mut set = Vec::new();
            for l in labels {
                set.push(
                    inst.label_index(&l)
                        .ok_or_else(|| Error::InvalidLattice(format!("unknown vertex {l:?}")))?,
                );
            }
            ideals.insert(f, set);
        }
        let lat = IdealLattice::from_sets(inst.rank(), ideals);
        lat.validate(inst)?;
        Ok(lat)
    }

    pub fn to_json(&self, inst: &Instance) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .ideals
            .iter()
            .map(|(f, v)| {
                let labels: Vec<&str> = v.iter().map(|&i| inst.labels()[i].as_str()).collect();
                (f.to_string(), serde_json::json!(labels))
            })
            .collect();
        serde_json::json!({ "ideals": map })
    }

    pub fn validate(&self, inst: &Instance) -> Result<()> {
        let n = inst.rank();
        for (f, set) in &self.ideals {
            if set.iter().any(|&v| v >= inst.dim()) {
                return Err(Error::InvalidLattice(format!("ideal {f} names a missing vertex")));
            }
            for i in f.complement(n).iter() {
                for &v in set {
                    if let Some(w) =
                        (0..inst.dim()).find(|&w| inst.b(i).get(v, w) != 0 && set.binary_search(&w).is_err())
                    {
                        return Err(Error::InvalidLattice(format!(
                            "ideal {f} is not invariant under colour {}: {} receives an edge from {}",
                            i + 1,
                            inst.labels()[v],
                            inst.labels()[w]
                        )));
                    }
                }
            }
        }
        for f in ColorSet::all(n).filter(|f| !f.is_empty()) {
            for g in f.supersets(n) {
                if !self.get(f).iter().all(|v| self.get(g).contains(v)) {
                    return Err(Error::InvalidLattice(format!("ideal {f} is not contained in ideal {g}")));
                }
            }
        }
        Ok(())
    }
}
