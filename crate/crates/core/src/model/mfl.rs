//! Multivariable factorial languages given by forbidden patterns.
//!
//! A word is an `N`-tuple of symbol strings. A pattern `f = (f_1, …, f_N)` occurs in
//! `μ` when every `f_i` is a contiguous factor of `μ_i`; `Λ*` is the set of words in
//! which no forbidden pattern occurs. Creation by `δ_i(k)` prepends `k` to `μ_i`.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::colors::ColorSet;
use crate::error::{Error, Result};
use crate::linalg::IntMatrix;

/// Upper bound on the number of atoms of the coefficient algebra.
pub const ATOM_CAP: usize = 4096;
/// Upper bound on the number of realized boundary profiles explored while building atoms.
pub const PROFILE_CAP: usize = 1 << 16;
/// Default DFS node budget for word enumeration.
pub const NODE_BUDGET: u64 = 200_000_000;

/// One word per colour, 0-based symbols.
pub type MflWord = Vec<Vec<u16>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolCounts {
    Uniform(usize),
    PerColor(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MflSpec {
    #[serde(rename = "N")]
    pub n: usize,
    pub symbols: SymbolCounts,
    /// Each pattern holds `N` words of 1-based symbols; empty words are allowed.
    pub forbidden: Vec<Vec<Vec<usize>>>,
}

/// Compiled language: symbol counts and 0-based forbidden patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Language {
    n: usize,
    d: Vec<usize>,
    patterns: Vec<MflWord>,
    /// Longest pattern word per colour.
    max_len: Vec<usize>,
}

fn is_factor(f: &[u16], w: &[u16]) -> bool {
    f.is_empty() || w.windows(f.len()).any(|x| x == f)
}

impl Language {
    pub fn compile(spec: &MflSpec) -> Result<Self> {
        let n = spec.n;
        if n == 0 || n > crate::colors::MAX_COLORS {
            return Err(Error::InvalidInput(format!("rank N = {n} outside 1..=16")));
        }
        let d = match &spec.symbols {
            SymbolCounts::Uniform(k) => vec![*k; n],
            SymbolCounts::PerColor(v) => v.clone(),
        };
        if d.len() != n || d.iter().any(|&k| k == 0 || k > u16::MAX as usize) {
            return Err(Error::InvalidInput("symbol counts must be N positive integers".into()));
        }
        let mut patterns = Vec::with_capacity(spec.forbidden.len());
        for (p, pat) in spec.forbidden.iter().enumerate() {
            if pat.len() != n {
                return Err(Error::InvalidInput(format!(
                    "forbidden pattern {} has {} words, expected {n}",
                    p + 1,
                    pat.len()
                )));
            }
            let mut w = Vec::with_capacity(n);
            for (i, word) in pat.iter().enumerate() {
                if word.iter().any(|&s| s == 0 || s > d[i]) {
                    return Err(Error::InvalidInput(format!(
                        "forbidden pattern {} uses a symbol outside 1..={} in colour {}",
                        p + 1,
                        d[i],
                        i + 1
                    )));
                }
                w.push(word.iter().map(|&s| (s - 1) as u16).collect());
            }
            patterns.push(w);
        }
        let max_len = (0..n)
            .map(|i| patterns.iter().map(|p: &MflWord| p[i].len()).max().unwrap_or(0))
            .collect();
        let lang = Language { n, d, patterns, max_len };
        for i in 0..n {
            if !(0..lang.d[i]).any(|k| lang.contains(&lang.single(i, k as u16))) {
                return Err(Error::Language(format!(
                    "no single symbol of colour {} is allowable",
                    i + 1
                )));
            }
        }
        Ok(lang)
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn symbols(&self) -> &[usize] {
        &self.d
    }

    pub fn empty_word(&self) -> MflWord {
        vec![Vec::new(); self.n]
    }

    /// `δ_i(k)`.
    pub fn single(&self, i: usize, k: u16) -> MflWord {
        let mut w = self.empty_word();
        w[i].push(k);
        w
    }

    fn pattern_occurs(p: &MflWord, w: &MflWord) -> bool {
        p.iter().zip(w).all(|(f, x)| is_factor(f, x))
    }

    /// Membership in `Λ*`.
    pub fn contains(&self, w: &MflWord) -> bool {
        !self.patterns.iter().any(|p| Self::pattern_occurs(p, w))
    }

    /// `δ_i(k) * w` when it lies in `Λ*`.
    pub fn prepend(&self, i: usize, k: u16, w: &MflWord) -> Option<MflWord> {
        let mut out = w.clone();
        out[i].insert(0, k);
        self.contains(&out).then_some(out)
    }

    /// Coordinatewise concatenation `u * w` when it lies in `Λ*`.
    pub fn concat(&self, u: &MflWord, w: &MflWord) -> Option<MflWord> {
        let out: MflWord = u.iter().zip(w).map(|(a, b)| [a.as_slice(), b].concat()).collect();
        self.contains(&out).then_some(out)
    }

    /// Counts (and optionally lists) the allowable words supported in `F` with total length `k`.
    pub fn allowable_words(&self, k: usize, f: ColorSet, list_cap: Option<usize>) -> Result<WordCount> {
        self.allowable_words_budget(k, f, list_cap, NODE_BUDGET)
    }

    pub fn allowable_words_budget(
        &self,
        k: usize,
        f: ColorSet,
        list_cap: Option<usize>,
        node_budget: u64,
    ) -> Result<WordCount> {
        let mut count = 0u64;
        let mut list = list_cap.map(|_| Vec::new());
        self.walk(k, f, node_budget, &mut |w, len| {
            if len == k {
                count += 1;
                if let Some(l) = list.as_mut() {
                    if l.len() <= list_cap.unwrap_or(0) {
                        l.push(w.clone());
                    }
                }
            }
        })?;
        if let Some(cap) = list_cap {
            if count > cap as u64 {
                return Err(Error::CapExceeded(format!(
                    "{count} words of length {k} exceed the list cap of {cap}"
                )));
            }
        }
        Ok(WordCount { k, count, words: list })
    }

    /// `|B_k^F(Λ*)|` for every `k ≤ k_max` from a single enumeration.
    pub fn counts_by_length(&self, k_max: usize, f: ColorSet, node_budget: u64) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; k_max + 1];
        self.walk(k_max, f, node_budget, &mut |_, len| counts[len] += 1)?;
        Ok(counts)
    }

    /// Depth-first enumeration of the allowable words supported in `F` with total length
    /// at most `k_max`; each word is visited exactly once, colour blocks filled in order.
    fn walk(
        &self,
        k_max: usize,
        f: ColorSet,
        node_budget: u64,
        visit: &mut dyn FnMut(&MflWord, usize),
    ) -> Result<()> {
        let colors: Vec<usize> = f.iter().filter(|&i| i < self.n).collect();
        let mut dfs = WordDfs {
            lang: self,
            colors: &colors,
            word: self.empty_word(),
            occ: self
                .patterns
                .iter()
                .map(|p| p.iter().map(|f| f.is_empty()).collect())
                .collect(),
            nodes: 0,
            budget: node_budget,
            visit,
        };
        if !self.contains(&dfs.word) {
            return Ok(());
        }
        (dfs.visit)(&dfs.word, 0);
        if !colors.is_empty() {
            dfs.run(0, k_max, 0)?;
        }
        Ok(())
    }

    pub fn word_label(&self, w: &MflWord) -> String {
        word_label(w)
    }
}

/// Human-readable form: colour words separated by `|`, 1-based symbols, `ε` for empty.
pub fn word_label(w: &MflWord) -> String {
    let wide = w.iter().flatten().any(|&s| s >= 9);
    w.iter()
        .map(|x| {
            if x.is_empty() {
                "ε".to_string()
            } else {
                let parts: Vec<String> = x.iter().map(|s| (s + 1).to_string()).collect();
                parts.join(if wide { "." } else { "" })
            }
        })
        .collect::<Vec<_>>()
        .join("|")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WordCount {
    pub k: usize,
    pub count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub words: Option<Vec<MflWord>>,
}

struct WordDfs<'a> {
    lang: &'a Language,
    colors: &'a [usize],
    word: MflWord,
    /// `occ[p][i]`: word `i` of pattern `p` already occurs in the current word.
    occ: Vec<Vec<bool>>,
    nodes: u64,
    budget: u64,
    visit: &'a mut dyn FnMut(&MflWord, usize),
}

impl WordDfs<'_> {
    fn run(&mut self, ci: usize, left: usize, len: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::CapExceeded(format!(
                "word enumeration exceeded the node budget of {}",
                self.budget
            )));
        }
        if left == 0 {
            return Ok(());
        }
        let c = self.colors[ci];
        for k in 0..self.lang.d[c] as u16 {
            self.word[c].push(k);
            let saved: Vec<bool> = self.occ.iter().map(|o| o[c]).collect();
            let mut dead = false;
            for (p, pat) in self.lang.patterns.iter().enumerate() {
                if !self.occ[p][c] && !pat[c].is_empty() && self.word[c].ends_with(&pat[c]) {
                    self.occ[p][c] = true;
                }
                if self.occ[p].iter().all(|&b| b) {
                    dead = true;
                }
            }
            if !dead {
                (self.visit)(&self.word, len + 1);
                self.run(ci, left - 1, len + 1)?;
            }
            for (o, s) in self.occ.iter_mut().zip(saved) {
                o[c] = s;
            }
            self.word[c].pop();
        }
        if ci + 1 < self.colors.len() {
            self.run(ci + 1, left, len)?;
        }
        Ok(())
    }
}

/// Boundary data of a word: per colour a prefix (right profile) or suffix (left
/// profile) of length `< L_i`, plus which pattern words already occur.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Profile {
    ends: Vec<Vec<u16>>,
    occ: Vec<bool>,
}

impl Language {
    fn keep(&self, i: usize) -> usize {
        self.max_len[i].saturating_sub(1)
    }

    fn occ_index(&self, p: usize, i: usize) -> usize {
        p * self.n + i
    }

    fn empty_profile(&self) -> Profile {
        let mut occ = vec![false; self.patterns.len() * self.n];
        for (p, pat) in self.patterns.iter().enumerate() {
            for (i, f) in pat.iter().enumerate() {
                occ[self.occ_index(p, i)] = f.is_empty();
            }
        }
        Profile { ends: vec![Vec::new(); self.n], occ }
    }

    fn profile_allowed(&self, pr: &Profile) -> bool {
        !(0..self.patterns.len()).any(|p| (0..self.n).all(|i| pr.occ[self.occ_index(p, i)]))
    }

    /// Right profile of `δ_i(k) * ν` from that of `ν`.
    fn prepend_profile(&self, pr: &Profile, i: usize, k: u16) -> Profile {
        let mut head = vec![k];
        head.extend_from_slice(&pr.ends[i]);
        let mut out = pr.clone();
        for (p, pat) in self.patterns.iter().enumerate() {
            let idx = self.occ_index(p, i);
            if !out.occ[idx] && head.starts_with(&pat[i]) {
                out.occ[idx] = true;
            }
        }
        head.truncate(self.keep(i));
        out.ends[i] = head;
        out
    }

    /// Left profile of `μ * δ_i(k)` from that of `μ`.
    fn append_profile(&self, pr: &Profile, i: usize, k: u16) -> Profile {
        let mut tail = pr.ends[i].clone();
        tail.push(k);
        let mut out = pr.clone();
        for (p, pat) in self.patterns.iter().enumerate() {
            let idx = self.occ_index(p, i);
            if !out.occ[idx] && tail.ends_with(&pat[i]) {
                out.occ[idx] = true;
            }
        }
        let drop = tail.len().saturating_sub(self.keep(i));
        out.ends[i] = tail[drop..].to_vec();
        out
    }

    /// Whether `μ ν ∈ Λ*` given the left profile of `μ` and the right profile of `ν`.
    fn joins(&self, left: &Profile, right: &Profile) -> bool {
        for (p, pat) in self.patterns.iter().enumerate() {
            let hit = (0..self.n).all(|i| {
                let idx = self.occ_index(p, i);
                left.occ[idx] || right.occ[idx] || {
                    let seam = [left.ends[i].as_slice(), &right.ends[i]].concat();
                    is_factor(&pat[i], &seam)
                }
            });
            if hit {
                return false;
            }
        }
        true
    }

    fn right_profile_of(&self, w: &MflWord) -> Profile {
        let mut pr = self.empty_profile();
        for i in 0..self.n {
            for &k in w[i].iter().rev() {
                pr = self.prepend_profile(&pr, i, k);
            }
        }
        pr
    }

    /// Breadth-first search over the profiles of allowable words. `prepend` selects
    /// right profiles (words grow at the front) or left profiles (words grow at the back).
    fn realize(&self, prepend: bool) -> Result<Vec<(Profile, MflWord)>> {
        let start = self.empty_profile();
        let mut seen: HashMap<Profile, usize> = HashMap::new();
        let mut out = vec![(start.clone(), self.empty_word())];
        seen.insert(start, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(at) = queue.pop_front() {
            for i in 0..self.n {
                for k in 0..self.d[i] as u16 {
                    let next = if prepend {
                        self.prepend_profile(&out[at].0, i, k)
                    } else {
                        self.append_profile(&out[at].0, i, k)
                    };
                    if !self.profile_allowed(&next) || seen.contains_key(&next) {
                        continue;
                    }
                    if out.len() >= PROFILE_CAP {
                        return Err(Error::Unsupported(format!(
                            "coefficient algebra needs more than {PROFILE_CAP} boundary profiles"
                        )));
                    }
                    let mut w = out[at].1.clone();
                    if prepend {
                        w[i].insert(0, k);
                    } else {
                        w[i].push(k);
                    }
                    seen.insert(next.clone(), out.len());
                    queue.push_back(out.len());
                    out.push((next, w));
                }
            }
        }
        Ok(out)
    }
}

/// The commutative coefficient algebra `A = C*(T_μ* T_μ)` in atomic form.
///
/// Atoms are classes of allowable words `ν` with the same set `{μ : μν ∈ Λ*}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MflAlgebra {
    /// Shortest representative word of each atom; atom 0 contains the empty word.
    pub representatives: Vec<MflWord>,
    /// Trace-side transfer matrices: `B_i[α][β] = #{k : δ_i(k)ν ∈ Λ* ∩ α}` for `ν ∈ β`.
    pub matrices: Vec<IntMatrix>,
    profile_atom: HashMap<Profile, usize>,
}

impl MflAlgebra {
    pub fn build(lang: &Language) -> Result<Self> {
        let rights = lang.realize(true)?;
        let lefts = lang.realize(false)?;
        let mut signature_atom: HashMap<Vec<bool>, usize> = HashMap::new();
        let mut representatives = Vec::new();
        let mut profile_atom = HashMap::new();
        let mut members: Vec<Vec<usize>> = Vec::new();
        for (r, (pr, w)) in rights.iter().enumerate() {
            let sig: Vec<bool> = lefts.iter().map(|(l, _)| lang.joins(l, pr)).collect();
            let next = signature_atom.len();
            let atom = *signature_atom.entry(sig).or_insert(next);
            if atom == next {
                if next >= ATOM_CAP {
                    return Err(Error::Unsupported(format!(
                        "coefficient algebra has more than {ATOM_CAP} atoms"
                    )));
                }
                representatives.push(w.clone());
                members.push(Vec::new());
            }
            members[atom].push(r);
            profile_atom.insert(pr.clone(), atom);
        }
        let m = representatives.len();
        let mut matrices = Vec::with_capacity(lang.n);
        for i in 0..lang.n {
            let mut b = IntMatrix::zeros(m);
            for (beta, rs) in members.iter().enumerate() {
                let mut col: Option<Vec<i64>> = None;
                for &r in rs {
                    let mut counts = vec![0i64; m];
                    for k in 0..lang.d[i] as u16 {
                        let next = lang.prepend_profile(&rights[r].0, i, k);
                        if lang.profile_allowed(&next) {
                            counts[profile_atom[&next]] += 1;
                        }
                    }
                    match &col {
                        None => col = Some(counts),
                        Some(c) if *c != counts => {
                            return Err(Error::Unsupported(
                                "transfer map is not constant on an atom".into(),
                            ))
                        }
                        _ => {}
                    }
                }
                for (alpha, &x) in col.unwrap_or_default().iter().enumerate() {
                    b.set(alpha, beta, x);
                }
            }
            matrices.push(b);
        }
        Ok(MflAlgebra { representatives, matrices, profile_atom })
    }

    pub fn dim(&self) -> usize {
        self.representatives.len()
    }

    /// The atom containing an allowable word.
    pub fn atom_of(&self, lang: &Language, w: &MflWord) -> Option<usize> {
        self.profile_atom.get(&lang.right_profile_of(w)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn golden() -> Language {
        Language::compile(&MflSpec {
            n: 1,
            symbols: SymbolCounts::Uniform(2),
            forbidden: vec![vec![vec![1, 1]]],
        })
        .unwrap()
    }

    #[test]
    fn golden_mean_counts_are_fibonacci() {
        let lang = golden();
        let f = ColorSet::full(1);
        let counts: Vec<u64> =
            (0..8).map(|k| lang.allowable_words(k, f, None).unwrap().count).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 8, 13, 21, 34]);
        assert_eq!(lang.counts_by_length(7, f, NODE_BUDGET).unwrap(), counts);
    }

    #[test]
    fn golden_mean_atoms() {
        let lang = golden();
        let alg = MflAlgebra::build(&lang).unwrap();
        assert_eq!(alg.dim(), 2);
        assert_eq!(alg.representatives[0], vec![Vec::<u16>::new()]);
        assert_eq!(alg.matrices[0].rows(), vec![vec![1, 1], vec![1, 0]]);
        assert_eq!(alg.atom_of(&lang, &vec![vec![0, 1]]), Some(1));
        assert_eq!(alg.atom_of(&lang, &vec![vec![1, 0]]), Some(0));
    }

    #[test]
    fn list_respects_cap() {
        let lang = golden();
        let f = ColorSet::full(1);
        let w = lang.allowable_words(3, f, Some(10)).unwrap();
        assert_eq!(w.words.unwrap().len(), 5);
        assert!(matches!(lang.allowable_words(6, f, Some(10)), Err(Error::CapExceeded(_))));
        assert!(matches!(
            lang.allowable_words_budget(30, f, None, 1000),
            Err(Error::CapExceeded(_))
        ));
    }

    #[test]
    fn language_needs_a_single_symbol_per_colour() {
        let spec = MflSpec {
            n: 2,
            symbols: SymbolCounts::Uniform(1),
            forbidden: vec![vec![vec![], vec![1]]],
        };
        assert!(matches!(Language::compile(&spec), Err(Error::Language(_))));
    }

    #[test]
    fn two_colour_pattern_needs_both_words() {
        // forbid a 1 in colour 1 together with a 1 in colour 2
        let spec = MflSpec {
            n: 2,
            symbols: SymbolCounts::Uniform(2),
            forbidden: vec![vec![vec![1], vec![1]]],
        };
        let lang = Language::compile(&spec).unwrap();
        assert!(lang.contains(&vec![vec![0], vec![1]]));
        assert!(!lang.contains(&vec![vec![1, 0], vec![0]]));
        let alg = MflAlgebra::build(&lang).unwrap();
        for b in &alg.matrices {
            for c in &alg.matrices {
                assert_eq!(b.checked_mul(c), c.checked_mul(b));
            }
        }
    }
}
