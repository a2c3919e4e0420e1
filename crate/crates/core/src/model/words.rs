//! Basis vectors of the Fock module and the action of creation operators on them.
//!
//! Graph paths are kept in normal form: colours are non-decreasing from the range end
//! (left) to the source end (right). Creating an edge of colour `c` prepends it and
//! moves it right past every lower colour with the factorization rules.

use crate::colors::MultiIndex;
use crate::error::{Error, Result};
use crate::model::mfl::MflWord;
use crate::model::{Instance, Structure};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Word {
    /// `edges` as `(colour, index)` from range to source; `end` is the source vertex.
    Path { end: usize, edges: Vec<(u8, u32)> },
    Mfl(MflWord),
}

/// Generator `x_{i,j}`: edge `j` of colour `i`, or symbol `j` of colour `i` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Gen {
    pub color: usize,
    pub index: usize,
}

impl Gen {
    pub fn new(color: usize, index: usize) -> Self {
        Gen { color, index }
    }
}

impl Instance {
    /// Degree-zero basis vectors: one per vertex for graphs, the empty word for languages.
    pub fn roots(&self) -> Vec<Word> {
        match &self.structure {
            Structure::Graph(_) => {
                (0..self.dim()).map(|v| Word::Path { end: v, edges: Vec::new() }).collect()
            }
            Structure::Mfl { lang, .. } => vec![Word::Mfl(lang.empty_word())],
        }
    }

    /// A basis vector `ζ_α` on which `π(a)` acts by `a(α)`.
    pub fn zeta(&self, atom: usize) -> Word {
        match &self.structure {
            Structure::Graph(_) => Word::Path { end: atom, edges: Vec::new() },
            Structure::Mfl { algebra, .. } => Word::Mfl(algebra.representatives[atom].clone()),
        }
    }

    /// The atom `α` with `π(δ_α) w = w`: the range vertex of a path, or the class of a word.
    pub fn atom_of(&self, w: &Word) -> usize {
        match (&self.structure, w) {
            (Structure::Graph(g), Word::Path { end, edges }) => match edges.first() {
                Some(&(c, j)) => g.edges[c as usize][j as usize].range,
                None => *end,
            },
            (Structure::Mfl { lang, algebra }, Word::Mfl(m)) => {
                algebra.atom_of(lang, m).expect("basis words are allowable")
            }
            _ => panic!("word does not belong to this instance"),
        }
    }

    pub fn degree(&self, w: &Word) -> MultiIndex {
        let mut d = MultiIndex::zero(self.rank());
        match w {
            Word::Path { edges, .. } => {
                for &(c, _) in edges {
                    d.0[c as usize] += 1;
                }
            }
            Word::Mfl(m) => {
                for (i, x) in m.iter().enumerate() {
                    d.0[i] = x.len() as u32;
                }
            }
        }
        d
    }

    /// Whether the factorization rules needed for creation on paths are available.
    pub fn require_factorization(&self) -> Result<()> {
        if let Structure::Graph(g) = &self.structure {
            for lo in 0..self.rank() {
                for hi in lo + 1..self.rank() {
                    if !g.pairs.contains_key(&(lo, hi)) {
                        return Err(Error::FactorizationRequired(lo + 1, hi + 1));
                    }
                }
            }
        }
        Ok(())
    }

    fn swap_down(&self, lo: usize, hi: usize, h: usize, l: usize) -> Result<(usize, usize)> {
        let g = self.graph().expect("graph instance");
        let (map, _) =
            g.pairs.get(&(lo, hi)).ok_or(Error::FactorizationRequired(lo + 1, hi + 1))?;
        Ok(map.inv[&(h, l)])
    }

    fn swap_up(&self, lo: usize, hi: usize, l: usize, h: usize) -> Result<(usize, usize)> {
        let g = self.graph().expect("graph instance");
        let (map, _) =
            g.pairs.get(&(lo, hi)).ok_or(Error::FactorizationRequired(lo + 1, hi + 1))?;
        Ok(map.fwd[&(l, h)])
    }

    /// `t(x_g) w`, or `None` when it vanishes.
    pub fn create(&self, g: Gen, w: &Word) -> Result<Option<Word>> {
        match (&self.structure, w) {
            (Structure::Graph(gd), Word::Path { end, edges }) => {
                let e = gd.edges[g.color][g.index];
                if e.source != self.atom_of(w) {
                    return Ok(None);
                }
                let mut out = Vec::with_capacity(edges.len() + 1);
                let mut cur = (g.color, g.index);
                let mut pos = 0;
                while pos < edges.len() && (edges[pos].0 as usize) < cur.0 {
                    let (lc, li) = (edges[pos].0 as usize, edges[pos].1 as usize);
                    // (cur of colour hi, edge of colour lo) becomes (lo', hi')
                    let (l2, h2) = self.swap_down(lc, cur.0, cur.1, li)?;
                    out.push((lc as u8, l2 as u32));
                    cur = (cur.0, h2);
                    pos += 1;
                }
                out.push((cur.0 as u8, cur.1 as u32));
                out.extend_from_slice(&edges[pos..]);
                Ok(Some(Word::Path { end: *end, edges: out }))
            }
            (Structure::Mfl { lang, .. }, Word::Mfl(m)) => {
                Ok(lang.prepend(g.color, g.index as u16, m).map(Word::Mfl))
            }
            _ => Err(Error::Path("word does not belong to this instance".into())),
        }
    }

    /// `t(x_g)* w`, or `None` when it vanishes.
    pub fn annihilate(&self, g: Gen, w: &Word) -> Result<Option<Word>> {
        match (&self.structure, w) {
            (Structure::Graph(_), Word::Path { end, edges }) => {
                let Some(first) = edges.iter().position(|&(c, _)| c as usize == g.color) else {
                    return Ok(None);
                };
                let mut rest: Vec<(u8, u32)> = edges.clone();
                let mut cur = rest[first].1 as usize;
                // move the first colour-c edge to the front
                for pos in (0..first).rev() {
                    let (lc, li) = (rest[pos].0 as usize, rest[pos].1 as usize);
                    let (h2, l2) = self.swap_up(lc, g.color, li, cur)?;
                    rest[pos + 1] = (lc as u8, l2 as u32);
                    cur = h2;
                }
                if cur != g.index {
                    return Ok(None);
                }
                rest.remove(0);
                Ok(Some(Word::Path { end: *end, edges: rest }))
            }
            (Structure::Mfl { .. }, Word::Mfl(m)) => {
                if m[g.color].first() == Some(&(g.index as u16)) {
                    let mut out = m.clone();
                    out[g.color].remove(0);
                    Ok(Some(Word::Mfl(out)))
                } else {
                    Ok(None)
                }
            }
            _ => Err(Error::Path("word does not belong to this instance".into())),
        }
    }

    /// `t(x_{g_1}) ⋯ t(x_{g_m}) w`.
    pub fn apply_monomial(&self, gens: &[Gen], w: &Word) -> Result<Option<Word>> {
        let mut cur = w.clone();
        for &g in gens.iter().rev() {
            match self.create(g, &cur)? {
                Some(x) => cur = x,
                None => return Ok(None),
            }
        }
        Ok(Some(cur))
    }

    /// Checks generator indices and, for graphs, that consecutive edges compose.
    pub fn check_monomial(&self, gens: &[Gen]) -> Result<()> {
        for g in gens {
            if g.color >= self.rank() || g.index as u64 >= self.unit_sizes()[g.color] {
                return Err(Error::Path(format!(
                    "generator ({}, {}) does not exist",
                    g.color + 1,
                    g.index + 1
                )));
            }
        }
        if let Some(gd) = self.graph() {
            for pair in gens.windows(2) {
                let a = gd.edges[pair[0].color][pair[0].index];
                let b = gd.edges[pair[1].color][pair[1].index];
                if a.source != b.range {
                    return Err(Error::Path(format!(
                        "edge ({}, {}) does not compose with edge ({}, {})",
                        pair[0].color + 1,
                        pair[0].index + 1,
                        pair[1].color + 1,
                        pair[1].index + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Generators `g_1, …, g_m` with `t(x_{g_1}) ⋯ t(x_{g_m})` mapping a root onto `w`.
    pub fn gens_of(&self, w: &Word) -> Vec<Gen> {
        match w {
            Word::Path { edges, .. } => {
                edges.iter().map(|&(c, j)| Gen::new(c as usize, j as usize)).collect()
            }
            Word::Mfl(m) => m
                .iter()
                .enumerate()
                .flat_map(|(i, x)| x.iter().map(move |&k| Gen::new(i, k as usize)))
                .collect(),
        }
    }

    /// The root a word is built on.
    pub fn root_of(&self, w: &Word) -> Word {
        match w {
            Word::Path { end, .. } => Word::Path { end: *end, edges: Vec::new() },
            Word::Mfl(m) => Word::Mfl(vec![Vec::new(); m.len()]),
        }
    }

    /// `t(x_{g_1} ⋯ x_{g_m})* w`.
    pub fn annihilate_monomial(&self, gens: &[Gen], w: &Word) -> Result<Option<Word>> {
        let mut cur = w.clone();
        for &g in gens {
            match self.annihilate(g, &cur)? {
                Some(x) => cur = x,
                None => return Ok(None),
            }
        }
        Ok(Some(cur))
    }

    /// `t(x_p) w` for a basis path `p`. An empty path at `v` acts as the vertex projection
    /// `π(δ_v)`, not as the identity.
    pub fn apply_path(&self, p: &Word, w: &Word) -> Result<Option<Word>> {
        match p {
            Word::Path { end, edges } if edges.is_empty() => {
                Ok((self.atom_of(w) == *end).then(|| w.clone()))
            }
            _ => self.apply_monomial(&self.gens_of(p), w),
        }
    }

    /// `t(x_p)* w`, with the same convention for empty paths.
    pub fn annihilate_path(&self, p: &Word, w: &Word) -> Result<Option<Word>> {
        match p {
            Word::Path { end, edges } if edges.is_empty() => {
                Ok((self.atom_of(w) == *end).then(|| w.clone()))
            }
            _ => self.annihilate_monomial(&self.gens_of(p), w),
        }
    }

    pub fn word_label(&self, w: &Word) -> String {
        match w {
            Word::Path { end, edges } if edges.is_empty() => self.labels()[*end].clone(),
            Word::Path { edges, .. } => edges
                .iter()
                .map(|&(c, j)| format!("e{}.{}", c + 1, j + 1))
                .collect::<Vec<_>>()
                .join(" "),
            Word::Mfl(m) => crate::model::mfl::word_label(m),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::model::{validate, GraphSpec, InstanceSpec};

    use super::*;

    fn e1() -> Instance {
        validate(&InstanceSpec::Graph(GraphSpec {
            n: 2,
            vertices: vec!["*".into()],
            matrices: vec![vec![vec![2]], vec![vec![3]]],
            factorizations: None,
        }))
        .unwrap()
    }

    #[test]
    fn creation_sorts_colours_and_annihilation_inverts_it() {
        let inst = e1();
        let root = inst.roots().remove(0);
        let x = inst.create(Gen::new(1, 2), &root).unwrap().unwrap();
        let y = inst.create(Gen::new(0, 1), &x).unwrap().unwrap();
        let z = inst.create(Gen::new(1, 0), &y).unwrap().unwrap();
        // colour 2 edge created last moves behind the colour 1 edge
        assert_eq!(z, Word::Path { end: 0, edges: vec![(0, 1), (1, 0), (1, 2)] });
        assert_eq!(inst.degree(&z).0, vec![1, 2]);
        assert_eq!(inst.annihilate(Gen::new(1, 0), &z).unwrap().unwrap(), y);
        assert_eq!(inst.annihilate(Gen::new(0, 1), &y).unwrap().unwrap(), x);
        assert!(inst.annihilate(Gen::new(1, 1), &z).unwrap().is_none());
        let back = inst.annihilate(Gen::new(0, 1), &z).unwrap().unwrap();
        assert_eq!(back, Word::Path { end: 0, edges: vec![(1, 0), (1, 2)] });
    }
}
