//! Finitely generated subgroups of a free group via Stallings folding.
//!
//! Edges carry labels that are words in the subgroup basis, so reading a
//! closed path at the base vertex yields the element's spelling in that basis.

use crate::error::{Error, Result};
use crate::words::{Letter, Word};

#[derive(Clone, Debug)]
struct Edge {
    from: usize,
    to: usize,
    gen: u32,
    label: Word,
}

/// Folded core graph of `gr(basis)`.
#[derive(Clone, Debug)]
pub struct SubgroupGraph {
    edges: Vec<Option<Edge>>,
    vertices: usize,
    basis_len: usize,
}

/// A step out of a vertex: edge index, whether it is read backwards, target.
#[derive(Clone, Copy)]
struct Step {
    edge: usize,
    back: bool,
    target: usize,
}

impl SubgroupGraph {
    /// Builds and folds the graph; `NotFreeBasis` if the words are not a free basis.
    pub fn new(basis: &[Word]) -> Result<Self> {
        let mut g = SubgroupGraph { edges: Vec::new(), vertices: 1, basis_len: basis.len() };
        for (k, x) in basis.iter().enumerate() {
            if x.is_identity() {
                return Err(Error::NotFreeBasis);
            }
            let letters: Vec<Letter> = x.letters().collect();
            let mut at = 0;
            for (i, l) in letters.iter().enumerate() {
                let next = if i + 1 == letters.len() {
                    0
                } else {
                    g.vertices += 1;
                    g.vertices - 1
                };
                let label = if i == 0 { Word::gen(k as u32 + 1) } else { Word::identity() };
                g.add_edge(at, next, *l, label);
                at = next;
            }
        }
        g.fold()?;
        Ok(g)
    }

    fn add_edge(&mut self, from: usize, to: usize, l: Letter, label: Word) {
        let e = if l.inv {
            Edge { from: to, to: from, gen: l.gen, label: label.inverse() }
        } else {
            Edge { from, to, gen: l.gen, label }
        };
        self.edges.push(Some(e));
    }

    fn steps(&self, v: usize, l: Letter) -> Vec<Step> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            let Some(e) = e else { continue };
            if e.gen != l.gen {
                continue;
            }
            if !l.inv && e.from == v {
                out.push(Step { edge: i, back: false, target: e.to });
            }
            if l.inv && e.to == v {
                out.push(Step { edge: i, back: true, target: e.from });
            }
        }
        out
    }

    fn read_label(&self, s: Step) -> Word {
        let e = self.edges[s.edge].as_ref().expect("live edge");
        if s.back {
            e.label.inverse()
        } else {
            e.label.clone()
        }
    }

    fn find_fold(&self) -> Option<(Step, Step)> {
        for e in self.edges.iter().flatten() {
            for v in [e.from, e.to] {
                for inv in [false, true] {
                    let st = self.steps(v, Letter { gen: e.gen, inv });
                    if st.len() > 1 {
                        return Some((st[0], st[1]));
                    }
                }
            }
        }
        None
    }

    fn fold(&mut self) -> Result<()> {
        while let Some((s1, s2)) = self.find_fold() {
            let (l1, l2) = (self.read_label(s1), self.read_label(s2));
            if s1.target == s2.target {
                if l1 != l2 {
                    return Err(Error::NotFreeBasis);
                }
                self.edges[s2.edge] = None;
                continue;
            }
            // keep the base vertex; merge `gone` into `keep`
            let (keep_step, gone_step, lk, lg) = if s2.target == 0 { (s2, s1, l2, l1) } else { (s1, s2, l1, l2) };
            let keep = keep_step.target;
            let gone = gone_step.target;
            self.edges[gone_step.edge] = None;
            let shift = lk.inverse().mul(&lg);
            for e in self.edges.iter_mut().flatten() {
                if e.from == gone {
                    e.from = keep;
                    e.label = shift.mul(&e.label);
                }
                if e.to == gone {
                    e.to = keep;
                    e.label = e.label.mul(&shift.inverse());
                }
            }
        }
        let live = self.edges.iter().flatten().count();
        let mut seen = vec![false; self.vertices];
        for e in self.edges.iter().flatten() {
            seen[e.from] = true;
            seen[e.to] = true;
        }
        seen[0] = true;
        let verts = seen.iter().filter(|&&b| b).count();
        if live + 1 != verts + self.basis_len {
            return Err(Error::NotFreeBasis);
        }
        Ok(())
    }

    /// Spelling of `v` in the basis, or `NotInSubgroup`.
    pub fn express(&self, v: &Word) -> Result<Word> {
        let mut at = 0;
        let mut acc = Word::identity();
        for l in v.letters() {
            let st = self.steps(at, l);
            let Some(&s) = st.first() else { return Err(Error::NotInSubgroup) };
            acc = acc.mul(&self.read_label(s));
            at = s.target;
        }
        if at != 0 {
            return Err(Error::NotInSubgroup);
        }
        Ok(acc)
    }

    pub fn contains(&self, v: &Word) -> bool {
        self.express(v).is_ok()
    }
}

/// Spelling of `v` in `basis`; `NotInSubgroup` if `v ∉ gr(basis)`.
pub fn express(v: &Word, basis: &[Word]) -> Result<Word> {
    SubgroupGraph::new(basis)?.express(v)
}
