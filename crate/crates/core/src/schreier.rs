//! Schreier transversal of `F/γ₂F` and Reidemeister–Schreier rewriting.
//!
//! The transversal is the sorted normal form `y1^{a1} ... yn^{an}`, which is
//! prefix closed. Generators `x_{s,j} = s·g_j·ū(s g_j)^{-1}` get integer ids
//! in first-use order. With `H = gr(y_k, k ∈ K)`, representatives of cosets
//! meeting `H` already lie in `H`, and the generators with `s ∈ H`, `j ∈ K`
//! form a free basis of `H ∩ N`.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fox;
use crate::laurent::Mono;
use crate::ring::{QuotientSpec, RingElement};
use crate::words::{Syllable, Word};

/// Coset label in `F/γ₂F = Z^n`.
pub type Coset = Vec<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Alpha,
    Beta,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CosetClass {
    pub kind: ClassKind,
    pub representative: Word,
}

/// One Schreier generator with its defining pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchreierGen {
    pub id: u32,
    pub s: Coset,
    pub j: u32,
    pub word: Word,
}

#[derive(Clone, Debug, Serialize)]
pub struct GenJson {
    pub z: u32,
    pub s: String,
    pub j: u32,
    pub word: String,
}

impl SchreierGen {
    pub fn to_json(&self) -> GenJson {
        GenJson { z: self.id, s: coset_word(&self.s).to_string(), j: self.j, word: self.word.to_string() }
    }
}

pub fn coset_word(c: &[i64]) -> Word {
    Word::from_syllables(c.iter().enumerate().map(|(i, &e)| Syllable::new(i as u32 + 1, e)))
}

#[derive(Clone, Debug)]
pub struct SchreierSystem {
    rank: u32,
    mark: Vec<u32>,
    gens: Vec<SchreierGen>,
    index: HashMap<(Coset, u32), u32>,
}

impl SchreierSystem {
    /// Schreier system for `N = quotient` in rank `rank`, with `H = gr(y_k, k ∈ mark)`.
    pub fn new(rank: u32, quotient: &QuotientSpec, mark: &[u32]) -> Result<Self> {
        if !quotient.is_abelian() {
            return Err(Error::UnsupportedQuotient(format!(
                "Schreier transversal for {} is not implemented",
                quotient.name()
            )));
        }
        if let Some(&k) = mark.iter().find(|&&k| k == 0 || k > rank) {
            return Err(Error::InvalidGenerator { index: k, rank });
        }
        let mut mark = mark.to_vec();
        mark.sort_unstable();
        mark.dedup();
        Ok(SchreierSystem { rank, mark, gens: Vec::new(), index: HashMap::new() })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn mark(&self) -> &[u32] {
        &self.mark
    }

    pub fn coset(&self, u: &Word) -> Result<Coset> {
        let g = u.max_gen();
        if g > self.rank {
            return Err(Error::RankMismatch { index: g, rank: self.rank });
        }
        Ok(u.exponent_sums(self.rank))
    }

    /// `ū`: the transversal element of `uN`.
    pub fn representative(&self, u: &Word) -> Result<Word> {
        Ok(coset_word(&self.coset(u)?))
    }

    pub fn classify(&self, u: &Word) -> Result<CosetClass> {
        let c = self.coset(u)?;
        let alpha = c.iter().enumerate().all(|(i, &e)| e == 0 || self.mark.contains(&(i as u32 + 1)));
        Ok(CosetClass {
            kind: if alpha { ClassKind::Alpha } else { ClassKind::Beta },
            representative: coset_word(&c),
        })
    }

    pub fn in_kernel(&self, u: &Word) -> bool {
        u.max_gen() <= self.rank && u.exponent_sums(self.rank).iter().all(|&e| e == 0)
    }

    /// `s g_j` is itself a transversal element exactly when no later generator occurs in `s`.
    fn trivial(&self, s: &[i64], j: u32) -> bool {
        s[j as usize..].iter().all(|&e| e == 0)
    }

    /// `s·g_j·ū(s g_j)^{-1}`, or `None` when it is trivial.
    pub fn schreier_generator(&self, s: &[i64], j: u32) -> Option<Word> {
        if self.trivial(s, j) {
            return None;
        }
        let mut t = s.to_vec();
        t[j as usize - 1] += 1;
        Some(coset_word(s).mul(&Word::gen(j)).mul(&coset_word(&t).inverse()))
    }

    /// Id of `x_{s,j}`, assigned on first use; `None` for trivial pairs.
    pub fn generator_id(&mut self, s: &[i64], j: u32) -> Option<u32> {
        if self.trivial(s, j) {
            return None;
        }
        if let Some(&id) = self.index.get(&(s.to_vec(), j)) {
            return Some(id);
        }
        let id = self.gens.len() as u32 + 1;
        let word = self.schreier_generator(s, j).expect("nontrivial");
        self.gens.push(SchreierGen { id, s: s.to_vec(), j, word });
        self.index.insert((s.to_vec(), j), id);
        Some(id)
    }

    pub fn generator(&self, id: u32) -> &SchreierGen {
        &self.gens[id as usize - 1]
    }

    pub fn generators(&self) -> &[SchreierGen] {
        &self.gens
    }

    /// Whether `x_id` belongs to the basis of `H ∩ N`.
    pub fn is_alpha_generator(&self, id: u32) -> bool {
        let g = self.generator(id);
        self.mark.contains(&g.j)
            && g.s.iter().enumerate().all(|(i, &e)| e == 0 || self.mark.contains(&(i as u32 + 1)))
    }

    /// Ids of the α-generators among those materialized so far.
    pub fn alpha_ids(&self) -> Vec<u32> {
        self.gens.iter().map(|g| g.id).filter(|&id| self.is_alpha_generator(id)).collect()
    }

    /// Coset walk: spelling of `v ∈ N` over the Schreier generators.
    pub fn rewrite(&mut self, v: &Word) -> Result<Word> {
        if !self.in_kernel(v) {
            if v.max_gen() > self.rank {
                return Err(Error::RankMismatch { index: v.max_gen(), rank: self.rank });
            }
            return Err(Error::NotInKernel);
        }
        let mut s: Coset = vec![0; self.rank as usize];
        let mut out = Vec::new();
        for l in v.letters() {
            let j = l.gen as usize - 1;
            if l.inv {
                s[j] -= 1;
                if let Some(id) = self.generator_id(&s.clone(), l.gen) {
                    out.push(Syllable::new(id, -1));
                }
            } else {
                if let Some(id) = self.generator_id(&s.clone(), l.gen) {
                    out.push(Syllable::new(id, 1));
                }
                s[j] += 1;
            }
        }
        Ok(Word::from_syllables(out))
    }

    /// Ambient word of a word over Schreier generators.
    pub fn spell(&self, x: &Word) -> Word {
        let mut acc = Word::identity();
        for syl in x.syllables() {
            acc = acc.mul(&self.generator(syl.gen).word.pow(syl.exp));
        }
        acc
    }

    pub fn spell_ring(&self, a: &RingElement) -> RingElement {
        a.map_words(|w| self.spell(w))
    }

    /// Splits `a ∈ Z[F]` as `Σ_t t·a_t` over transversal elements `t`, each
    /// `a_t ∈ Z[N]` rewritten over the Schreier generators.
    pub fn coset_components(&mut self, a: &RingElement) -> Result<BTreeMap<Coset, RingElement>> {
        let mut out: BTreeMap<Coset, RingElement> = BTreeMap::new();
        for (w, c) in a.terms() {
            let t = self.coset(w)?;
            let inner = coset_word(&t).inverse().mul(w);
            let x = self.rewrite(&inner)?;
            out.entry(t).or_default().add_term(x, c.clone());
        }
        out.retain(|_, e| !e.is_zero());
        Ok(out)
    }

    /// Groups `D_j(v)` by coset and compares each designated component with
    /// `ū(s g_j)^{-1}·∂_i(v)` for the generators `x_i = x_{s,j}`.
    pub fn lemma7_decompose(&mut self, v: &Word, j: u32) -> Result<Lemma7Report> {
        let x = self.rewrite(v)?;
        let dj = fox::derive_word(v, j);
        let mut components: BTreeMap<Coset, RingElement> = BTreeMap::new();
        for (w, c) in dj.terms() {
            components.entry(self.coset(w)?).or_default().add_term(w.clone(), c.clone());
        }
        components.retain(|_, e| !e.is_zero());

        let mut designated = Vec::new();
        let mut ok = true;
        let mut seen: Vec<u32> = x.syllables().iter().map(|s| s.gen).collect();
        seen.sort_unstable();
        seen.dedup();
        for id in seen {
            let g = self.generator(id).clone();
            if g.j != j {
                continue;
            }
            let mut t = g.s.clone();
            t[j as usize - 1] += 1;
            let tw = coset_word(&t).inverse();
            let tag: Coset = t.iter().map(|e| -e).collect();
            let predicted = self.spell_ring(&fox::derive_word(&x, id)).word_mul(&tw);
            let actual = components.get(&tag).cloned().unwrap_or_default();
            ok &= predicted == actual;
            designated.push(Lemma7Component { generator: id, coset: tag, predicted, actual });
        }
        // every other coset must belong to no nontrivial generator x_{s,j}
        let mut residual_ok = true;
        for tag in components.keys() {
            if designated.iter().any(|c| &c.coset == tag) {
                continue;
            }
            let mut s: Coset = tag.iter().map(|e| -e).collect();
            s[j as usize - 1] -= 1;
            if !self.trivial(&s, j) {
                residual_ok = false;
            }
        }
        Ok(Lemma7Report { components, designated, matches: ok, residual_off_designated: residual_ok })
    }
}

#[derive(Clone, Debug)]
pub struct Lemma7Component {
    pub generator: u32,
    pub coset: Coset,
    pub predicted: RingElement,
    pub actual: RingElement,
}

#[derive(Clone, Debug)]
pub struct Lemma7Report {
    pub components: BTreeMap<Coset, RingElement>,
    pub designated: Vec<Lemma7Component>,
    pub matches: bool,
    pub residual_off_designated: bool,
}

impl Lemma7Report {
    pub fn holds(&self) -> bool {
        self.matches && self.residual_off_designated
    }
}

/// Laurent monomial of a coset label.
pub fn coset_mono(c: &[i64]) -> Mono {
    Mono::from_exponents(c)
}

/// Exponent-sum image of an element of `N` in `N/[N,N]`, keyed by generator id.
pub fn abelian_image(x: &Word) -> BTreeMap<u32, i64> {
    let mut out: BTreeMap<u32, i64> = BTreeMap::new();
    for s in x.syllables() {
        *out.entry(s.gen).or_default() += s.exp;
    }
    out.retain(|_, e| *e != 0);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_word;

    fn w(s: &str) -> Word {
        parse_word(s, None).unwrap()
    }

    fn sys(rank: u32, mark: &[u32]) -> SchreierSystem {
        SchreierSystem::new(rank, &QuotientSpec::abelian(), mark).unwrap()
    }

    #[test]
    fn representatives() {
        let s = sys(2, &[1]);
        assert_eq!(s.representative(&w("y2 y1")).unwrap(), w("y1 y2"));
        assert_eq!(s.representative(&w("[y1,y2]")).unwrap(), Word::identity());
        assert_eq!(s.representative(&w("y1^3")).unwrap(), w("y1^3"));
        assert!(SchreierSystem::new(2, &QuotientSpec::gamma(3).unwrap(), &[1]).is_err());
    }

    #[test]
    fn classes() {
        let s = sys(2, &[1]);
        assert_eq!(s.classify(&w("y1^5")).unwrap(), CosetClass { kind: ClassKind::Alpha, representative: w("y1^5") });
        assert_eq!(s.classify(&w("y2")).unwrap().kind, ClassKind::Beta);
        assert_eq!(s.classify(&Word::identity()).unwrap().kind, ClassKind::Alpha);
    }

    #[test]
    fn generators() {
        let s = sys(2, &[1]);
        assert_eq!(s.schreier_generator(&[0, 1], 1), Some(w("y2 y1 Y2 Y1")));
        assert_eq!(s.schreier_generator(&[0, 0], 1), None);
        assert_eq!(s.schreier_generator(&[0, 0], 2), None);
        assert_eq!(s.schreier_generator(&[1, 0], 2), None);
    }

    #[test]
    fn rewriting() {
        let mut s = sys(2, &[1]);
        let x = s.rewrite(&w("[y1,y2]")).unwrap();
        assert_eq!(x.len(), 1);
        assert_eq!(s.spell(&x), w("[y1,y2]"));
        let g = s.generator(x.syllables()[0].gen);
        // the walk meets its only nontrivial generator at s = y1^-1 y2^-1
        assert_eq!((g.s.clone(), g.j), (vec![-1, -1], 1));
        assert_eq!(s.rewrite(&Word::identity()).unwrap(), Word::identity());
        assert_eq!(s.rewrite(&w("y1")), Err(Error::NotInKernel));
    }

    #[test]
    fn lemma7_examples() {
        let mut s = sys(2, &[1]);
        let r = s.lemma7_decompose(&w("[y1,y2]"), 1).unwrap();
        assert!(r.holds());
        assert_eq!(r.designated.len(), 1);
        let id = s.generator_id(&[0, 1], 1).unwrap();
        let xz = s.generator(id).word.clone();
        let r = s.lemma7_decompose(&xz, 1).unwrap();
        assert!(r.holds());
        assert_eq!(r.designated[0].predicted, RingElement::from_word(w("Y2 Y1")));
        let r = s.lemma7_decompose(&Word::identity(), 2).unwrap();
        assert!(r.components.is_empty() && r.holds());
    }

    #[test]
    fn alpha_generators_span_h_cap_n() {
        let mut s = sys(3, &[1, 2]);
        let x = s.rewrite(&w("[y1,y2] [y2,y1^2]")).unwrap();
        assert!(x.syllables().iter().all(|syl| s.is_alpha_generator(syl.gen)));
        let x = s.rewrite(&w("[y1,y3]")).unwrap();
        assert!(x.syllables().iter().any(|syl| !s.is_alpha_generator(syl.gen)));
    }
}
