//! Polynilpotent series bookkeeping: signatures, levels, Δ-valuations inside
//! `Z[N]`, leading forms, monomial weights and bounded isolator membership.
//!
//! `N₁₁ = γ_c F`; `N_{1l} = γ_l(N₁₁)` is read off the Magnus expansion of the
//! Schreier spelling, where `Δ_i = 𝔛^i`. Levels `k >= 2` are carried by
//! [`LevelIndex`] but valuation answers are given for `k = 1` only.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::magnus::{self, Monomial, Valuation};
use crate::ring::{QuotientSpec, RingElement};
use crate::schreier::{abelian_image, SchreierSystem};
use crate::words::{FreeGroup, Word};

/// `(m_1, ..., m_s)` over the base `N₁₁`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiltrationSignature {
    pub classes: Vec<usize>,
    #[serde(serialize_with = "ser_quotient")]
    pub base: QuotientSpec,
}

fn ser_quotient<S: serde::Serializer>(q: &QuotientSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&q.name())
}

impl FiltrationSignature {
    pub fn new(base: QuotientSpec, classes: Vec<usize>) -> Result<Self> {
        if classes.is_empty() || classes.contains(&0) {
            return Err(Error::PreconditionFailed("signature classes must be positive and nonempty".into()));
        }
        Ok(FiltrationSignature { classes, base })
    }

    pub fn m1(&self) -> usize {
        self.classes[0]
    }

    pub fn depth(&self) -> usize {
        self.classes.len()
    }

    /// Rewrites `(k, m_k + 1)` as `(k + 1, 1)` where the tower continues.
    pub fn normalize(&self, lv: LevelIndex) -> LevelIndex {
        if lv.k >= 1 && lv.k < self.classes.len() && lv.l == self.classes[lv.k - 1] + 1 {
            LevelIndex { k: lv.k + 1, l: 1 }
        } else {
            lv
        }
    }

    /// `(1, l)` form of a level when it lies on the first layer.
    pub fn first_layer(&self, lv: LevelIndex) -> Option<usize> {
        match (lv.k, lv.l) {
            (1, l) => Some(l),
            (2, 1) => Some(self.m1() + 1),
            _ => None,
        }
    }

    pub fn check_level(&self, lv: LevelIndex) -> Result<()> {
        if lv.k == 0 || lv.k > self.classes.len() || lv.l == 0 || lv.l > self.classes[lv.k - 1] + 1 {
            return Err(Error::PreconditionFailed(format!("level {lv} outside signature {self}")));
        }
        Ok(())
    }

    /// Every level `(k, l)` of the signature, in order.
    pub fn levels(&self) -> Vec<LevelIndex> {
        let mut out = Vec::new();
        for (i, &m) in self.classes.iter().enumerate() {
            for l in 1..=m + 1 {
                out.push(LevelIndex { k: i + 1, l });
            }
        }
        out
    }
}

impl FromStr for FiltrationSignature {
    type Err = Error;

    /// `gamma2;m=[2]`, `gamma2;m=[2,1]`.
    fn from_str(s: &str) -> Result<Self> {
        let perr = |pos: usize, msg: &str| Error::Parse { pos, msg: msg.to_string() };
        let (base, rest) = s.split_once(';').ok_or_else(|| perr(1, "expected '<base>;m=[...]'"))?;
        let base = base.trim();
        let c: u32 = base
            .strip_prefix("gamma")
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| perr(1, "base must be gamma<c>"))?;
        let base = QuotientSpec::gamma(c)?;
        let off = s.find(';').unwrap_or(0) + 2;
        let list = rest
            .trim()
            .strip_prefix("m=")
            .ok_or_else(|| perr(off, "expected 'm='"))?
            .trim();
        let list = list
            .strip_prefix('[')
            .and_then(|l| l.strip_suffix(']'))
            .ok_or_else(|| perr(off + 2, "expected bracketed list"))?;
        let classes = list
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| perr(off + 2, "bad class")))
            .collect::<Result<Vec<_>>>()?;
        FiltrationSignature::new(base, classes)
    }
}

impl fmt::Display for FiltrationSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.classes.iter().map(|c| c.to_string()).collect();
        write!(f, "{};m=[{}]", self.base.name(), m.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LevelIndex {
    pub k: usize,
    pub l: usize,
}

impl LevelIndex {
    pub fn new(k: usize, l: usize) -> Self {
        LevelIndex { k, l }
    }
}

impl fmt::Display for LevelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.k, self.l)
    }
}

fn schreier_for(sig_base: &QuotientSpec, rank: u32) -> Result<SchreierSystem> {
    SchreierSystem::new(rank, sig_base, &[])
}

/// `i` with `r ∈ N_{1i} \ N_{1,i+1}`.
pub fn locate_level(r: &Word, rank: u32, sig: &FiltrationSignature, d: usize) -> Result<usize> {
    let mut sys = schreier_for(&sig.base, rank)?;
    if !sys.in_kernel(r) {
        return Err(Error::NotInVerbal);
    }
    let x = sys.rewrite(r)?;
    match magnus::lcs_class(&x, d)? {
        Valuation::Finite(i) if i > sig.m1() => Err(Error::LevelOutOfRange { class: i, max: sig.m1() }),
        Valuation::Finite(i) => Ok(i),
        Valuation::Beyond(_) => Err(Error::Inconclusive(d)),
    }
}

/// Lower-central class of `w ∈ N₁₁` inside `N₁₁`.
pub fn class_in_n(sys: &mut SchreierSystem, w: &Word, d: usize) -> Result<Valuation> {
    let x = sys.rewrite(w)?;
    magnus::lcs_class(&x, d)
}

/// Whether `w ∈ N_{1,l}`; `None` when the truncation cannot decide.
pub fn in_first_layer(sys: &mut SchreierSystem, w: &Word, l: usize, d: usize) -> Result<Option<bool>> {
    if w.is_identity() || l <= 1 {
        return Ok(Some(sys.in_kernel(w)));
    }
    if !sys.in_kernel(w) {
        return Ok(Some(false));
    }
    Ok(class_in_n(sys, w, d)?.at_least(l))
}

/// Class of `w ∈ H ∩ N` in the lower central series of `H ∩ N`, where
/// `H = gr(y_k, k ∈ keep)`, computed in `H`'s own Schreier system.
/// The identity gets `Beyond(d)`.
pub fn class_in_subgroup(w: &Word, keep: &[u32], d: usize) -> Result<Valuation> {
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if !w.uses_only(&sorted) {
        return Err(Error::NotInSubgroup);
    }
    if w.is_identity() {
        return Ok(Valuation::Beyond(d));
    }
    let relabel = |g: u32| sorted.iter().position(|&k| k == g).map(|p| p as u32 + 1).unwrap_or(0);
    let mut inner = SchreierSystem::new(sorted.len() as u32, &QuotientSpec::abelian(), &[])?;
    let x = inner.rewrite(&w.relabel(relabel))?;
    magnus::lcs_class(&x, d)
}

/// Δ-valuation of an element of `Z[N]` written over Schreier letters.
pub fn delta_valuation(u: &RingElement, d: usize) -> Valuation {
    magnus::ideal_valuation(u, d)
}

/// Compares the Δ-valuation of `u ∈ Z[H ∩ N]` (ambient spelling, `H = gr(y_k, k ∈ mark)`)
/// computed in `N` with the one computed inside `H ∩ N`.
pub fn restriction_check(u: &RingElement, rank: u32, mark: &[u32], d: usize) -> Result<bool> {
    let q = QuotientSpec::abelian();
    let mut ambient = SchreierSystem::new(rank, &q, mark)?;
    let mut sorted = mark.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut inner = SchreierSystem::new(sorted.len() as u32, &q, &[])?;
    let relabel = |g: u32| sorted.iter().position(|&k| k == g).map(|p| p as u32 + 1).unwrap_or(0);
    let mut a = RingElement::zero();
    let mut b = RingElement::zero();
    for (w, c) in u.terms() {
        if !w.uses_only(&sorted) || !ambient.in_kernel(w) {
            return Err(Error::PreconditionFailed(format!("{w} is not in H ∩ N")));
        }
        a.add_term(ambient.rewrite(w)?, c.clone());
        b.add_term(inner.rewrite(&w.relabel(relabel))?, c.clone());
    }
    Ok(delta_valuation(&a, d) == delta_valuation(&b, d))
}

/// Degree and homogeneous component of the least nonzero degree.
pub fn leading_form(u: &RingElement, d: usize) -> Result<(usize, BTreeMap<Monomial, BigInt>)> {
    match delta_valuation(u, d) {
        Valuation::Finite(i) => Ok((i, magnus::expand(u, i).component(i).clone())),
        Valuation::Beyond(_) => Err(Error::ZeroElement),
    }
}

/// `Σ ω(c_j - 1)` for a monomial listing factor indices (with repetition);
/// `layers[j]` is the layer of factor `j`.
pub fn monomial_weight(monomial: &[usize], layers: &[usize]) -> Result<usize> {
    monomial
        .iter()
        .map(|&j| layers.get(j).copied().filter(|&l| l > 0).ok_or(Error::UnknownLayer(j)))
        .sum()
}

/// `(r_relator^sign)^conj`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ConjFactor {
    pub relator: usize,
    pub sign: i64,
    #[serde(serialize_with = "ser_word")]
    pub conj: Word,
}

pub fn ser_word<S: serde::Serializer>(w: &Word, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

impl ConjFactor {
    pub fn eval(&self, relators: &[Word]) -> Word {
        relators[self.relator].pow(self.sign).conjugate(&self.conj)
    }

    pub fn conjugated(&self, g: &Word) -> ConjFactor {
        ConjFactor { relator: self.relator, sign: self.sign, conj: self.conj.mul(g) }
    }

    pub fn inverse(&self) -> ConjFactor {
        ConjFactor { relator: self.relator, sign: -self.sign, conj: self.conj.clone() }
    }
}

pub fn eval_product(factors: &[ConjFactor], relators: &[Word]) -> Word {
    factors.iter().fold(Word::identity(), |acc, f| acc.mul(&f.eval(relators)))
}

/// Search bounds for the isolator test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RootBounds {
    pub power: u32,
    pub conj: usize,
    pub factors: usize,
}

/// `v^power = Π factors · residual`, `residual ∈ N_target`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RootCertificate {
    pub power: u32,
    pub factors: Vec<ConjFactor>,
    #[serde(serialize_with = "ser_word")]
    pub residual: Word,
}

impl RootCertificate {
    /// Free-reduction recheck of the factorization.
    pub fn reproduces(&self, v: &Word, relators: &[Word]) -> bool {
        eval_product(&self.factors, relators).mul(&self.residual) == v.pow(self.power as i64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RootAnswer {
    Yes(RootCertificate),
    NoWithinBound,
}

type Image = Vec<(u32, u32, i64)>;

/// Image in `N/[N,N]`, keyed by the generators' defining `(coset, j)` so that
/// independent Schreier systems agree.
fn keyed_image(sys: &mut SchreierSystem, w: &Word) -> Result<BTreeMap<(Vec<i64>, u32), i64>> {
    let x = sys.rewrite(w)?;
    Ok(abelian_image(&x)
        .into_iter()
        .map(|(id, e)| {
            let g = sys.generator(id);
            ((g.s.clone(), g.j), e)
        })
        .collect())
}

fn image_key(m: &BTreeMap<(Vec<i64>, u32), i64>, intern: &mut HashMap<(Vec<i64>, u32), u32>) -> Image {
    let mut out: Image = m
        .iter()
        .filter(|(_, &e)| e != 0)
        .map(|(k, &e)| {
            let n = intern.len() as u32;
            let id = *intern.entry(k.clone()).or_insert(n);
            (id, 0, e)
        })
        .collect();
    out.sort_unstable();
    out
}

fn add_images(a: &Image, b: &Image, sign: i64) -> Image {
    let mut m: BTreeMap<u32, i64> = a.iter().map(|&(k, _, e)| (k, e)).collect();
    for &(k, _, e) in b {
        *m.entry(k).or_default() += sign * e;
    }
    m.into_iter().filter(|(_, e)| *e != 0).map(|(k, e)| (k, 0, e)).collect()
}

/// All reduced words of length `<= len` in rank `rank`, shortest first.
pub fn words_up_to(rank: u32, len: usize) -> Vec<Word> {
    let mut out = vec![Word::identity()];
    let mut frontier = vec![Word::identity()];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &frontier {
            for g in 1..=rank {
                for e in [1i64, -1] {
                    let x = w.mul(&Word::gen_pow(g, e));
                    if x.len() == w.len() + 1 {
                        next.push(x);
                    }
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Bounded semi-decision of `v ∈ √(R·N_target)`: looks for `1 <= j <= power`
/// with `v^j` a product of at most `factors` relator conjugates (conjugators
/// of length `<= conj`) times an element of `N_target`. Smallest `j` wins.
pub fn is_in_root(
    v: &Word,
    target: LevelIndex,
    relators: &[Word],
    rank: u32,
    sig: &FiltrationSignature,
    bounds: &RootBounds,
    d: usize,
) -> Result<RootAnswer> {
    let group = FreeGroup::new(rank)?;
    group.check_word(v)?;
    for r in relators {
        group.check_word(r)?;
    }
    let l = sig
        .first_layer(sig.normalize(target))
        .ok_or_else(|| Error::PreconditionFailed(format!("level {target}: only the first layer is decided")))?;
    let probe = schreier_for(&sig.base, rank)?;
    if !probe.in_kernel(v) || relators.iter().any(|r| !probe.in_kernel(r)) {
        return Ok(RootAnswer::NoWithinBound);
    }
    let conjugators = words_up_to(rank, bounds.conj);
    let hit = (1..=bounds.power).into_par_iter().find_map_first(|j| {
        search_power(v, j, l, relators, rank, sig, &conjugators, bounds.factors, d).transpose()
    });
    match hit {
        Some(Ok(cert)) => Ok(RootAnswer::Yes(cert)),
        Some(Err(e)) => Err(e),
        None => Ok(RootAnswer::NoWithinBound),
    }
}

#[allow(clippy::too_many_arguments)]
fn search_power(
    v: &Word,
    j: u32,
    l: usize,
    relators: &[Word],
    rank: u32,
    sig: &FiltrationSignature,
    conjugators: &[Word],
    max_factors: usize,
    d: usize,
) -> Result<Option<RootCertificate>> {
    let mut sys = schreier_for(&sig.base, rank)?;
    let x = v.pow(j as i64);
    let check = |sys: &mut SchreierSystem, factors: &[ConjFactor]| -> Result<Option<RootCertificate>> {
        let p = eval_product(factors, relators);
        let residual = p.inverse().mul(&x);
        if in_first_layer(sys, &residual, l, d)? == Some(true) {
            return Ok(Some(RootCertificate { power: j, factors: factors.to_vec(), residual }));
        }
        Ok(None)
    };
    if let Some(c) = check(&mut sys, &[])? {
        return Ok(Some(c));
    }
    if relators.is_empty() || max_factors == 0 {
        return Ok(None);
    }
    let mut intern = HashMap::new();
    let mut singles: Vec<(ConjFactor, Image)> = Vec::new();
    for (ri, r) in relators.iter().enumerate() {
        for sign in [1i64, -1] {
            for f in conjugators {
                let cf = ConjFactor { relator: ri, sign, conj: f.clone() };
                let img = keyed_image(&mut sys, &r.pow(sign).conjugate(f))?;
                singles.push((cf, image_key(&img, &mut intern)));
            }
        }
    }
    let target = image_key(&keyed_image(&mut sys, &x)?, &mut intern);
    let mut by_image: HashMap<Image, Vec<usize>> = HashMap::new();
    for (i, (_, img)) in singles.iter().enumerate() {
        by_image.entry(img.clone()).or_default().push(i);
    }
    // prefixes of n-1 factors; the last factor is looked up by the abelian image it must have
    let mut prefixes: Vec<(Vec<usize>, Image)> = vec![(Vec::new(), Vec::new())];
    for _n in 1..=max_factors {
        let mut hits: Vec<Vec<usize>> = Vec::new();
        for (idx, img) in &prefixes {
            let need = add_images(&target, img, -1);
            if let Some(cands) = by_image.get(&need) {
                for &c in cands {
                    let mut v = idx.clone();
                    v.push(c);
                    hits.push(v);
                }
            }
        }
        hits.sort();
        for h in hits {
            let fs: Vec<ConjFactor> = h.iter().map(|&i| singles[i].0.clone()).collect();
            if let Some(c) = check(&mut sys, &fs)? {
                return Ok(Some(c));
            }
        }
        let mut next = Vec::new();
        for (idx, img) in &prefixes {
            for (i, (_, simg)) in singles.iter().enumerate() {
                let mut v = idx.clone();
                v.push(i);
                next.push((v, add_images(img, simg, 1)));
            }
        }
        prefixes = next;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_word;

    fn w(s: &str) -> Word {
        parse_word(s, None).unwrap()
    }

    fn sig() -> FiltrationSignature {
        "gamma2;m=[2]".parse().unwrap()
    }

    #[test]
    fn signature_text() {
        let s = sig();
        assert_eq!(s.classes, vec![2]);
        assert_eq!(s.to_string(), "gamma2;m=[2]");
        let t: FiltrationSignature = "gamma2;m=[2,1]".parse().unwrap();
        assert_eq!(t.normalize(LevelIndex::new(1, 3)), LevelIndex::new(2, 1));
        assert_eq!(t.levels().len(), 5);
        assert!("gamma2;m=[0]".parse::<FiltrationSignature>().is_err());
        assert!(matches!("beta;m=[1]".parse::<FiltrationSignature>(), Err(Error::Parse { .. })));
    }

    #[test]
    fn locate() {
        assert_eq!(locate_level(&w("[y1,y2]"), 3, &sig(), 8), Ok(1));
        assert_eq!(locate_level(&w("[[y1,y2],[y1,y3]]"), 3, &sig(), 8), Ok(2));
        assert_eq!(locate_level(&w("y1"), 3, &sig(), 8), Err(Error::NotInVerbal));
        let m1: FiltrationSignature = "gamma2;m=[1]".parse().unwrap();
        assert!(matches!(locate_level(&w("[[y1,y2],[y1,y3]]"), 3, &m1, 8), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn weights() {
        assert_eq!(monomial_weight(&[0], &[2]), Ok(2));
        assert_eq!(monomial_weight(&[0, 0, 1], &[1, 1]), Ok(3));
        assert_eq!(monomial_weight(&[], &[]), Ok(0));
        assert_eq!(monomial_weight(&[3], &[1]), Err(Error::UnknownLayer(3)));
    }

    #[test]
    fn delta_and_leading() {
        let xz = RingElement::minus_one(&Word::gen(1));
        let xw = RingElement::minus_one(&Word::gen(2));
        assert_eq!(delta_valuation(&xz, 8), Valuation::Finite(1));
        assert_eq!(delta_valuation(&xz.mul(&xw), 8), Valuation::Finite(2));
        assert_eq!(delta_valuation(&RingElement::zero(), 8), Valuation::Beyond(8));
        let (deg, form) = leading_form(&xz.mul(&xw).sub(&xw.mul(&xz)), 8).unwrap();
        assert_eq!(deg, 2);
        assert_eq!(form.get(&vec![1, 2]), Some(&BigInt::from(1)));
        assert_eq!(form.get(&vec![2, 1]), Some(&BigInt::from(-1)));
        assert_eq!(leading_form(&RingElement::zero(), 8), Err(Error::ZeroElement));
    }

    #[test]
    fn restriction() {
        let h = w("[[y1,y2],[y2,y1^2]]");
        let u = RingElement::minus_one(&h);
        assert!(restriction_check(&u, 3, &[1, 2], 6).unwrap());
        assert!(restriction_check(&RingElement::zero(), 3, &[1, 2], 6).unwrap());
        assert!(restriction_check(&RingElement::minus_one(&w("[y1,y3]")), 3, &[1, 2], 6).is_err());
    }

    #[test]
    fn root_membership() {
        let b = RootBounds { power: 2, conj: 1, factors: 1 };
        let s = sig();
        let v = w("[[y1,y2],[y1,y3]]");
        match is_in_root(&v, LevelIndex::new(1, 2), &[], 3, &s, &b, 6).unwrap() {
            RootAnswer::Yes(c) => assert_eq!((c.power, c.factors.len()), (1, 0)),
            other => panic!("{other:?}"),
        }
        let r = w("[y1,y3]");
        match is_in_root(&r, LevelIndex::new(1, 2), &[r.clone()], 3, &s, &b, 6).unwrap() {
            RootAnswer::Yes(c) => {
                assert_eq!(c.power, 1);
                assert!(c.reproduces(&r, &[r.clone()]));
            }
            other => panic!("{other:?}"),
        }
        let conj = r.conjugate(&w("y2"));
        match is_in_root(&conj, LevelIndex::new(1, 3), &[r.clone()], 3, &s, &b, 6).unwrap() {
            RootAnswer::Yes(c) => assert!(c.reproduces(&conj, &[r.clone()])),
            other => panic!("{other:?}"),
        }
        assert_eq!(is_in_root(&w("y1"), LevelIndex::new(1, 2), &[r.clone()], 3, &s, &b, 6), Ok(RootAnswer::NoWithinBound));
        assert_eq!(
            is_in_root(&w("[y1,y2]"), LevelIndex::new(1, 2), &[r], 3, &s, &b, 6),
            Ok(RootAnswer::NoWithinBound)
        );
    }

    #[test]
    fn enumerates_reduced_words() {
        assert_eq!(words_up_to(3, 3).len(), 1 + 6 + 30 + 150);
        assert_eq!(words_up_to(2, 0), vec![Word::identity()]);
    }
}
