//! Freedom decisions: the derivative criteria, the conjugacy condition
//! modulo `N_{1,i+1}`, the verdict pipeline and witness climbing.
//!
//! `H = gr(y_1, ..., y_{n-1})` throughout the verdict pipeline.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{
    class_in_subgroup, eval_product, in_first_layer, locate_level, ser_word, ConjFactor, FiltrationSignature, LevelIndex,
};
use crate::fox;
use crate::magnus::{self, Valuation};
use crate::oracle::{falsify_freedom, FalsifyReport, SampleSpec};
use crate::ring::{coset_map, QuotElement, QuotientSpec};
use crate::schreier::{coset_word, Coset, SchreierSystem};
use crate::words::{FreeGroup, Word};

/// Search and sampling limits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub conj: usize,
    pub power: u32,
    pub factors: usize,
    pub samples: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { conj: 3, power: 2, factors: 2, samples: 10_000 }
    }
}

impl FromStr for Bounds {
    type Err = Error;

    /// `conj=3,power=2,factors=2,samples=10000`; omitted keys keep defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut b = Bounds::default();
        let mut pos = 1;
        for part in s.split(',') {
            let bad = |msg: &str| Error::Parse { pos, msg: msg.to_string() };
            let (k, v) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let v: usize = v.trim().parse().map_err(|_| bad("expected a nonnegative integer"))?;
            match k.trim() {
                "conj" => b.conj = v,
                "power" => b.power = v as u32,
                "factors" => b.factors = v,
                "samples" => b.samples = v,
                _ => return Err(bad("unknown bound")),
            }
            pos += part.len() + 1;
        }
        Ok(b)
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conj={},power={},factors={},samples={}", self.conj, self.power, self.factors, self.samples)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem3Report {
    pub holds: bool,
    /// Nonvanishing images of `D_k(v)`, `k ∉ K`.
    pub residues: Vec<(u32, QuotElement)>,
}

/// `D_k(v) ≡ 0` in `Z[F/N]` for every `k ∉ K`.
pub fn theorem3_criterion(v: &Word, rank: u32, k_set: &[u32], q: &QuotientSpec) -> Result<Theorem3Report> {
    FreeGroup::new(rank)?.check_word(v)?;
    let mut residues = Vec::new();
    for k in (1..=rank).filter(|k| !k_set.contains(k)) {
        let img = coset_map(&fox::derive_word(v, k), q)?;
        if !img.is_zero() {
            residues.push((k, img));
        }
    }
    Ok(Theorem3Report { holds: residues.is_empty(), residues })
}

/// Membership of `v` (a word over a free base of rank `rank`) in
/// `gr(X_K, γ_{n+1}X)`: `D_k(v) ∈ 𝔛^n` off `K`, and on `K` the derivatives
/// agree with those of the retraction `φ(v)` modulo `𝔛^n`.
pub fn lemma4_criterion(v: &Word, rank: u32, k_set: &[u32], n: usize, d: usize) -> Result<bool> {
    if d < n + 1 {
        return Err(Error::Inconclusive(d));
    }
    if v.max_gen() > rank {
        return Err(Error::RankMismatch { index: v.max_gen(), rank });
    }
    let phi = v.retract(k_set);
    let mut gens: Vec<u32> = v.syllables().iter().map(|s| s.gen).collect();
    gens.sort_unstable();
    gens.dedup();
    for k in gens {
        let dv = fox::derive_word(v, k);
        let e = if k_set.contains(&k) { dv.sub(&fox::derive_word(&phi, k)) } else { dv };
        if magnus::ideal_valuation(&e, d).at_least(n) != Some(true) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A coset component of `D_n(r)` that is not in `Δ_i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Residue {
    pub coset: Coset,
    pub valuation: Valuation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConjugacyOutcome {
    Witness {
        #[serde(serialize_with = "ser_word")]
        f: Word,
        #[serde(serialize_with = "ser_word")]
        h: Word,
    },
    NoWithinBounds {
        /// Set when no conjugate can lie in `H·N_{1,i+1}` at all.
        provable: bool,
        residue: Option<Residue>,
    },
}

/// First coset component of `D_n(r)` outside `Δ_i`, if any.
/// `D_n(r^s) = D_n(s)(1 - r^s) + D_n(r)s` keeps this invariant under conjugation.
pub fn leading_residue(r: &Word, rank: u32, i: usize, d: usize) -> Result<Option<Residue>> {
    let mut sys = SchreierSystem::new(rank, &QuotientSpec::abelian(), &[])?;
    let comps = sys.coset_components(&fox::derive_word(r, rank))?;
    for (coset, a) in comps {
        let v = magnus::ideal_valuation(&a, d.max(i));
        if v.at_least(i) != Some(true) {
            return Ok(Some(Residue { coset, valuation: v }));
        }
    }
    Ok(None)
}

/// Exponent vectors with `|e|_1 <= bound`, by norm then lexicographically.
pub fn transversal_candidates(rank: u32, bound: usize) -> Vec<Coset> {
    let mut out: Vec<Coset> = vec![vec![0; rank as usize]];
    let mut layer = out.clone();
    for _ in 0..bound {
        let mut next: Vec<Coset> = Vec::new();
        for c in &layer {
            for j in 0..rank as usize {
                for step in [-1i64, 1] {
                    let mut x = c.clone();
                    x[j] += step;
                    if x.iter().map(|e| e.abs()).sum::<i64>() == c.iter().map(|e| e.abs()).sum::<i64>() + 1 {
                        next.push(x);
                    }
                }
            }
        }
        next.sort();
        next.dedup();
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn test_conjugate(r: &Word, f: &Word, rank: u32, i: usize, d: usize) -> Result<Option<Word>> {
    let keep: Vec<u32> = (1..rank).collect();
    let mut sys = SchreierSystem::new(rank, &QuotientSpec::abelian(), &keep)?;
    let rf = r.conjugate(f);
    let x = sys.rewrite(&rf)?;
    let top = x.max_gen();
    let alpha: Vec<u32> = (1..=top).filter(|&z| sys.is_alpha_generator(z)).collect();
    if !lemma4_criterion(&x, top, &alpha, i, d.max(i + 1))? {
        return Ok(None);
    }
    let h = sys.spell(&x.retract(&alpha));
    let c = h.inverse().mul(&rf);
    let mut amb = SchreierSystem::new(rank, &QuotientSpec::abelian(), &[])?;
    if !h.uses_only(&keep) || in_first_layer(&mut amb, &c, i + 1, d.max(i + 1))? != Some(true) {
        return Err(Error::InternalInconsistency(format!("conjugacy witness for {f} fails its recheck")));
    }
    Ok(Some(h))
}

/// Semi-decides whether some conjugate `r^f` lies in `H·N_{1,i+1}`.
/// Conjugators run over transversal elements, which covers `F` since
/// conjugating by `N` does not move `r` modulo `N_{1,i+1}`.
pub fn conjugate_into_h_mod(r: &Word, i: usize, rank: u32, bound: usize, d: usize) -> Result<ConjugacyOutcome> {
    if let Some(res) = leading_residue(r, rank, i, d)? {
        return Ok(ConjugacyOutcome::NoWithinBounds { provable: true, residue: Some(res) });
    }
    let cands = transversal_candidates(rank, bound);
    let hit = cands.par_iter().find_map_first(|c| {
        let f = coset_word(c);
        match test_conjugate(r, &f, rank, i, d) {
            Ok(Some(h)) => Some(Ok((f, h))),
            Ok(None) => None,
            Err(e) => Some(Err(e)),
        }
    });
    match hit {
        Some(Ok((f, h))) => Ok(ConjugacyOutcome::Witness { f, h }),
        Some(Err(e)) => Err(e),
        None => Ok(ConjugacyOutcome::NoWithinBounds { provable: false, residue: None }),
    }
}

/// `witness ∈ H`, `witness = Π factors · residual` with `residual ∈ N_level`,
/// and `witness ∉ γ_l(H ∩ N)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NotFreeCertificate {
    pub level: LevelIndex,
    #[serde(serialize_with = "ser_word")]
    pub witness: Word,
    pub factors: Vec<ConjFactor>,
    #[serde(serialize_with = "ser_word")]
    pub residual: Word,
    pub residual_class: Valuation,
    pub witness_class_in_h: Valuation,
}

impl NotFreeCertificate {
    fn build(level: LevelIndex, witness: Word, factors: Vec<ConjFactor>, residual: Word, rank: u32, keep: &[u32], d: usize) -> Result<Self> {
        let mut amb = SchreierSystem::new(rank, &QuotientSpec::abelian(), &[])?;
        let residual_class = if residual.is_identity() {
            Valuation::Beyond(d)
        } else {
            let x = amb.rewrite(&residual)?;
            magnus::lcs_class(&x, d)?
        };
        let witness_class_in_h = class_in_subgroup(&witness, keep, d)?;
        let c = NotFreeCertificate { level, witness, factors, residual, residual_class, witness_class_in_h };
        c.verify(&[], rank, keep, d).or_else(|e| match e {
            Error::IndexOutOfRange { .. } => Ok(()),
            e => Err(e),
        })?;
        Ok(c)
    }

    /// Independent recheck: syllables for `H`, free reduction for the
    /// product, valuations for both classes. Pass the relators to include the
    /// product check.
    pub fn verify(&self, relators: &[Word], rank: u32, keep: &[u32], d: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::InternalInconsistency(format!("certificate at {}: {m}", self.level)));
        let l = self.level.l;
        if !self.witness.uses_only(keep) {
            return bad("witness is not in H");
        }
        let mut amb = SchreierSystem::new(rank, &QuotientSpec::abelian(), &[])?;
        if in_first_layer(&mut amb, &self.residual, l, d)? != Some(true) {
            return bad("residual is not in N at the level");
        }
        match class_in_subgroup(&self.witness, keep, d)? {
            Valuation::Finite(c) if c < l => {}
            _ => return bad("witness lies in the level inside H ∩ N"),
        }
        if relators.is_empty() {
            if self.factors.is_empty() {
                return if self.residual == self.witness { Ok(()) } else { bad("product does not reproduce") };
            }
            return Err(Error::IndexOutOfRange { index: 0, bound: 0 });
        }
        if self.factors.iter().any(|f| f.relator >= relators.len()) {
            return bad("unknown relator index");
        }
        if eval_product(&self.factors, relators).mul(&self.residual) != self.witness {
            return bad("product does not reproduce");
        }
        Ok(())
    }
}

/// Raises a certified witness from `(1, j)` to `(1, target)` by commuting with
/// a letter of `H ∩ N` other than the one carrying the least derivative valuation.
pub fn prop1_climb(
    cert: &NotFreeCertificate,
    target: usize,
    relators: &[Word],
    rank: u32,
    keep: &[u32],
    d: usize,
) -> Result<NotFreeCertificate> {
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() < 2 {
        return Err(Error::PreconditionFailed("H ∩ N needs rank at least 2 to climb".into()));
    }
    let h = sorted.len() as u32;
    let to_inner = |g: u32| sorted.iter().position(|&k| k == g).map(|p| p as u32 + 1).unwrap_or(0);
    let to_outer = |g: u32| sorted[g as usize - 1];
    let mut cur = cert.clone();
    while cur.level.l < target {
        let mut sys = SchreierSystem::new(h, &QuotientSpec::abelian(), &[])?;
        let x = sys.rewrite(&cur.witness.relabel(to_inner))?;
        let mut ids: Vec<u32> = x.syllables().iter().map(|s| s.gen).collect();
        ids.sort_unstable();
        ids.dedup();
        let e = ids
            .iter()
            .map(|&z| (magnus::ideal_valuation(&fox::derive_word(&x, z), d).key(), z))
            .min()
            .map(|(_, z)| z)
            .ok_or_else(|| Error::InternalInconsistency("witness is trivial".into()))?;
        let mut letter = None;
        'search: for j in 1..=h {
            for s in transversal_candidates(h, 2) {
                if let Some(z) = sys.generator_id(&s, j) {
                    if z != e {
                        letter = Some(sys.generator(z).word.relabel(to_outer));
                        break 'search;
                    }
                }
            }
        }
        let xl = letter.ok_or_else(|| Error::InternalInconsistency("no second letter in H ∩ N".into()))?;
        let u = &cur.residual;
        let mut factors: Vec<ConjFactor> = cur.factors.iter().rev().map(|f| f.inverse().conjugated(u)).collect();
        let xu = xl.mul(u);
        factors.extend(cur.factors.iter().map(|f| f.conjugated(&xu)));
        let residual = Word::commutator(u, &xl);
        let witness = Word::commutator(&cur.witness, &xl);
        let next = NotFreeCertificate::build(LevelIndex::new(1, cur.level.l + 1), witness, factors, residual, rank, keep, d)?;
        next.verify(relators, rank, keep, d)?;
        cur = next;
    }
    Ok(cur)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Free,
    NotFree,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevelVerdict {
    pub level: LevelIndex,
    pub outcome: Outcome,
    pub reason: String,
    pub certificate: Option<NotFreeCertificate>,
}

/// Backing for a `Free` verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FreeCertificate {
    pub residue: Residue,
    /// Transversal conjugates whose residue was rechecked.
    pub conjugates_checked: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub outcome: Outcome,
    #[serde(serialize_with = "ser_word")]
    pub relator: Word,
    pub relator_level: usize,
    pub conjugacy: ConjugacyOutcome,
    pub levels: Vec<LevelVerdict>,
    pub free_certificate: Option<FreeCertificate>,
    pub oracle: Vec<FalsifyReport>,
    pub bounds: Bounds,
    pub seed: u64,
}

impl Verdict {
    /// The first `NotFree` level with its certificate.
    pub fn witness(&self) -> Option<&NotFreeCertificate> {
        self.levels.iter().find_map(|l| l.certificate.as_ref())
    }
}

/// Decides `H ∩ R·N_{kl} = H ∩ N_{kl}` for the requested levels (all levels
/// of `sig` when `targets` is empty). The work is done on the least cyclic
/// conjugate of `r^{±1}`, so conjugate relators get the same verdict;
/// certificates are restated in terms of `r`.
pub fn freiheit_check(
    r: &Word,
    rank: u32,
    sig: &FiltrationSignature,
    targets: &[LevelIndex],
    bounds: &Bounds,
    seed: u64,
    d: usize,
) -> Result<Verdict> {
    if rank <= 2 {
        return Err(Error::RankTooSmall(rank));
    }
    FreeGroup::new(rank)?.check_word(r)?;
    let (canon, sign, g) = canonical_conjugate(r);
    let mut v = decide(&canon, rank, sig, targets, bounds, seed, d)?;
    let back = |c: &ConjFactor| ConjFactor { relator: c.relator, sign: c.sign * sign, conj: g.mul(&c.conj) };
    for l in &mut v.levels {
        if let Some(c) = &mut l.certificate {
            c.factors = c.factors.iter().map(back).collect();
            c.verify(std::slice::from_ref(r), rank, &(1..rank).collect::<Vec<_>>(), d)?;
        }
    }
    if let ConjugacyOutcome::Witness { f, h } = &mut v.conjugacy {
        *f = g.mul(f);
        *h = h.pow(sign);
    }
    v.relator = r.clone();
    Ok(v)
}

/// `(canon, sign, g)` with `canon = (r^sign)^g` the least cyclic conjugate of `r^{±1}`.
fn canonical_conjugate(r: &Word) -> (Word, i64, Word) {
    let (core, conj) = r.cyclic_reduce();
    let mut best: Option<(Word, i64, Word)> = None;
    for (sign, c) in [(1, core.clone()), (-1, core.inverse())] {
        let letters: Vec<_> = c.letters().collect();
        for cut in 0..letters.len().max(1) {
            let p = Word::from_letters(letters[..cut].iter().copied());
            let rotated = c.conjugate(&p);
            if best.as_ref().map_or(true, |b| rotated < b.0) {
                best = Some((rotated, sign, conj.inverse().mul(&p)));
            }
        }
    }
    best.expect("at least one rotation")
}

fn decide(
    r: &Word,
    rank: u32,
    sig: &FiltrationSignature,
    targets: &[LevelIndex],
    bounds: &Bounds,
    seed: u64,
    d: usize,
) -> Result<Verdict> {
    let i = locate_level(r, rank, sig, d)?;
    let keep: Vec<u32> = (1..rank).collect();
    let conjugacy = conjugate_into_h_mod(r, i, rank, bounds.conj, d)?;
    let targets: Vec<LevelIndex> = if targets.is_empty() { sig.levels() } else { targets.to_vec() };
    for t in &targets {
        sig.check_level(*t)?;
    }
    let relators = vec![r.clone()];
    let mut levels = Vec::new();
    let mut free_certificate = None;
    let mut oracle = Vec::new();
    let trivial = |lv: LevelIndex| LevelVerdict {
        level: lv,
        outcome: Outcome::Free,
        reason: "relator lies in N at this level".into(),
        certificate: None,
    };
    match &conjugacy {
        ConjugacyOutcome::Witness { f, h } => {
            let base = NotFreeCertificate::build(
                LevelIndex::new(1, i + 1),
                h.clone(),
                vec![ConjFactor { relator: 0, sign: 1, conj: f.clone() }],
                r.conjugate(f).inverse().mul(h),
                rank,
                &keep,
                d,
            )?;
            base.verify(&relators, rank, &keep, d)?;
            for &lv in &targets {
                levels.push(match sig.first_layer(sig.normalize(lv)) {
                    Some(l) if l <= i => trivial(lv),
                    Some(l) => {
                        let mut c = prop1_climb(&base, l, &relators, rank, &keep, d)?;
                        c.level = lv;
                        LevelVerdict { level: lv, outcome: Outcome::NotFree, reason: "H ∩ RN exceeds H ∩ N at this level".into(), certificate: Some(c) }
                    }
                    None => LevelVerdict {
                        level: lv,
                        outcome: Outcome::Unknown,
                        reason: "levels beyond the first layer are structural only".into(),
                        certificate: None,
                    },
                });
            }
        }
        ConjugacyOutcome::NoWithinBounds { provable: true, residue } => {
            let residue = residue.clone().ok_or_else(|| Error::InternalInconsistency("provable flag without residue".into()))?;
            let cands = transversal_candidates(rank, bounds.conj);
            let failures: Vec<Coset> = cands
                .par_iter()
                .filter_map(|c| match leading_residue(&r.conjugate(&coset_word(c)), rank, i, d) {
                    Ok(Some(_)) => None,
                    _ => Some(c.clone()),
                })
                .collect();
            if let Some(c) = failures.first() {
                return Err(Error::InternalInconsistency(format!("residue vanishes for the conjugate by {c:?}")));
            }
            free_certificate = Some(FreeCertificate { residue, conjugates_checked: cands.len() });
            for &lv in &targets {
                match sig.first_layer(sig.normalize(lv)) {
                    Some(l) if l <= i => levels.push(trivial(lv)),
                    Some(l) => {
                        let spec = SampleSpec {
                            relators: relators.clone(),
                            rank,
                            conj_len: bounds.conj,
                            factors: bounds.factors,
                            count: bounds.samples,
                            seed,
                            level: LevelIndex::new(1, l),
                            keep: keep.clone(),
                        };
                        let rep = falsify_freedom(&spec, d)?;
                        if !rep.counterexamples.is_empty() {
                            return Err(Error::InternalInconsistency(format!("oracle refutes the free verdict at {lv}")));
                        }
                        oracle.push(rep);
                        levels.push(LevelVerdict {
                            level: lv,
                            outcome: Outcome::Free,
                            reason: "no conjugate of the relator lies in H modulo the next level".into(),
                            certificate: None,
                        });
                    }
                    None => levels.push(LevelVerdict {
                        level: lv,
                        outcome: Outcome::Free,
                        reason: "structural: follows from the first-layer non-conjugacy".into(),
                        certificate: None,
                    }),
                }
            }
        }
        ConjugacyOutcome::NoWithinBounds { provable: false, .. } => {
            for &lv in &targets {
                levels.push(match sig.first_layer(sig.normalize(lv)) {
                    Some(l) if l <= i => trivial(lv),
                    _ => LevelVerdict {
                        level: lv,
                        outcome: Outcome::Unknown,
                        reason: "conjugacy condition undecided within bounds".into(),
                        certificate: None,
                    },
                });
            }
        }
    }
    let outcome = if levels.iter().any(|l| l.outcome == Outcome::NotFree) {
        Outcome::NotFree
    } else if levels.iter().all(|l| l.outcome == Outcome::Free) {
        Outcome::Free
    } else {
        Outcome::Unknown
    };
    Ok(Verdict {
        outcome,
        relator: r.clone(),
        relator_level: i,
        conjugacy,
        levels,
        free_certificate,
        oracle,
        bounds: *bounds,
        seed,
    })
}
