//! Seeded sampling of elements of `R·N_{1l}` and brute-force corroboration of
//! the criteria. A `NoneFound` report is evidence, not proof.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{class_in_subgroup, eval_product, in_first_layer, ser_word, ConjFactor, LevelIndex};
use crate::freiheit::{lemma4_criterion, theorem3_criterion};
use crate::magnus::{self, Valuation};
use crate::ring::QuotientSpec;
use crate::schreier::SchreierSystem;
use crate::words::{FreeGroup, Letter, Word};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SampleSpec {
    #[serde(serialize_with = "ser_words")]
    pub relators: Vec<Word>,
    pub rank: u32,
    pub conj_len: usize,
    pub factors: usize,
    pub count: usize,
    pub seed: u64,
    /// First-layer level `(1, l)`; the residual is a weight-`l` commutator.
    pub level: LevelIndex,
    /// Letters of `H`; conjugators and residual letters lean toward them.
    pub keep: Vec<u32>,
}

fn ser_words<S: serde::Serializer>(ws: &[Word], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(ws.iter().map(|w| w.to_string()))
}

/// `word = Π factors · residual`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Sample {
    #[serde(serialize_with = "ser_word")]
    pub word: Word,
    pub factors: Vec<ConjFactor>,
    #[serde(serialize_with = "ser_word")]
    pub residual: Word,
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn biased_word(rng: &mut ChaCha8Rng, rank: u32, keep: &[u32], max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    while letters.len() < len {
        let gen = if !keep.is_empty() && rng.gen_bool(0.75) { *keep.choose(rng).unwrap() } else { rng.gen_range(1..=rank) };
        let l = Letter { gen, inv: rng.gen_bool(0.5) };
        if letters.last().is_some_and(|p| p.gen == l.gen && p.inv != l.inv) {
            continue;
        }
        letters.push(l);
    }
    Word::from_letters(letters)
}

/// A nontrivial Schreier generator of `γ₂F`, spelled in `F`.
fn schreier_letter(rng: &mut ChaCha8Rng, sys: &SchreierSystem, keep: &[u32]) -> Word {
    let n = sys.rank();
    let alpha = keep.len() >= 2 && rng.gen_bool(0.75);
    loop {
        let (s, j): (Vec<i64>, u32) = if alpha {
            let s = (1..=n).map(|k| if keep.contains(&k) { rng.gen_range(-1..=1) } else { 0 }).collect();
            (s, *keep.choose(rng).unwrap())
        } else {
            ((1..=n).map(|_| rng.gen_range(-1..=1)).collect(), rng.gen_range(1..=n))
        };
        if let Some(w) = sys.schreier_generator(&s, j) {
            return w;
        }
    }
}

fn left_normed(parts: &[Word]) -> Word {
    let mut it = parts.iter();
    let first = it.next().cloned().unwrap_or_else(Word::identity);
    it.fold(first, |acc, x| Word::commutator(&acc, x))
}

/// Sample `index` of the stream. The first `|R|` samples are the relators themselves.
pub fn sample_rn_element(spec: &SampleSpec, index: usize) -> Result<Sample> {
    let group = FreeGroup::new(spec.rank)?;
    for r in &spec.relators {
        group.check_word(r)?;
    }
    let sys = SchreierSystem::new(spec.rank, &QuotientSpec::abelian(), &[])?;
    if index < spec.relators.len() {
        let f = ConjFactor { relator: index, sign: 1, conj: Word::identity() };
        return Ok(Sample { word: spec.relators[index].clone(), factors: vec![f], residual: Word::identity() });
    }
    let mut rng = rng_for(spec.seed, index);
    let mut factors = Vec::new();
    if !spec.relators.is_empty() && spec.factors > 0 {
        let k = rng.gen_range(1..=spec.factors);
        for t in 0..k {
            let relator = rng.gen_range(0..spec.relators.len());
            let sign = if t == 0 || rng.gen_bool(0.5) { 1 } else { -1 };
            let conj = biased_word(&mut rng, spec.rank, &spec.keep, spec.conj_len);
            factors.push(ConjFactor { relator, sign, conj });
        }
    }
    let l = spec.level.l;
    let parts: Vec<Word> = (0..l).map(|_| schreier_letter(&mut rng, &sys, &spec.keep)).collect();
    let residual = if spec.level.k == 1 { left_normed(&parts) } else { Word::identity() };
    let word = eval_product(&factors, &spec.relators).mul(&residual);
    Ok(Sample { word, factors, residual })
}

/// The whole stream, ordered by index.
pub fn samples(spec: &SampleSpec) -> Result<Vec<Sample>> {
    (0..spec.count).into_par_iter().map(|i| sample_rn_element(spec, i)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub index: usize,
    pub sample: Sample,
    pub class_in_h: Valuation,
}

impl Counterexample {
    /// Rechecks from the certificate alone.
    pub fn verify(&self, spec: &SampleSpec, d: usize) -> Result<()> {
        let s = &self.sample;
        if eval_product(&s.factors, &spec.relators).mul(&s.residual) != s.word {
            return Err(Error::InternalInconsistency("sample factorization does not reproduce".into()));
        }
        let mut sys = SchreierSystem::new(spec.rank, &QuotientSpec::abelian(), &[])?;
        if in_first_layer(&mut sys, &s.residual, spec.level.l, d)? != Some(true) {
            return Err(Error::InternalInconsistency("residual is not at the sampled level".into()));
        }
        match class_in_subgroup(&s.word, &spec.keep, d)? {
            Valuation::Finite(c) if c < spec.level.l => Ok(()),
            v => Err(Error::InternalInconsistency(format!("class {v} in H ∩ N is not below the level"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Falsification {
    CounterexampleFound(Vec<Counterexample>),
    NoneFound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FalsifyReport {
    pub instances: usize,
    pub hits: usize,
    pub counterexamples: Vec<Counterexample>,
    pub seeds: Vec<u64>,
    pub level: LevelIndex,
    pub note: &'static str,
}

impl FalsifyReport {
    pub fn outcome(&self) -> Falsification {
        if self.counterexamples.is_empty() {
            Falsification::NoneFound
        } else {
            Falsification::CounterexampleFound(self.counterexamples.clone())
        }
    }
}

/// Samples lying in `H` whose class in `H ∩ N` is below `l` refute
/// `H ∩ R·N_{1l} = H ∩ N_{1l}`.
pub fn falsify_freedom(spec: &SampleSpec, d: usize) -> Result<FalsifyReport> {
    if spec.level.k != 1 {
        return Err(Error::PreconditionFailed(format!("sampling at level {} is not supported", spec.level)));
    }
    let q = QuotientSpec::abelian();
    if let Some(_r) = spec.relators.iter().find(|r| !q.contains(r)) {
        return Err(Error::NotInVerbal);
    }
    let found: Vec<(bool, Option<Counterexample>)> = (0..spec.count)
        .into_par_iter()
        .map(|i| -> Result<(bool, Option<Counterexample>)> {
            let s = sample_rn_element(spec, i)?;
            if !s.word.uses_only(&spec.keep) {
                return Ok((false, None));
            }
            let class = class_in_subgroup(&s.word, &spec.keep, d)?;
            let bad = matches!(class, Valuation::Finite(c) if c < spec.level.l);
            Ok((true, bad.then_some(Counterexample { index: i, sample: s, class_in_h: class })))
        })
        .collect::<Result<_>>()?;
    let hits = found.iter().filter(|(h, _)| *h).count();
    let counterexamples: Vec<Counterexample> = found.into_iter().filter_map(|(_, c)| c).collect();
    for c in &counterexamples {
        c.verify(spec, d)?;
    }
    Ok(FalsifyReport {
        instances: spec.count,
        hits,
        counterexamples,
        seeds: vec![spec.seed],
        level: spec.level,
        note: "sampling only: an empty result is evidence, not proof",
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CrossSizes {
    pub count: usize,
    pub rank: u32,
    pub max_len: usize,
    /// `n` of `γ_{n+1}`.
    pub weight: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub name: String,
    pub total: usize,
    pub agree: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CrossReport {
    pub seed: u64,
    pub sizes: CrossSizes,
    pub tallies: Vec<Tally>,
    pub disagreements: Vec<String>,
}

impl CrossReport {
    pub fn all_agree(&self) -> bool {
        self.disagreements.is_empty()
    }
}

fn random_commutator(rng: &mut ChaCha8Rng, group: &FreeGroup, weight: usize, max_len: usize) -> Word {
    let parts: Vec<Word> = (0..weight.max(1)).map(|_| group.sample_word_with(max_len.max(1), rng)).collect();
    left_normed(&parts)
}

/// Runs the `lemma4` and `theorem3` criteria on constructed members and
/// on inputs whose status is known by an independent computation.
pub fn cross_validate_criteria(seed: u64, sizes: CrossSizes) -> Result<CrossReport> {
    let n = sizes.rank;
    if n < 2 {
        return Err(Error::RankTooSmall(n));
    }
    let group = FreeGroup::new(n)?;
    let k_set: Vec<u32> = (1..n).collect();
    let d = sizes.weight + 2;
    let q = QuotientSpec::abelian();
    let mut tallies: Vec<Tally> = ["lemma4_member", "lemma4_outside_generator", "lemma4_random", "theorem3_member", "theorem3_exponent_outside"]
        .iter()
        .map(|s| Tally { name: s.to_string(), ..Tally::default() })
        .collect();
    let mut disagreements = Vec::new();
    let mut record = |slot: usize, expected: bool, got: bool, what: String, tallies: &mut Vec<Tally>| {
        tallies[slot].total += 1;
        if expected == got {
            tallies[slot].agree += 1;
        } else {
            disagreements.push(format!("{}: {what} expected {expected}, got {got}", tallies[slot].name));
        }
    };
    let rows: Vec<Result<Vec<(usize, bool, bool, String)>>> = (0..sizes.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(seed, i);
            let mut out = Vec::new();
            let hk = FreeGroup::new(n - 1)?.sample_word_with(sizes.max_len, &mut rng);
            let c = random_commutator(&mut rng, &group, sizes.weight + 1, 3);
            let member = hk.mul(&c);
            out.push((0, true, lemma4_criterion(&member, n, &k_set, sizes.weight, d)?, member.to_string()));
            let xj = Word::gen(n);
            out.push((1, false, lemma4_criterion(&xj, n, &k_set, sizes.weight, d)?, xj.to_string()));
            let v = group.sample_word_with(sizes.max_len, &mut rng);
            let w = v.retract(&k_set).inverse().mul(&v);
            let truth = w.is_identity() || magnus::lcs_class(&w, d)?.at_least(sizes.weight + 1) == Some(true);
            out.push((2, truth, lemma4_criterion(&v, n, &k_set, sizes.weight, d)?, v.to_string()));
            let ck = Word::commutator(
                &FreeGroup::new(n - 1)?.sample_word_with(3, &mut rng),
                &FreeGroup::new(n - 1)?.sample_word_with(3, &mut rng),
            );
            let f = group.sample_word_with(4, &mut rng);
            let n1 = Word::commutator(&group.sample_word_with(3, &mut rng), &group.sample_word_with(3, &mut rng));
            let n2 = Word::commutator(&group.sample_word_with(3, &mut rng), &group.sample_word_with(3, &mut rng));
            let t3 = hk.mul(&ck.conjugate(&f)).mul(&Word::commutator(&n1, &n2));
            out.push((3, true, theorem3_criterion(&t3, n, &k_set, &q)?.holds, t3.to_string()));
            let outside = v.mul(&Word::gen_pow(n, 1 + rng.gen_range(0..3)));
            if outside.exponent_sums(n)[n as usize - 1] != 0 {
                out.push((4, false, theorem3_criterion(&outside, n, &k_set, &q)?.holds, outside.to_string()));
            }
            Ok(out)
        })
        .collect();
    for row in rows {
        for (slot, expected, got, what) in row? {
            record(slot, expected, got, what, &mut tallies);
        }
    }
    Ok(CrossReport { seed, sizes, tallies, disagreements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_word;

    fn w(s: &str) -> Word {
        parse_word(s, None).unwrap()
    }

    fn spec(rel: &[&str], count: usize, l: usize) -> SampleSpec {
        SampleSpec {
            relators: rel.iter().map(|r| w(r)).collect(),
            rank: 3,
            conj_len: 2,
            factors: 2,
            count,
            seed: 7,
            level: LevelIndex::new(1, l),
            keep: vec![1, 2],
        }
    }

    #[test]
    fn first_sample_is_the_relator() {
        let s = spec(&["[y1,y3]"], 1, 2);
        let x = sample_rn_element(&s, 0).unwrap();
        assert_eq!(x.word, w("[y1,y3]"));
        let e = spec(&[], 1, 1);
        let y = sample_rn_element(&e, 0).unwrap();
        assert!(y.factors.is_empty());
        assert_eq!(y.word, y.residual);
    }

    #[test]
    fn streams_repeat() {
        let s = spec(&["[y1,y3]"], 40, 2);
        assert_eq!(samples(&s).unwrap(), samples(&s).unwrap());
        for x in samples(&s).unwrap() {
            assert_eq!(eval_product(&x.factors, &s.relators).mul(&x.residual), x.word);
        }
    }

    #[test]
    fn finds_the_relator_in_h() {
        let s = spec(&["[y1,y2]"], 50, 2);
        let r = falsify_freedom(&s, 6).unwrap();
        assert!(!r.counterexamples.is_empty());
        assert_eq!(r.counterexamples[0].sample.word, w("[y1,y2]"));
    }

    #[test]
    fn no_counterexample_for_free_instance() {
        let s = spec(&["[y1,y3]"], 500, 2);
        let r = falsify_freedom(&s, 6).unwrap();
        assert_eq!(r.outcome(), Falsification::NoneFound);
        let e = falsify_freedom(&spec(&[], 50, 2), 6).unwrap();
        assert!(e.counterexamples.is_empty());
    }

    #[test]
    fn cross_validation_agrees() {
        let sizes = CrossSizes { count: 40, rank: 3, max_len: 8, weight: 2 };
        let a = cross_validate_criteria(3, sizes).unwrap();
        assert!(a.all_agree(), "{:?}", a.disagreements);
        assert_eq!(a, cross_validate_criteria(3, sizes).unwrap());
    }
}
