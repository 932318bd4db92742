//! Words in a free group of finite rank.
//!
//! A [`Word`] is stored as its freely reduced syllable list, which is the
//! unique normal form of the element it denotes. Generator indices are
//! 1-based; the rank lives in a [`FreeGroup`] context rather than in every
//! word, so the same type also serves for words over Schreier generators.

use std::cmp::Ordering;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A power `g^exp` of a single generator, `exp != 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub gen: u32,
    pub exp: i64,
}

impl Syllable {
    pub fn new(gen: u32, exp: i64) -> Self {
        Syllable { gen, exp }
    }
}

/// A freely reduced word. The empty word is the identity.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word {
    syl: Vec<Syllable>,
}

/// A single letter `g^{±1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub gen: u32,
    pub inv: bool,
}

impl Letter {
    pub fn to_word(self) -> Word {
        Word::gen_pow(self.gen, if self.inv { -1 } else { 1 })
    }
}

impl Word {
    pub fn identity() -> Self {
        Word { syl: Vec::new() }
    }

    pub fn gen(g: u32) -> Self {
        Word::gen_pow(g, 1)
    }

    pub fn gen_pow(g: u32, exp: i64) -> Self {
        if exp == 0 {
            Word::identity()
        } else {
            Word { syl: vec![Syllable::new(g, exp)] }
        }
    }

    /// Freely reduces an arbitrary syllable list. Zero exponents are dropped.
    pub fn from_syllables<I: IntoIterator<Item = Syllable>>(raw: I) -> Self {
        let mut w = Word::identity();
        for s in raw {
            w.push(s);
        }
        w
    }

    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        Word::from_syllables(
            letters
                .into_iter()
                .map(|l| Syllable::new(l.gen, if l.inv { -1 } else { 1 })),
        )
    }

    fn push(&mut self, s: Syllable) {
        if s.exp == 0 {
            return;
        }
        match self.syl.last_mut() {
            Some(last) if last.gen == s.gen => {
                last.exp += s.exp;
                if last.exp == 0 {
                    self.syl.pop();
                }
            }
            _ => self.syl.push(s),
        }
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syl
    }

    pub fn is_identity(&self) -> bool {
        self.syl.is_empty()
    }

    /// Number of letters.
    pub fn len(&self) -> usize {
        self.syl.iter().map(|s| s.exp.unsigned_abs() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.syl.is_empty()
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        self.syl.iter().flat_map(|s| {
            std::iter::repeat(Letter { gen: s.gen, inv: s.exp < 0 }).take(s.exp.unsigned_abs() as usize)
        })
    }

    pub fn max_gen(&self) -> u32 {
        self.syl.iter().map(|s| s.gen).max().unwrap_or(0)
    }

    pub fn mul(&self, other: &Word) -> Word {
        let mut w = self.clone();
        for &s in &other.syl {
            w.push(s);
        }
        w
    }

    pub fn inverse(&self) -> Word {
        Word {
            syl: self.syl.iter().rev().map(|s| Syllable::new(s.gen, -s.exp)).collect(),
        }
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = Word::identity();
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    /// `[a,b] = a^{-1} b^{-1} a b`.
    pub fn commutator(a: &Word, b: &Word) -> Word {
        a.inverse().mul(&b.inverse()).mul(a).mul(b)
    }

    /// `a^f = f^{-1} a f`.
    pub fn conjugate(&self, f: &Word) -> Word {
        f.inverse().mul(self).mul(f)
    }

    /// Splits `w = conjugator^{-1} · core · conjugator` with `core` cyclically reduced.
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let mut core = self.syl.clone();
        let mut head: Vec<Syllable> = Vec::new();
        loop {
            if core.len() < 2 {
                break;
            }
            let first = core[0];
            let last = core[core.len() - 1];
            if first.gen != last.gen {
                break;
            }
            if first.exp.signum() == last.exp.signum() {
                // merge into one syllable by rotation: the word is cyclically reduced
                // up to a conjugation that rotates `last` to the front.
                break;
            }
            // first and last partially cancel when conjugating by the smaller of the two.
            let k = first.exp.abs().min(last.exp.abs()) * first.exp.signum();
            head.push(Syllable::new(first.gen, k));
            core[0].exp -= k;
            let n = core.len();
            core[n - 1].exp += k;
            core.retain(|s| s.exp != 0);
        }
        // head letters were stripped from the front: w = head · core · head^{-1}
        let head = Word::from_syllables(head);
        let core = Word::from_syllables(core);
        let conj = head.inverse();
        (core, conj)
    }

    /// Exponent sum of every generator `1..=n`.
    pub fn exponent_sums(&self, n: u32) -> Vec<i64> {
        let mut v = vec![0i64; n as usize];
        for s in &self.syl {
            if (s.gen as usize) <= v.len() && s.gen > 0 {
                v[s.gen as usize - 1] += s.exp;
            }
        }
        v
    }

    pub fn uses_only(&self, gens: &[u32]) -> bool {
        self.syl.iter().all(|s| gens.contains(&s.gen))
    }

    /// Image under the endomorphism fixing `keep` and killing every other generator.
    pub fn retract(&self, keep: &[u32]) -> Word {
        Word::from_syllables(self.syl.iter().copied().filter(|s| keep.contains(&s.gen)))
    }

    /// Image under the homomorphism sending generator `g` to `images[g-1]`.
    pub fn substitute(&self, images: &[Word]) -> Word {
        let mut acc = Word::identity();
        for s in &self.syl {
            acc = acc.mul(&images[s.gen as usize - 1].pow(s.exp));
        }
        acc
    }

    /// Renames generators through `map`.
    pub fn relabel(&self, map: impl Fn(u32) -> u32) -> Word {
        Word::from_syllables(self.syl.iter().map(|s| Syllable::new(map(s.gen), s.exp)))
    }

    pub fn display_with(&self, prefix: &str) -> String {
        if self.syl.is_empty() {
            return "1".to_string();
        }
        self.syl
            .iter()
            .map(|s| {
                if s.exp == 1 {
                    format!("{prefix}{}", s.gen)
                } else {
                    format!("{prefix}{}^{}", s.gen, s.exp)
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.syl.cmp(&other.syl))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with("y"))
    }
}

/// Free group of rank `n` on generators `y_1..y_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FreeGroup {
    rank: u32,
}

impl FreeGroup {
    pub fn new(rank: u32) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidGenerator { index: 0, rank: 0 });
        }
        Ok(FreeGroup { rank })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    pub fn generator(&self, g: u32) -> Result<Word> {
        self.check_index(g)?;
        Ok(Word::gen(g))
    }

    pub fn generators(&self) -> Vec<Word> {
        (1..=self.rank).map(Word::gen).collect()
    }

    pub fn check_index(&self, g: u32) -> Result<()> {
        if g == 0 || g > self.rank {
            Err(Error::InvalidGenerator { index: g, rank: self.rank })
        } else {
            Ok(())
        }
    }

    pub fn reduce(&self, raw: &[Syllable]) -> Result<Word> {
        for s in raw {
            self.check_index(s.gen)?;
        }
        Ok(Word::from_syllables(raw.iter().copied()))
    }

    pub fn check_word(&self, w: &Word) -> Result<()> {
        match w.syllables().iter().find(|s| s.gen == 0 || s.gen > self.rank) {
            Some(s) => Err(Error::RankMismatch { index: s.gen, rank: self.rank }),
            None => Ok(()),
        }
    }

    pub fn commutator(&self, a: &Word, b: &Word) -> Result<Word> {
        self.check_word(a)?;
        self.check_word(b)?;
        Ok(Word::commutator(a, b))
    }

    pub fn conjugate(&self, a: &Word, f: &Word) -> Result<Word> {
        self.check_word(a)?;
        self.check_word(f)?;
        Ok(a.conjugate(f))
    }

    pub fn sample_word(&self, max_len: usize, seed: u64) -> Word {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_word_with(max_len, &mut rng)
    }

    /// Draws a length in `0..=max_len`, then letters avoiding immediate cancellation.
    pub fn sample_word_with<R: Rng>(&self, max_len: usize, rng: &mut R) -> Word {
        let len = rng.gen_range(0..=max_len);
        let mut letters = Vec::with_capacity(len);
        let mut prev: Option<Letter> = None;
        while letters.len() < len {
            let l = Letter { gen: rng.gen_range(1..=self.rank), inv: rng.gen_bool(0.5) };
            if let Some(p) = prev {
                if p.gen == l.gen && p.inv != l.inv {
                    continue;
                }
            }
            letters.push(l);
            prev = Some(l);
        }
        Word::from_letters(letters)
    }
}

pub fn sample_word(rank: u32, max_len: usize, seed: u64) -> Result<Word> {
    Ok(FreeGroup::new(rank)?.sample_word(max_len, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &[(u32, i64)]) -> Word {
        Word::from_syllables(s.iter().map(|&(g, e)| Syllable::new(g, e)))
    }

    #[test]
    fn reduce_examples() {
        let f = FreeGroup::new(2).unwrap();
        let r = f
            .reduce(&[Syllable::new(1, 1), Syllable::new(1, -1), Syllable::new(2, 1)])
            .unwrap();
        assert_eq!(r, Word::gen(2));
        assert!(f.reduce(&[]).unwrap().is_identity());
        assert_eq!(f.reduce(&[Syllable::new(1, 2), Syllable::new(1, -1)]).unwrap(), Word::gen(1));
        assert_eq!(
            f.reduce(&[Syllable::new(3, 1)]),
            Err(Error::InvalidGenerator { index: 3, rank: 2 })
        );
    }

    #[test]
    fn cyclic_reduce_examples() {
        let x = w(&[(1, 1), (2, 1), (1, -1)]);
        let (core, conj) = x.cyclic_reduce();
        assert_eq!(core, Word::gen(2));
        assert_eq!(conj, Word::gen_pow(1, -1));
        assert_eq!(conj.inverse().mul(&core).mul(&conj), x);

        let (core, conj) = Word::identity().cyclic_reduce();
        assert!(core.is_identity() && conj.is_identity());

        let y = w(&[(2, 1), (1, 1), (2, 1)]);
        assert_eq!(y.cyclic_reduce(), (y.clone(), Word::identity()));
    }

    #[test]
    fn cyclic_reduce_partial_cancellation() {
        let x = w(&[(1, 3), (2, 1), (1, -1)]);
        let (core, conj) = x.cyclic_reduce();
        assert_eq!(core, w(&[(1, 2), (2, 1)]));
        assert_eq!(conj.inverse().mul(&core).mul(&conj), x);
    }

    #[test]
    fn commutator_and_conjugate() {
        let f = FreeGroup::new(2).unwrap();
        let (x1, x2) = (Word::gen(1), Word::gen(2));
        assert_eq!(f.commutator(&x1, &x2).unwrap(), w(&[(1, -1), (2, -1), (1, 1), (2, 1)]));
        assert!(f.commutator(&x1, &x1).unwrap().is_identity());
        assert!(f.commutator(&x1, &Word::identity()).unwrap().is_identity());
        assert_eq!(f.conjugate(&x1, &x2).unwrap(), w(&[(2, -1), (1, 1), (2, 1)]));
        assert_eq!(f.conjugate(&x1, &Word::identity()).unwrap(), x1);
        assert!(f.conjugate(&Word::identity(), &x2).unwrap().is_identity());
        assert!(matches!(f.commutator(&x1, &Word::gen(3)), Err(Error::RankMismatch { .. })));
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = FreeGroup::new(2).unwrap();
        assert!(f.sample_word(0, 99).is_identity());
        assert_eq!(f.sample_word(12, 5), f.sample_word(12, 5));
        let s = sample_word(3, 10, 7).unwrap();
        assert!(s.len() <= 10);
        assert_eq!(Word::from_syllables(s.syllables().iter().copied()), s);
    }

    #[test]
    fn word_order_is_length_first() {
        let a = w(&[(2, 1)]);
        let b = w(&[(1, 2)]);
        assert!(a < b);
        assert!(Word::identity() < a);
    }
}
