//! Truncated Magnus expansion `g_j -> 1 + t_j` into noncommutative integer
//! power series, and the valuations it computes.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fox;
use crate::ring::{bigint_json, RingElement};
use crate::words::Word;

/// Noncommutative monomial `t_{i1} ... t_{ik}` as its index string.
pub type Monomial = Vec<u32>;

/// Integer series truncated above a degree bound, stored by degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncSeries {
    buckets: Vec<BTreeMap<Monomial, BigInt>>,
}

impl TruncSeries {
    pub fn zero(d: usize) -> Self {
        TruncSeries { buckets: vec![BTreeMap::new(); d + 1] }
    }

    pub fn one(d: usize) -> Self {
        let mut s = TruncSeries::zero(d);
        s.buckets[0].insert(Vec::new(), BigInt::one());
        s
    }

    pub fn constant(d: usize, c: BigInt) -> Self {
        let mut s = TruncSeries::zero(d);
        if !c.is_zero() {
            s.buckets[0].insert(Vec::new(), c);
        }
        s
    }

    /// `t_j`.
    pub fn var(j: u32, d: usize) -> Self {
        let mut s = TruncSeries::zero(d);
        if d >= 1 {
            s.buckets[1].insert(vec![j], BigInt::one());
        }
        s
    }

    pub fn degree_bound(&self) -> usize {
        self.buckets.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.buckets.iter().all(BTreeMap::is_empty)
    }

    pub fn component(&self, k: usize) -> &BTreeMap<Monomial, BigInt> {
        &self.buckets[k]
    }

    pub fn coefficient(&self, m: &[u32]) -> BigInt {
        self.buckets
            .get(m.len())
            .and_then(|b| b.get(m))
            .cloned()
            .unwrap_or_default()
    }

    /// All terms in degree order.
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &BigInt)> {
        self.buckets.iter().flat_map(|b| b.iter())
    }

    pub fn add_term(&mut self, m: Monomial, c: BigInt) {
        let k = m.len();
        if k >= self.buckets.len() || c.is_zero() {
            return;
        }
        add_into(&mut self.buckets[k], m, c);
    }

    pub fn add(&self, other: &TruncSeries) -> TruncSeries {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &TruncSeries) {
        for (k, b) in other.buckets.iter().enumerate().take(self.buckets.len()) {
            for (m, c) in b {
                add_into(&mut self.buckets[k], m.clone(), c.clone());
            }
        }
    }

    pub fn neg(&self) -> TruncSeries {
        self.scale(&-BigInt::one())
    }

    pub fn sub(&self, other: &TruncSeries) -> TruncSeries {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> TruncSeries {
        if k.is_zero() {
            return TruncSeries::zero(self.degree_bound());
        }
        TruncSeries {
            buckets: self
                .buckets
                .iter()
                .map(|b| b.iter().map(|(m, c)| (m.clone(), c * k)).collect())
                .collect(),
        }
    }

    /// Degree-bucketed product; pairs whose degrees exceed the bound are skipped.
    pub fn mul(&self, other: &TruncSeries) -> TruncSeries {
        let d = self.degree_bound().min(other.degree_bound());
        let mut out = TruncSeries::zero(d);
        for da in 0..=d {
            for db in 0..=(d - da) {
                for (ma, ca) in &self.buckets[da] {
                    for (mb, cb) in &other.buckets[db] {
                        let mut m = Vec::with_capacity(da + db);
                        m.extend_from_slice(ma);
                        m.extend_from_slice(mb);
                        add_into(&mut out.buckets[da + db], m, ca * cb);
                    }
                }
            }
        }
        out
    }

    /// Right multiplication by `(1 + t_g)^e`.
    fn mul_syllable(&self, g: u32, e: i64) -> TruncSeries {
        let d = self.degree_bound();
        let coeffs: Vec<BigInt> = (0..=d).map(|k| gen_binomial(e, k)).collect();
        let mut out = TruncSeries::zero(d);
        for (da, bucket) in self.buckets.iter().enumerate() {
            for (m, c) in bucket {
                for (k, ck) in coeffs.iter().enumerate().take(d - da + 1) {
                    if ck.is_zero() {
                        continue;
                    }
                    let mut mm = Vec::with_capacity(da + k);
                    mm.extend_from_slice(m);
                    mm.extend(std::iter::repeat(g).take(k));
                    add_into(&mut out.buckets[da + k], mm, c * ck);
                }
            }
        }
        out
    }

    /// Least degree with a nonzero term.
    pub fn valuation(&self) -> Valuation {
        match self.buckets.iter().position(|b| !b.is_empty()) {
            Some(k) => Valuation::Finite(k),
            None => Valuation::Beyond(self.degree_bound()),
        }
    }

    pub fn to_json(&self) -> Vec<SeriesTerm> {
        self.terms()
            .map(|(m, c)| SeriesTerm { monomial: monomial_text(m, " "), coef: c.clone() })
            .collect()
    }
}

fn add_into(b: &mut BTreeMap<Monomial, BigInt>, m: Monomial, c: BigInt) {
    if c.is_zero() {
        return;
    }
    match b.get_mut(&m) {
        Some(v) => {
            *v += c;
            if v.is_zero() {
                b.remove(&m);
            }
        }
        None => {
            b.insert(m, c);
        }
    }
}

/// `C(e, k)` for any integer `e`.
fn gen_binomial(e: i64, k: usize) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k as i64 {
        num *= e - i;
        den *= i + 1;
    }
    num / den
}

pub fn monomial_text(m: &[u32], sep: &str) -> String {
    if m.is_empty() {
        "1".into()
    } else {
        m.iter().map(|i| format!("t{i}")).collect::<Vec<_>>().join(sep)
    }
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.terms() {
            let neg = c.is_negative();
            let abs = c.abs();
            if first {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            first = false;
            if m.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                f.write_str(&monomial_text(m, "*"))?;
            } else {
                write!(f, "{abs}*{}", monomial_text(m, "*"))?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SeriesTerm {
    pub monomial: String,
    #[serde(with = "bigint_json")]
    pub coef: BigInt,
}

/// Membership depth in powers of the fundamental ideal. `Beyond(d)` means
/// every term through degree `d` vanished.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(usize),
    Beyond(usize),
}

impl Valuation {
    pub fn finite(&self) -> Option<usize> {
        match self {
            Valuation::Finite(v) => Some(*v),
            Valuation::Beyond(_) => None,
        }
    }

    pub fn is_beyond(&self) -> bool {
        matches!(self, Valuation::Beyond(_))
    }

    /// Whether the element lies in the `n`-th power; `None` if the
    /// truncation cannot tell.
    pub fn at_least(&self, n: usize) -> Option<bool> {
        match *self {
            Valuation::Finite(v) => Some(v >= n),
            Valuation::Beyond(d) => (n <= d + 1).then_some(true),
        }
    }

    /// Total order with `Beyond` above every finite value.
    pub fn key(&self) -> (usize, usize) {
        match *self {
            Valuation::Finite(v) => (0, v),
            Valuation::Beyond(d) => (1, d),
        }
    }

    pub fn min(self, other: Valuation) -> Valuation {
        if other.key() < self.key() {
            other
        } else {
            self
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Beyond(d) => write!(f, ">{d}"),
        }
    }
}

impl Serialize for Valuation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Valuation::Finite(v) => s.serialize_u64(*v as u64),
            Valuation::Beyond(d) => s.serialize_str(&format!(">{d}")),
        }
    }
}

pub fn expand_word(w: &Word, d: usize) -> TruncSeries {
    let mut s = TruncSeries::one(d);
    for syl in w.syllables() {
        s = s.mul_syllable(syl.gen, syl.exp);
    }
    s
}

pub fn expand(a: &RingElement, d: usize) -> TruncSeries {
    let mut s = TruncSeries::zero(d);
    for (w, c) in a.terms() {
        s.add_assign(&expand_word(w, d).scale(c));
    }
    s
}

/// Least `k` with `a ∈ 𝔛^k \ 𝔛^{k+1}`, read off the expansion through degree `d`.
pub fn ideal_valuation(a: &RingElement, d: usize) -> Valuation {
    if a.is_zero() {
        return Valuation::Beyond(d);
    }
    if !a.augmentation().is_zero() {
        return Valuation::Finite(0);
    }
    // raise the bound step by step; low valuations stop early
    for b in 1..=d {
        let s = expand(a, b);
        if !s.component(b).is_empty() {
            return Valuation::Finite(b);
        }
    }
    Valuation::Beyond(d)
}

/// Lower-central class of `v`: `n` with `v ∈ γ_n \ γ_{n+1}`, or `Beyond(d)`.
/// Computed from `v - 1` and, independently, from the derivatives of `v`.
pub fn lcs_class(v: &Word, d: usize) -> Result<Valuation> {
    if v.is_identity() {
        return Err(Error::IdentityElement);
    }
    let direct = ideal_valuation(&RingElement::minus_one(v), d);
    let mut via = Valuation::Beyond(d.saturating_sub(1));
    for j in 1..=v.max_gen() {
        let dj = fox::derive_word(v, j);
        via = via.min(ideal_valuation(&dj, d.saturating_sub(1)));
    }
    let consistent = match (direct, via) {
        (Valuation::Finite(n), Valuation::Finite(m)) => n == m + 1,
        (Valuation::Beyond(_), Valuation::Beyond(_)) => true,
        _ => false,
    };
    if !consistent {
        return Err(Error::InternalInconsistency(format!(
            "class of {v}: direct valuation {direct}, derivative route {via}"
        )));
    }
    Ok(direct)
}

/// Measured form of the `[v, x2]` step: with `m = val D_1(v)` finite, returns
/// `(m, val D_1([v, x2]))`.
pub fn lemma6_measure(v: &Word, d: usize) -> Result<(usize, Valuation)> {
    let d1 = fox::derive_word(v, 1);
    if d1.is_zero() {
        return Err(Error::PreconditionFailed("D_1(v) = 0".into()));
    }
    let m = match ideal_valuation(&d1, d) {
        Valuation::Finite(m) => m,
        Valuation::Beyond(_) => return Err(Error::Inconclusive(d)),
    };
    let w = Word::commutator(v, &Word::gen(2));
    Ok((m, ideal_valuation(&fox::derive_word(&w, 1), d)))
}

/// With `val D_1(v) = j - 1` exactly, checks `D_1([v, x2]) ∉ 𝔛^{j+1}`.
pub fn lemma6_step(v: &Word, j: usize, d: usize) -> Result<bool> {
    let (m, after) = lemma6_measure(v, d)?;
    if j == 0 || m != j - 1 {
        return Err(Error::PreconditionFailed(format!("val D_1(v) = {m}, expected {}", j.wrapping_sub(1))));
    }
    match after {
        Valuation::Finite(k) => Ok(k <= j),
        Valuation::Beyond(b) if b >= j => Ok(false),
        Valuation::Beyond(_) => Err(Error::Inconclusive(d)),
    }
}
