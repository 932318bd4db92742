//! The integral group ring `Z[F]` and its quotients `Z[F/γ_c F]`.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laurent::{Mono, Poly};
use crate::magnus::{self, Monomial};
use crate::words::{FreeGroup, Word};

/// Finite integer combination of group elements.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RingElement {
    terms: BTreeMap<Word, BigInt>,
}

impl RingElement {
    pub fn zero() -> Self {
        RingElement::default()
    }

    pub fn one() -> Self {
        RingElement::from_word(Word::identity())
    }

    pub fn from_word(w: Word) -> Self {
        RingElement::monomial(w, BigInt::one())
    }

    pub fn from_int(c: impl Into<BigInt>) -> Self {
        RingElement::monomial(Word::identity(), c.into())
    }

    pub fn monomial(w: Word, c: BigInt) -> Self {
        let mut e = RingElement::zero();
        e.add_term(w, c);
        e
    }

    /// `w - 1`.
    pub fn minus_one(w: &Word) -> Self {
        let mut e = RingElement::from_word(w.clone());
        e.add_term(Word::identity(), -BigInt::one());
        e
    }

    pub fn add_term(&mut self, w: Word, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&w) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&w);
                }
            }
            None => {
                self.terms.insert(w, c);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &BigInt)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<Word, BigInt> {
        self.terms
    }

    pub fn coefficient(&self, w: &Word) -> BigInt {
        self.terms.get(w).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sum of coefficients, the image under `F -> 1`.
    pub fn augmentation(&self) -> BigInt {
        self.terms.values().sum()
    }

    pub fn max_gen(&self) -> u32 {
        self.terms.keys().map(Word::max_gen).max().unwrap_or(0)
    }

    pub fn check_rank(&self, group: &FreeGroup) -> Result<()> {
        self.terms.keys().try_for_each(|w| group.check_word(w))
    }

    pub fn add(&self, other: &RingElement) -> RingElement {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn add_assign(&mut self, other: &RingElement) {
        for (w, c) in &other.terms {
            self.add_term(w.clone(), c.clone());
        }
    }

    pub fn sub(&self, other: &RingElement) -> RingElement {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> RingElement {
        RingElement { terms: self.terms.iter().map(|(w, c)| (w.clone(), -c)).collect() }
    }

    pub fn scale(&self, k: &BigInt) -> RingElement {
        if k.is_zero() {
            return RingElement::zero();
        }
        RingElement { terms: self.terms.iter().map(|(w, c)| (w.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &RingElement) -> RingElement {
        let mut out = RingElement::zero();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                out.add_term(a.mul(b), ca * cb);
            }
        }
        out
    }

    /// `self · w`.
    pub fn mul_word(&self, w: &Word) -> RingElement {
        let mut out = RingElement::zero();
        for (a, c) in &self.terms {
            out.add_term(a.mul(w), c.clone());
        }
        out
    }

    /// `w · self`.
    pub fn word_mul(&self, w: &Word) -> RingElement {
        let mut out = RingElement::zero();
        for (a, c) in &self.terms {
            out.add_term(w.mul(a), c.clone());
        }
        out
    }

    /// Applies a map to every group element, e.g. spelling Schreier letters.
    pub fn map_words(&self, f: impl Fn(&Word) -> Word) -> RingElement {
        let mut out = RingElement::zero();
        for (w, c) in &self.terms {
            out.add_term(f(w), c.clone());
        }
        out
    }

    pub fn display_with(&self, prefix: &str) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (w, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            if w.is_identity() {
                out.push_str(&abs.to_string());
            } else if abs.is_one() {
                out.push_str(&w.display_with(prefix));
            } else {
                out.push_str(&format!("{abs}*{}", w.display_with(prefix)));
            }
        }
        out
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with("y"))
    }
}

/// JSON helper: integers that fit in `i64` serialize as numbers, others as strings.
pub mod bigint_json {
    use super::*;
    use serde::de::Error as _;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
        match i64::try_from(v) {
            Ok(x) => s.serialize_i64(x),
            Err(_) => s.serialize_str(&v.to_string()),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigInt, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::Number(n) => n
                .as_i64()
                .map(BigInt::from)
                .ok_or_else(|| D::Error::custom("non-integer coefficient")),
            serde_json::Value::String(s) => s.parse().map_err(D::Error::custom),
            _ => Err(D::Error::custom("expected integer")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub word: String,
    #[serde(with = "bigint_json")]
    pub coef: BigInt,
}

impl RingElement {
    pub fn to_json(&self) -> Vec<TermJson> {
        self.terms.iter().map(|(w, c)| TermJson { word: w.to_string(), coef: c.clone() }).collect()
    }
}

/// `n(a - 1) - (a^n - 1)`; lies in `Δ_{k+1}` whenever `a` lies in the `k`-th layer.
pub fn power_difference_normalize(a: &Word, n: i64, _class_bound: usize) -> RingElement {
    RingElement::minus_one(a)
        .scale(&BigInt::from(n))
        .sub(&RingElement::minus_one(&a.pow(n)))
}

/// The normal subgroup `N = γ_c F` used as quotient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuotientSpec {
    class: u32,
}

impl QuotientSpec {
    /// `N = γ_c F`, `c >= 2`.
    pub fn gamma(c: u32) -> Result<Self> {
        if c < 2 {
            return Err(Error::UnsupportedQuotient(format!("gamma{c}: need c >= 2")));
        }
        Ok(QuotientSpec { class: c })
    }

    pub fn abelian() -> Self {
        QuotientSpec { class: 2 }
    }

    pub fn class(&self) -> u32 {
        self.class
    }

    pub fn is_abelian(&self) -> bool {
        self.class == 2
    }

    pub fn name(&self) -> String {
        format!("gamma{}", self.class)
    }

    /// Whether `w` lies in `N`.
    pub fn contains(&self, w: &Word) -> bool {
        if self.is_abelian() {
            abelian_mono(w) == Mono::one()
        } else {
            magnus::ideal_valuation(&RingElement::minus_one(w), self.class as usize - 1).is_beyond()
        }
    }
}

/// Exponent-sum monomial of a word: its image in `F/γ₂F = Z^n`.
pub fn abelian_mono(w: &Word) -> Mono {
    let mut sums: BTreeMap<u32, i64> = BTreeMap::new();
    for s in w.syllables() {
        *sums.entry(s.gen).or_default() += s.exp;
    }
    let mut m = Mono::one();
    for (g, e) in sums {
        m = m.mul(&Mono::var(g, e));
    }
    m
}

/// Group element of `F/γ_c F`, keyed by its Magnus image below degree `c`.
pub type NilKey = Vec<(Monomial, BigInt)>;

/// Element of `Z[F/N]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum QuotElement {
    Laurent(Poly),
    Nilpotent { class: u32, terms: BTreeMap<NilKey, BigInt> },
}

impl QuotElement {
    pub fn is_zero(&self) -> bool {
        match self {
            QuotElement::Laurent(p) => p.is_zero(),
            QuotElement::Nilpotent { terms, .. } => terms.is_empty(),
        }
    }

    pub fn as_laurent(&self) -> Option<&Poly> {
        match self {
            QuotElement::Laurent(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for QuotElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuotElement::Laurent(p) => write!(f, "{}", p.display_with("y")),
            QuotElement::Nilpotent { terms, .. } => {
                if terms.is_empty() {
                    return f.write_str("0");
                }
                let parts: Vec<String> = terms
                    .iter()
                    .map(|(k, c)| {
                        let key: Vec<String> = k
                            .iter()
                            .map(|(m, v)| format!("{v}*t{}", m.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".t")))
                            .collect();
                        format!("{c}*<{}>", key.join(" + "))
                    })
                    .collect();
                f.write_str(&parts.join(" + "))
            }
        }
    }
}

/// Image of `a` in `Z[F/N]`; zero iff `a ∈ Z[F](N - 1)`.
pub fn coset_map(a: &RingElement, quotient: &QuotientSpec) -> Result<QuotElement> {
    if quotient.class < 2 {
        return Err(Error::UnsupportedQuotient(quotient.name()));
    }
    if quotient.is_abelian() {
        let mut p = Poly::zero();
        for (w, c) in a.terms() {
            p.add_term(abelian_mono(w), c.clone());
        }
        return Ok(QuotElement::Laurent(p));
    }
    let d = quotient.class as usize - 1;
    let mut terms: BTreeMap<NilKey, BigInt> = BTreeMap::new();
    for (w, c) in a.terms() {
        let key: NilKey = magnus::expand_word(w, d)
            .terms()
            .filter(|(m, _)| !m.is_empty())
            .map(|(m, v)| (m.clone(), v.clone()))
            .collect();
        *terms.entry(key).or_default() += c;
    }
    terms.retain(|_, c| !c.is_zero());
    Ok(QuotElement::Nilpotent { class: quotient.class, terms })
}

/// Transversal word `y1^{a1}...yn^{an}` of a Laurent monomial.
pub fn mono_word(m: &Mono) -> Word {
    Word::from_syllables(m.pairs().iter().map(|&(g, e)| crate::words::Syllable::new(g, e)))
}

/// Lifts a Laurent polynomial to `Z[F]` through the sorted transversal.
pub fn lift_laurent(p: &Poly) -> RingElement {
    let mut out = RingElement::zero();
    for (m, c) in p.terms() {
        out.add_term(mono_word(m), c.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ring_element, parse_word};

    fn re(s: &str) -> RingElement {
        parse_ring_element(s, None).unwrap()
    }

    fn w(s: &str) -> Word {
        parse_word(s, None).unwrap()
    }

    #[test]
    fn distribute_and_reduce() {
        let a = re("y1 - 1").mul(&re("y1^-1"));
        assert_eq!(a, re("1 - y1^-1"));
        assert!(re("y1 + 3").mul(&RingElement::zero()).is_zero());
    }

    #[test]
    fn commutator_identity_expands_to_zero() {
        let a = w("y1");
        let b = w("y2");
        let lhs = RingElement::minus_one(&a).mul(&RingElement::minus_one(&b));
        let rhs = RingElement::minus_one(&b)
            .mul(&RingElement::minus_one(&a))
            .add(&RingElement::from_word(b.mul(&a)).mul(&RingElement::minus_one(&Word::commutator(&a, &b))));
        assert!(lhs.sub(&rhs).is_zero());
    }

    #[test]
    fn augmentation_examples() {
        assert_eq!(re("2*y1*y2 - 3*y2").augmentation(), BigInt::from(-1));
        assert_eq!(RingElement::zero().augmentation(), BigInt::zero());
    }

    #[test]
    fn power_difference() {
        let a = w("y1");
        assert!(power_difference_normalize(&a, 1, 3).is_zero());
        assert!(power_difference_normalize(&a, 0, 3).is_zero());
        let p = power_difference_normalize(&a, 2, 1);
        let sq = RingElement::minus_one(&a).mul(&RingElement::minus_one(&a));
        assert_eq!(p, sq.neg());
    }

    #[test]
    fn coset_map_examples() {
        let q = QuotientSpec::abelian();
        let e = re("y1*[y1,y2] - y1");
        assert!(coset_map(&e, &q).unwrap().is_zero());
        let f = coset_map(&re("1 - y1"), &q).unwrap();
        assert!(!f.is_zero());
        assert!(coset_map(&RingElement::zero(), &q).unwrap().is_zero());
        assert!(matches!(QuotientSpec::gamma(1), Err(Error::UnsupportedQuotient(_))));
    }

    #[test]
    fn nilpotent_coset_map() {
        let q = QuotientSpec::gamma(3).unwrap();
        // [y1,y2] is nontrivial mod γ3 but [[y1,y2],y1] is trivial
        assert!(!coset_map(&re("[y1,y2] - 1"), &q).unwrap().is_zero());
        assert!(coset_map(&re("y2*[y1,y2,y1] - y2"), &q).unwrap().is_zero());
        assert!(q.contains(&w("[y1,y2,y2]")));
        assert!(!q.contains(&w("[y1,y2]")));
    }

    #[test]
    fn json_coefficients() {
        let big: BigInt = "123456789012345678901234567890".parse().unwrap();
        let e = RingElement::monomial(w("y1"), big.clone()).add(&RingElement::from_int(-2));
        let j = serde_json::to_string(&e.to_json()).unwrap();
        assert!(j.contains("\"123456789012345678901234567890\""));
        assert!(j.contains("-2"));
        let back: Vec<TermJson> = serde_json::from_str(&j).unwrap();
        assert_eq!(back, e.to_json());
    }
}
