//! Fox derivatives with the product rule `∂(uv) = ∂(u)v + ε(u)∂(v)`.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::One;

use crate::error::{Error, Result};
use crate::ring::{coset_map, QuotientSpec, RingElement};
use crate::subgroup;
use crate::words::{FreeGroup, Word};

/// `D_k(w)` for a single word.
///
/// Writing `w = l_1 ... l_L`, each letter `g_k` at position `i` contributes
/// the suffix after it and each `g_k^{-1}` contributes minus the suffix
/// starting at it.
pub fn derive_word(w: &Word, k: u32) -> RingElement {
    let letters: Vec<_> = w.letters().collect();
    let mut out = RingElement::zero();
    if !letters.iter().any(|l| l.gen == k) {
        return out;
    }
    let mut suffix = Word::identity();
    for l in letters.iter().rev() {
        if l.gen == k && !l.inv {
            out.add_term(suffix.clone(), BigInt::one());
        }
        suffix = l.to_word().mul(&suffix);
        if l.gen == k && l.inv {
            out.add_term(suffix.clone(), -BigInt::one());
        }
    }
    out
}

pub fn derive(u: &RingElement, k: u32) -> RingElement {
    let mut out = RingElement::zero();
    for (w, c) in u.terms() {
        for (t, e) in derive_word(w, k).terms() {
            out.add_term(t.clone(), c * e);
        }
    }
    out
}

/// Rank-checked derivative.
pub fn derive_in(group: &FreeGroup, u: &RingElement, k: u32) -> Result<RingElement> {
    group.check_index(k)?;
    u.check_rank(group)?;
    Ok(derive(u, k))
}

/// Memoizes `D_k(w)` per `(word, k)`; one context per thread.
#[derive(Default)]
pub struct FoxContext {
    memo: HashMap<(Word, u32), RingElement>,
}

impl FoxContext {
    pub fn new() -> Self {
        FoxContext::default()
    }

    pub fn derive_word(&mut self, w: &Word, k: u32) -> RingElement {
        if let Some(r) = self.memo.get(&(w.clone(), k)) {
            return r.clone();
        }
        let r = derive_word(w, k);
        self.memo.insert((w.clone(), k), r.clone());
        r
    }

    pub fn derive(&mut self, u: &RingElement, k: u32) -> RingElement {
        let mut out = RingElement::zero();
        for (w, c) in u.terms() {
            for (t, e) in self.derive_word(w, k).terms() {
                out.add_term(t.clone(), c * e);
            }
        }
        out
    }

    pub fn cached(&self) -> usize {
        self.memo.len()
    }
}

/// `(D_1(u), ..., D_n(u))`, checked against `u - ε(u) = Σ (g_j - 1) D_j(u)`.
pub fn fundamental_decomposition(u: &RingElement, rank: u32) -> Result<Vec<RingElement>> {
    let g = u.max_gen();
    if g > rank {
        return Err(Error::RankMismatch { index: g, rank });
    }
    let entries: Vec<RingElement> = (1..=rank).map(|j| derive(u, j)).collect();
    let mut rhs = RingElement::zero();
    for (j, e) in entries.iter().enumerate() {
        rhs.add_assign(&RingElement::minus_one(&Word::gen(j as u32 + 1)).mul(e));
    }
    let lhs = u.sub(&RingElement::from_int(u.augmentation()));
    if lhs != rhs {
        return Err(Error::InternalInconsistency(format!("fundamental identity fails for {u}")));
    }
    Ok(entries)
}

/// Whether `D_k(f^{-1} r f) - D_k(r) f` vanishes in `Z[F/N]`.
pub fn conjugation_congruence_check(r: &Word, f: &Word, k: u32, quotient: &QuotientSpec) -> Result<bool> {
    if !quotient.contains(r) {
        return Err(Error::NotInKernel);
    }
    let lhs = derive_word(&r.conjugate(f), k);
    let rhs = derive_word(r, k).mul_word(f);
    Ok(coset_map(&lhs.sub(&rhs), quotient)?.is_zero())
}

/// `D_j(v) = Σ_k D_j(x_k) ∂_k(v)` with `v` given as a word in the basis
/// letters `1..=basis.len()` and `∂_k` the derivatives for that basis.
pub fn chain_rule_check(v_in_basis: &Word, basis: &[Word], j: u32) -> Result<bool> {
    let m = basis.len() as u32;
    let g = v_in_basis.max_gen();
    if g > m {
        return Err(Error::InvalidGenerator { index: g, rank: m });
    }
    let spelled = v_in_basis.substitute(basis);
    let lhs = derive_word(&spelled, j);
    let mut rhs = RingElement::zero();
    for k in 1..=m {
        let dk = derive_word(v_in_basis, k).map_words(|w| w.substitute(basis));
        if dk.is_zero() {
            continue;
        }
        rhs.add_assign(&derive_word(&basis[k as usize - 1], j).mul(&dk));
    }
    Ok(lhs == rhs)
}

/// As [`chain_rule_check`], with `v` given by its ambient spelling.
pub fn chain_rule_check_spelled(v: &Word, basis: &[Word], j: u32) -> Result<bool> {
    let expr = subgroup::express(v, basis)?;
    chain_rule_check(&expr, basis, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ring_element, parse_word};

    fn w(s: &str) -> Word {
        parse_word(s, None).unwrap()
    }

    fn re(s: &str) -> RingElement {
        parse_ring_element(s, None).unwrap()
    }

    #[test]
    fn normalization_and_inverse() {
        assert_eq!(derive_word(&w("y1"), 1), RingElement::one());
        assert!(derive_word(&w("y1"), 2).is_zero());
        assert_eq!(derive_word(&w("y1^-1"), 1), re("-y1^-1"));
        assert_eq!(derive_word(&w("y1 y2"), 1), re("y2"));
        assert_eq!(derive_word(&w("y1 y2"), 2), re("1"));
    }

    #[test]
    fn commutator_derivatives() {
        assert_eq!(derive_word(&w("[y1,y2]"), 1), re("y2 - [y1,y2]"));
        assert_eq!(derive_word(&w("[y1,y2]"), 2), re("1 - Y2 y1 y2"));
        assert_eq!(derive_word(&w("[y1,y3]"), 3), re("1 - Y3 y1 y3"));
    }

    #[test]
    fn decomposition() {
        let e = fundamental_decomposition(&re("y1 y2"), 2).unwrap();
        assert_eq!(e, vec![re("y2"), re("1")]);
        assert!(fundamental_decomposition(&re("1"), 3).unwrap().iter().all(RingElement::is_zero));
        let g = fundamental_decomposition(&re("y2"), 3).unwrap();
        assert_eq!(g, vec![RingElement::zero(), RingElement::one(), RingElement::zero()]);
        assert!(matches!(fundamental_decomposition(&re("y4"), 3), Err(Error::RankMismatch { .. })));
    }

    #[test]
    fn congruence() {
        let q = QuotientSpec::abelian();
        assert!(conjugation_congruence_check(&w("[y1,y2]"), &w("y1"), 1, &q).unwrap());
        assert!(conjugation_congruence_check(&w("[y1,y2]"), &Word::identity(), 2, &q).unwrap());
        assert!(conjugation_congruence_check(&Word::identity(), &w("y2 y1"), 1, &q).unwrap());
        assert_eq!(conjugation_congruence_check(&w("y1"), &w("y2"), 1, &q), Err(Error::NotInKernel));
    }

    #[test]
    fn chain_rule() {
        let basis = vec![w("y1 y2"), w("y2^3")];
        assert!(chain_rule_check(&w("y1 y2"), &basis, 1).unwrap());
        assert!(chain_rule_check(&w("y1 y2"), &basis, 2).unwrap());
        assert!(chain_rule_check(&Word::identity(), &basis, 1).unwrap());
        let gens = vec![w("y1"), w("y2"), w("y3")];
        let v = w("[y1,y3] y2^-2");
        assert!(chain_rule_check(&v, &gens, 3).unwrap());
        assert!(chain_rule_check_spelled(&w("y1 y2 y2^3 Y2 Y1"), &basis, 1).unwrap());
        assert_eq!(chain_rule_check_spelled(&w("y2"), &basis, 1), Err(Error::NotInSubgroup));
    }

    #[test]
    fn memo_context() {
        let mut cx = FoxContext::new();
        let a = cx.derive(&re("[y1,y2] + 2*y1"), 1);
        let b = derive(&re("[y1,y2] + 2*y1"), 1);
        assert_eq!(a, b);
        assert_eq!(cx.cached(), 2);
    }
}
