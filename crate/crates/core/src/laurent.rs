//! Sparse Laurent polynomials in commuting variables with integer coefficients.
//!
//! These carry the commutative quotient rings: `Z[F/γ₂F] = Z[Z^n]` (variables
//! `1..=n`) and the graded level-1 ring, where variables at or above a
//! `tau_base` index are polynomial "τ" variables with a truncation degree.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Sparse monomial: sorted `(variable, exponent)` pairs with nonzero exponents.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mono(Vec<(u32, i64)>);

impl Mono {
    pub fn one() -> Self {
        Mono(Vec::new())
    }

    pub fn var(v: u32, e: i64) -> Self {
        if e == 0 {
            Mono::one()
        } else {
            Mono(vec![(v, e)])
        }
    }

    /// Monomial `x_1^{e_1} ... x_n^{e_n}` from a dense exponent vector.
    pub fn from_exponents(exps: &[i64]) -> Self {
        Mono(
            exps.iter()
                .enumerate()
                .filter(|(_, &e)| e != 0)
                .map(|(i, &e)| (i as u32 + 1, e))
                .collect(),
        )
    }

    pub fn exponents(&self, n: u32) -> Vec<i64> {
        let mut v = vec![0; n as usize];
        for &(var, e) in &self.0 {
            if var >= 1 && var <= n {
                v[var as usize - 1] = e;
            }
        }
        v
    }

    pub fn pairs(&self) -> &[(u32, i64)] {
        &self.0
    }

    pub fn exp_of(&self, v: u32) -> i64 {
        self.0.iter().find(|p| p.0 == v).map(|p| p.1).unwrap_or(0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                out.push(b[j]);
                j += 1;
            } else {
                let e = a[i].1 + b[j].1;
                if e != 0 {
                    out.push((a[i].0, e));
                }
                i += 1;
                j += 1;
            }
        }
        Mono(out)
    }

    /// Total degree in variables `>= base`.
    pub fn degree_from(&self, base: u32) -> i64 {
        self.0.iter().filter(|p| p.0 >= base).map(|p| p.1).sum()
    }

    /// Part of the monomial in variables `< base`.
    pub fn below(&self, base: u32) -> Mono {
        Mono(self.0.iter().copied().filter(|p| p.0 < base).collect())
    }
}

/// Finite integer combination of [`Mono`]s; no zero coefficients stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Poly {
    terms: BTreeMap<Mono, BigInt>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one() -> Self {
        Poly::monomial(Mono::one(), BigInt::one())
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Poly::monomial(Mono::one(), c.into())
    }

    pub fn monomial(m: Mono, c: BigInt) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn var(v: u32) -> Self {
        Poly::monomial(Mono::var(v, 1), BigInt::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &BigInt)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Mono) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, m: Mono, c: BigInt) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: &BigInt) -> Poly {
        if k.is_zero() {
            return Poly::zero();
        }
        Poly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c * k)).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.mul_filtered(other, |_| true)
    }

    /// Product keeping only monomials accepted by `keep`.
    pub fn mul_filtered(&self, other: &Poly, keep: impl Fn(&Mono) -> bool) -> Poly {
        let mut acc: BTreeMap<Mono, BigInt> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m = ma.mul(mb);
                if keep(&m) {
                    *acc.entry(m).or_default() += ca * cb;
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Poly { terms: acc }
    }

    /// Drops monomials rejected by `keep`.
    pub fn filtered(&self, keep: impl Fn(&Mono) -> bool) -> Poly {
        Poly {
            terms: self.terms.iter().filter(|(m, _)| keep(m)).map(|(m, c)| (m.clone(), c.clone())).collect(),
        }
    }

    /// Sum of coefficients: the value at the all-ones point.
    pub fn augmentation(&self) -> BigInt {
        self.terms.values().sum()
    }

    /// Minimum τ-degree (variables `>= base`) over the terms; `None` for zero.
    pub fn min_degree_from(&self, base: u32) -> Option<i64> {
        self.terms.keys().map(|m| m.degree_from(base)).min()
    }

    /// Order of vanishing at the all-ones point, i.e. the adic valuation for
    /// the augmentation ideal of `Z[Z^n]`. `None` for zero.
    pub fn augmentation_order(&self) -> Option<usize> {
        if self.is_zero() {
            return None;
        }
        // shift to nonnegative exponents; a monomial unit does not change the order
        let vars: Vec<u32> = {
            let mut v: Vec<u32> = self.terms.keys().flat_map(|m| m.0.iter().map(|p| p.0)).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let shift: Vec<i64> = vars
            .iter()
            .map(|&v| self.terms.keys().map(|m| m.exp_of(v)).min().unwrap_or(0).min(0))
            .collect();
        let shifted: Vec<(Vec<u64>, &BigInt)> = self
            .terms
            .iter()
            .map(|(m, c)| {
                (vars.iter().zip(&shift).map(|(&v, &s)| (m.exp_of(v) - s) as u64).collect(), c)
            })
            .collect();
        let max_total: u64 = shifted.iter().map(|(e, _)| e.iter().sum::<u64>()).max().unwrap_or(0);
        // Taylor coefficients at 1: coefficient of prod s_v^{k_v} is sum_c c * prod C(e_v, k_v).
        for degree in 0..=max_total as usize {
            let mut acc: BTreeMap<Vec<u64>, BigInt> = BTreeMap::new();
            for ks in compositions(vars.len(), degree) {
                let mut total = BigInt::zero();
                for (e, c) in &shifted {
                    if ks.iter().zip(e).all(|(k, e)| k <= e) {
                        let mut prod = (*c).clone();
                        for (k, e) in ks.iter().zip(e) {
                            prod *= binomial(*e, *k);
                        }
                        total += prod;
                    }
                }
                if !total.is_zero() {
                    acc.insert(ks, total);
                }
            }
            if !acc.is_empty() {
                return Some(degree);
            }
        }
        // a nonzero polynomial cannot vanish to order beyond its degree
        unreachable!("nonzero Laurent polynomial vanishes to infinite order")
    }

    pub fn display_with(&self, prefix: &str) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mono = if m.0.is_empty() {
                None
            } else {
                Some(
                    m.0.iter()
                        .map(|&(v, e)| if e == 1 { format!("{prefix}{v}") } else { format!("{prefix}{v}^{e}") })
                        .collect::<Vec<_>>()
                        .join("*"),
                )
            };
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            match mono {
                None => out.push_str(&abs.to_string()),
                Some(s) if abs.is_one() => out.push_str(&s),
                Some(s) => out.push_str(&format!("{abs}*{s}")),
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with("y"))
    }
}

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// All vectors of `parts` nonnegative integers summing to `total`.
fn compositions(parts: usize, total: usize) -> Vec<Vec<u64>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(parts - 1, total - first) {
            rest.insert(0, first as u64);
            out.push(rest);
        }
    }
    out
}
