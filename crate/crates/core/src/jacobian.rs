//! Matrices over group rings: Fox Jacobians, elementary transformations with
//! a replayable log, valuation-guided triangularization, scaled row
//! combinations, and generator selection.
//!
//! Row indices and column indices are 0-based throughout the API; reports
//! name generators 1-based.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::FiltrationSignature;
use crate::fox;
use crate::laurent::{Mono, Poly};
use crate::ring::{coset_map, lift_laurent, QuotElement, QuotientSpec, RingElement};
use crate::schreier::{abelian_image, coset_word, SchreierSystem};
use crate::words::{FreeGroup, Word};

/// A commutative (or, for `Z[F]`, merely replayable) ring with a valuation.
pub trait Domain {
    type Elem: Clone + PartialEq + fmt::Debug;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn is_zero(&self, a: &Self::Elem) -> bool;
    /// `None` stands for `ψ(0) = ∞`.
    fn psi(&self, a: &Self::Elem) -> Option<usize>;
    fn render(&self, a: &Self::Elem) -> String;

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        self.add(a, &self.neg(b))
    }

    /// Nonzero image in the residue ring.
    fn shadow_nonzero(&self, a: &Self::Elem) -> bool {
        self.psi(a) == Some(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LaurentPsi {
    Trivial,
    AugmentationOrder,
}

/// `Z[Z^n]` as Laurent polynomials.
#[derive(Clone, Copy, Debug)]
pub struct LaurentDomain {
    pub psi: LaurentPsi,
}

impl LaurentDomain {
    pub fn trivial() -> Self {
        LaurentDomain { psi: LaurentPsi::Trivial }
    }

    pub fn augmentation() -> Self {
        LaurentDomain { psi: LaurentPsi::AugmentationOrder }
    }
}

impl Domain for LaurentDomain {
    type Elem = Poly;
    fn zero(&self) -> Poly {
        Poly::zero()
    }
    fn one(&self) -> Poly {
        Poly::one()
    }
    fn add(&self, a: &Poly, b: &Poly) -> Poly {
        a.add(b)
    }
    fn neg(&self, a: &Poly) -> Poly {
        a.neg()
    }
    fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        a.mul(b)
    }
    fn is_zero(&self, a: &Poly) -> bool {
        a.is_zero()
    }
    fn psi(&self, a: &Poly) -> Option<usize> {
        match self.psi {
            _ if a.is_zero() => None,
            LaurentPsi::Trivial => Some(0),
            LaurentPsi::AugmentationOrder => a.augmentation_order(),
        }
    }
    fn render(&self, a: &Poly) -> String {
        a.display_with("y")
    }
}

/// Level-1 auxiliary ring: Laurent in `y_1..y_n`, polynomial in `τ_z`
/// (variable `n + z` for Schreier letter `z`), truncated above τ-degree `trunc`.
#[derive(Clone, Copy, Debug)]
pub struct GradedDomain {
    pub rank: u32,
    pub trunc: usize,
}

impl GradedDomain {
    fn base(&self) -> u32 {
        self.rank + 1
    }

    /// The `τ = 0` part.
    pub fn shadow(&self, a: &Poly) -> Poly {
        let b = self.base();
        a.filtered(|m| m.degree_from(b) == 0)
    }
}

impl Domain for GradedDomain {
    type Elem = Poly;
    fn zero(&self) -> Poly {
        Poly::zero()
    }
    fn one(&self) -> Poly {
        Poly::one()
    }
    fn add(&self, a: &Poly, b: &Poly) -> Poly {
        a.add(b)
    }
    fn neg(&self, a: &Poly) -> Poly {
        a.neg()
    }
    fn mul(&self, a: &Poly, b: &Poly) -> Poly {
        let (base, t) = (self.base(), self.trunc as i64);
        a.mul_filtered(b, |m| m.degree_from(base) <= t)
    }
    fn is_zero(&self, a: &Poly) -> bool {
        a.is_zero()
    }
    fn psi(&self, a: &Poly) -> Option<usize> {
        a.min_degree_from(self.base()).map(|d| d as usize)
    }
    fn render(&self, a: &Poly) -> String {
        if a.is_zero() {
            return "0".into();
        }
        let n = self.rank;
        let mut out = String::new();
        for (i, (m, c)) in a.terms().enumerate() {
            let factors: Vec<String> = m
                .pairs()
                .iter()
                .map(|&(v, e)| {
                    let name = if v <= n { format!("y{v}") } else { format!("t{}", v - n) };
                    if e == 1 {
                        name
                    } else {
                        format!("{name}^{e}")
                    }
                })
                .collect();
            let neg = c < &BigInt::zero();
            let abs = if neg { -c } else { c.clone() };
            if i > 0 {
                out.push_str(if neg { " - " } else { " + " });
            } else if neg {
                out.push('-');
            }
            if factors.is_empty() {
                out.push_str(&abs.to_string());
            } else if abs.is_one() {
                out.push_str(&factors.join("*"));
            } else {
                out.push_str(&format!("{abs}*{}", factors.join("*")));
            }
        }
        out
    }
}

/// `Z[F]`; only used to replay lifted transformations.
#[derive(Clone, Copy, Debug, Default)]
pub struct GroupRingDomain;

impl Domain for GroupRingDomain {
    type Elem = RingElement;
    fn zero(&self) -> RingElement {
        RingElement::zero()
    }
    fn one(&self) -> RingElement {
        RingElement::one()
    }
    fn add(&self, a: &RingElement, b: &RingElement) -> RingElement {
        a.add(b)
    }
    fn neg(&self, a: &RingElement) -> RingElement {
        a.neg()
    }
    fn mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        a.mul(b)
    }
    fn is_zero(&self, a: &RingElement) -> bool {
        a.is_zero()
    }
    fn psi(&self, a: &RingElement) -> Option<usize> {
        if a.is_zero() {
            None
        } else {
            Some(0)
        }
    }
    fn render(&self, a: &RingElement) -> String {
        a.to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ElementaryTransform<E> {
    SwapCols(usize, usize),
    SwapRows(usize, usize),
    /// `row ← row · factor`
    ScaleRow { row: usize, factor: E },
    /// `to ← to + from · factor`, `from < to`
    AddScaledRow { from: usize, to: usize, factor: E },
}

impl<E> ElementaryTransform<E> {
    pub fn map<F>(&self, f: impl Fn(&E) -> F) -> ElementaryTransform<F> {
        match self {
            ElementaryTransform::SwapCols(i, j) => ElementaryTransform::SwapCols(*i, *j),
            ElementaryTransform::SwapRows(i, j) => ElementaryTransform::SwapRows(*i, *j),
            ElementaryTransform::ScaleRow { row, factor } => ElementaryTransform::ScaleRow { row: *row, factor: f(factor) },
            ElementaryTransform::AddScaledRow { from, to, factor } => {
                ElementaryTransform::AddScaledRow { from: *from, to: *to, factor: f(factor) }
            }
        }
    }

    /// Scaling or adding rows only.
    pub fn is_row_operation(&self) -> bool {
        matches!(self, ElementaryTransform::ScaleRow { .. } | ElementaryTransform::AddScaledRow { .. })
    }

    pub fn to_json<D: Domain<Elem = E>>(&self, dom: &D) -> serde_json::Value {
        match self {
            ElementaryTransform::SwapCols(i, j) => serde_json::json!({"kind": "swap_cols", "i": i, "j": j}),
            ElementaryTransform::SwapRows(i, j) => serde_json::json!({"kind": "swap_rows", "i": i, "j": j}),
            ElementaryTransform::ScaleRow { row, factor } => {
                serde_json::json!({"kind": "scale_row", "i": row, "factor": dom.render(factor)})
            }
            ElementaryTransform::AddScaledRow { from, to, factor } => {
                serde_json::json!({"kind": "add_scaled_row", "i": from, "j": to, "factor": dom.render(factor)})
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RingMatrix<E> {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<E>>,
    original: Vec<Vec<E>>,
    log: Vec<ElementaryTransform<E>>,
}

impl<E: Clone + PartialEq + fmt::Debug> RingMatrix<E> {
    pub fn new(entries: Vec<Vec<E>>, cols: usize) -> Result<Self> {
        if let Some(r) = entries.iter().find(|r| r.len() != cols) {
            return Err(Error::IndexOutOfRange { index: r.len(), bound: cols });
        }
        Ok(RingMatrix { rows: entries.len(), cols, original: entries.clone(), entries, log: Vec::new() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entry(&self, i: usize, j: usize) -> &E {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &[Vec<E>] {
        &self.entries
    }

    pub fn original(&self) -> &[Vec<E>] {
        &self.original
    }

    pub fn log(&self) -> &[ElementaryTransform<E>] {
        &self.log
    }

    /// Current entries as a fresh matrix with an empty log.
    pub fn rebased(&self) -> Self {
        RingMatrix { rows: self.rows, cols: self.cols, entries: self.entries.clone(), original: self.entries.clone(), log: Vec::new() }
    }

    pub fn map<F: Clone + PartialEq + fmt::Debug>(&self, mut f: impl FnMut(&E) -> Result<F>) -> Result<RingMatrix<F>> {
        let entries = self
            .entries
            .iter()
            .map(|r| r.iter().map(&mut f).collect::<Result<Vec<F>>>())
            .collect::<Result<Vec<_>>>()?;
        RingMatrix::new(entries, self.cols)
    }

    pub fn apply<D: Domain<Elem = E>>(&self, dom: &D, t: &ElementaryTransform<E>) -> Result<Self> {
        let mut out = self.clone();
        out.apply_mut(dom, t)?;
        Ok(out)
    }

    pub fn apply_mut<D: Domain<Elem = E>>(&mut self, dom: &D, t: &ElementaryTransform<E>) -> Result<()> {
        transform_entries(dom, &mut self.entries, self.cols, t)?;
        self.log.push(t.clone());
        Ok(())
    }

    /// Re-applies the log to the stored original.
    pub fn replay<D: Domain<Elem = E>>(&self, dom: &D) -> Result<Vec<Vec<E>>> {
        let mut e = self.original.clone();
        for t in &self.log {
            transform_entries(dom, &mut e, self.cols, t)?;
        }
        Ok(e)
    }

    pub fn row_is_zero<D: Domain<Elem = E>>(&self, dom: &D, i: usize) -> bool {
        self.entries[i].iter().all(|x| dom.is_zero(x))
    }

    pub fn to_json<D: Domain<Elem = E>>(&self, dom: &D) -> serde_json::Value {
        let entries: Vec<Vec<String>> = self.entries.iter().map(|r| r.iter().map(|x| dom.render(x)).collect()).collect();
        let log: Vec<serde_json::Value> = self.log.iter().map(|t| t.to_json(dom)).collect();
        serde_json::json!({"rows": self.rows, "cols": self.cols, "entries": entries, "log": log})
    }

    pub fn render<D: Domain<Elem = E>>(&self, dom: &D) -> Vec<Vec<String>> {
        self.entries.iter().map(|r| r.iter().map(|x| dom.render(x)).collect()).collect()
    }
}

fn transform_entries<D: Domain>(
    dom: &D,
    e: &mut [Vec<D::Elem>],
    cols: usize,
    t: &ElementaryTransform<D::Elem>,
) -> Result<()> {
    let rows = e.len();
    let check = |i: usize, bound: usize| if i < bound { Ok(()) } else { Err(Error::IndexOutOfRange { index: i, bound }) };
    match t {
        ElementaryTransform::SwapCols(i, j) => {
            check(*i, cols)?;
            check(*j, cols)?;
            for r in e.iter_mut() {
                r.swap(*i, *j);
            }
        }
        ElementaryTransform::SwapRows(i, j) => {
            check(*i, rows)?;
            check(*j, rows)?;
            e.swap(*i, *j);
        }
        ElementaryTransform::ScaleRow { row, factor } => {
            check(*row, rows)?;
            if dom.is_zero(factor) {
                return Err(Error::ZeroFactor);
            }
            for x in e[*row].iter_mut() {
                *x = dom.mul(x, factor);
            }
        }
        ElementaryTransform::AddScaledRow { from, to, factor } => {
            check(*from, rows)?;
            check(*to, rows)?;
            if from >= to {
                return Err(Error::PreconditionFailed(format!("add_scaled_row needs i < j, got {from} -> {to}")));
            }
            if dom.is_zero(factor) {
                return Err(Error::ZeroFactor);
            }
            let src: Vec<D::Elem> = e[*from].iter().map(|x| dom.mul(x, factor)).collect();
            for (x, s) in e[*to].iter_mut().zip(&src) {
                *x = dom.add(x, s);
            }
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    RowsOnly,
    FullPivot,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriangularCertificate<E> {
    pub rank: usize,
    pub mode: Mode,
    /// `col_perm[k]` is the original column now in position `k`.
    pub col_perm: Vec<usize>,
    pub matrix: RingMatrix<E>,
}

impl<E: Clone + PartialEq + fmt::Debug> TriangularCertificate<E> {
    /// Original columns that received pivots.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.col_perm[..self.rank].to_vec()
    }

    /// Re-checks shape, pivots, ψ-minimality, the log and the mode.
    pub fn verify<D: Domain<Elem = E>>(&self, dom: &D) -> Result<()> {
        let m = &self.matrix;
        let fail = |msg: String| Err(Error::InternalInconsistency(msg));
        for k in 0..self.rank {
            let p = m.entry(k, k);
            if dom.is_zero(p) {
                return fail(format!("pivot {k} is zero"));
            }
            let pp = dom.psi(p);
            for n in 0..m.cols() {
                let x = m.entry(k, n);
                if n < k && !dom.is_zero(x) {
                    return fail(format!("entry ({k},{n}) below the diagonal is nonzero"));
                }
                if let Some(v) = dom.psi(x) {
                    if pp.is_some_and(|pp| pp > v) {
                        return fail(format!("ψ of pivot {k} exceeds ψ of column {n}"));
                    }
                }
            }
        }
        for k in self.rank..m.rows() {
            if !m.row_is_zero(dom, k) {
                return fail(format!("row {k} beyond rank is nonzero"));
            }
        }
        if m.replay(dom)? != m.entries {
            return fail("log replay differs".into());
        }
        if self.mode == Mode::RowsOnly && !m.log().iter().all(ElementaryTransform::is_row_operation) {
            return fail("rows_only used a swap".into());
        }
        let mut perm = self.col_perm.clone();
        perm.sort_unstable();
        if perm != (0..m.cols()).collect::<Vec<_>>() {
            return fail("column permutation is not a permutation".into());
        }
        Ok(())
    }
}

/// One elimination step: clear `(t, l)` with pivot row `l`: `row_t ← row_t·b_ll − row_l·a_tl`.
fn clear_entry<D: Domain>(dom: &D, m: &mut RingMatrix<D::Elem>, l: usize, t: usize) -> Result<()> {
    let a = m.entry(t, l).clone();
    if dom.is_zero(&a) {
        return Ok(());
    }
    let b = m.entry(l, l).clone();
    if dom.is_zero(&b) {
        return Err(Error::InternalInconsistency(format!("zero pivot at {l}")));
    }
    if b != dom.one() {
        m.apply_mut(dom, &ElementaryTransform::ScaleRow { row: t, factor: b })?;
    }
    m.apply_mut(dom, &ElementaryTransform::AddScaledRow { from: l, to: t, factor: dom.neg(&a) })
}

/// Rank of a triangular shadow, or `None` when the shadow is not triangular.
fn shadow_rank<D: Domain>(dom: &D, m: &RingMatrix<D::Elem>) -> Option<usize> {
    let mut t = 0;
    while t < m.rows() && t < m.cols() && dom.shadow_nonzero(m.entry(t, t)) {
        if (0..t).any(|n| dom.shadow_nonzero(m.entry(t, n))) {
            return None;
        }
        t += 1;
    }
    for k in t..m.rows() {
        if (0..m.cols()).any(|n| dom.shadow_nonzero(m.entry(k, n))) {
            return None;
        }
    }
    Some(t)
}

/// Full pivoting on rows/columns `>= start`; returns the new rank.
fn pivot_block<D: Domain>(dom: &D, m: &mut RingMatrix<D::Elem>, col_perm: &mut [usize], start: usize) -> Result<usize> {
    let mut t = start;
    while t < m.rows() && t < m.cols() {
        let mut best: Option<(usize, usize, usize)> = None;
        for c in t..m.cols() {
            for r in t..m.rows() {
                if let Some(v) = dom.psi(m.entry(r, c)) {
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, c, r));
                    }
                }
            }
        }
        let Some((_, c, r)) = best else { break };
        if r != t {
            m.apply_mut(dom, &ElementaryTransform::SwapRows(t, r))?;
        }
        if c != t {
            m.apply_mut(dom, &ElementaryTransform::SwapCols(t, c))?;
            col_perm.swap(t, c);
        }
        for j in t + 1..m.rows() {
            clear_entry(dom, m, t, j)?;
        }
        t += 1;
    }
    Ok(t)
}

pub fn triangularize<D: Domain>(dom: &D, m: &RingMatrix<D::Elem>, mode: Mode) -> Result<TriangularCertificate<D::Elem>> {
    let mut work = m.clone();
    let mut col_perm: Vec<usize> = (0..m.cols()).collect();
    let rank = match mode {
        Mode::RowsOnly => {
            let t = shadow_rank(dom, m).ok_or_else(|| Error::ShadowNotTriangular("residue image is not triangular".into()))?;
            if let Some(k) = (t..m.rows()).find(|&k| !m.row_is_zero(dom, k)) {
                return Err(Error::ShadowNotTriangular(format!("row {k} has zero residue image but is nonzero")));
            }
            for r in 1..t {
                for l in 0..r {
                    clear_entry(dom, &mut work, l, r)?;
                }
            }
            t
        }
        Mode::FullPivot => pivot_block(dom, &mut work, &mut col_perm, 0)?,
    };
    Ok(TriangularCertificate { rank, mode, col_perm, matrix: work })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma9Certificate<E> {
    pub d: E,
    pub combo: Vec<E>,
}

fn combine<D: Domain>(dom: &D, rows: &[Vec<D::Elem>], combo: &[D::Elem], cols: usize) -> Vec<D::Elem> {
    let mut acc = vec![dom.zero(); cols];
    for (r, c) in rows.iter().zip(combo) {
        if dom.is_zero(c) {
            continue;
        }
        for (a, x) in acc.iter_mut().zip(r) {
            *a = dom.add(a, &dom.mul(c, x));
        }
    }
    acc
}

/// Given `α = Σ b_i·row_i`, returns `d ≠ 0` and `c` with `T(α)·d = Σ c_i·T(row)_i`,
/// where row operations leave `α` alone and column swaps permute it.
pub fn lemma9_certificate<D: Domain>(
    dom: &D,
    m: &RingMatrix<D::Elem>,
    t: &ElementaryTransform<D::Elem>,
    combo: &[D::Elem],
) -> Result<Lemma9Certificate<D::Elem>> {
    if combo.len() != m.rows() {
        return Err(Error::IndexOutOfRange { index: combo.len(), bound: m.rows() });
    }
    let moved = m.apply(dom, t)?;
    let mut alpha = combine(dom, m.entries(), combo, m.cols());
    let (d, c) = match t {
        ElementaryTransform::SwapRows(i, j) => {
            let mut c = combo.to_vec();
            c.swap(*i, *j);
            (dom.one(), c)
        }
        ElementaryTransform::SwapCols(i, j) => {
            alpha.swap(*i, *j);
            (dom.one(), combo.to_vec())
        }
        ElementaryTransform::ScaleRow { row, factor } => {
            if dom.is_zero(&combo[*row]) {
                (dom.one(), combo.to_vec())
            } else {
                let c = combo
                    .iter()
                    .enumerate()
                    .map(|(k, b)| if k == *row { b.clone() } else { dom.mul(b, factor) })
                    .collect();
                (factor.clone(), c)
            }
        }
        ElementaryTransform::AddScaledRow { from, to, factor } => {
            let mut c = combo.to_vec();
            c[*from] = dom.sub(&combo[*from], &dom.mul(factor, &combo[*to]));
            (dom.one(), c)
        }
    };
    let lhs: Vec<D::Elem> = alpha.iter().map(|x| dom.mul(x, &d)).collect();
    let rhs = combine(dom, moved.entries(), &c, m.cols());
    if lhs != rhs {
        return Err(Error::InternalInconsistency("scaled combination does not reproduce the row".into()));
    }
    Ok(Lemma9Certificate { d, combo: c })
}

/// `m_ij = D_j(r_i)`.
pub fn fox_jacobian(relators: &[Word], rank: u32, base: &QuotientSpec) -> Result<RingMatrix<RingElement>> {
    let group = FreeGroup::new(rank)?;
    let mut rows = Vec::with_capacity(relators.len());
    for r in relators {
        group.check_word(r)?;
        if !base.contains(r) {
            return Err(Error::NotInVerbal);
        }
        rows.push((1..=rank).map(|j| fox::derive_word(r, j)).collect());
    }
    RingMatrix::new(rows, rank as usize)
}

/// Entrywise image in `Z[F/γ₂F]`.
pub fn project_level0(m: &RingMatrix<RingElement>, base: &QuotientSpec) -> Result<RingMatrix<Poly>> {
    m.map(|a| match coset_map(a, base)? {
        QuotElement::Laurent(p) => Ok(p),
        other => Err(Error::UnsupportedQuotient(format!("level 0 image {other} is not commutative"))),
    })
}

/// `(1 + τ)^e` truncated at degree `trunc`.
fn binomial_series(var: u32, e: i64, trunc: usize) -> Poly {
    let mut out = Poly::zero();
    let mut coef = BigInt::one();
    for k in 0..=trunc {
        if coef.is_zero() {
            break;
        }
        out.add_term(if k == 0 { Mono::one() } else { Mono::var(var, k as i64) }, coef.clone());
        coef = coef * BigInt::from(e - k as i64) / BigInt::from(k as i64 + 1);
    }
    out
}

/// Level-1 image: a term `g` with coset `t` goes to
/// `ȳ^t · Π_z (1 + τ_z)^{e_z}`, `e` the `N/[N,N]` image of `t^{-1} g`.
pub fn project_level1_element(a: &RingElement, sys: &mut SchreierSystem, dom: &GradedDomain) -> Result<Poly> {
    let n = dom.rank;
    let mut out = Poly::zero();
    for (w, c) in a.terms() {
        let t = sys.coset(w)?;
        let x = sys.rewrite(&coset_word(&t).inverse().mul(w))?;
        let mut term = Poly::monomial(Mono::from_exponents(&t), c.clone());
        for (z, e) in abelian_image(&x) {
            term = dom.mul(&term, &binomial_series(n + z, e, dom.trunc));
        }
        out = out.add(&term);
    }
    Ok(out)
}

pub fn project_level1(m: &RingMatrix<RingElement>, dom: &GradedDomain) -> Result<(RingMatrix<Poly>, SchreierSystem)> {
    let mut sys = SchreierSystem::new(dom.rank, &QuotientSpec::abelian(), &[])?;
    let out = m.map(|a| project_level1_element(a, &mut sys, dom))?;
    Ok((out, sys))
}

/// Staged pipeline outcome. Columns are reported 1-based.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionReport {
    pub rank: u32,
    pub relators: Vec<String>,
    pub signature: String,
    pub trunc: usize,
    pub t0: usize,
    pub level0_pivots: Vec<u32>,
    pub level0_matrix: Vec<Vec<String>>,
    pub level0_log_len: usize,
    pub lift_consistent: bool,
    pub ts: usize,
    pub pivot_columns: Vec<u32>,
    pub selected: Vec<u32>,
    pub p: usize,
    pub phase_log_lens: [usize; 3],
    pub level1_matrix: Vec<Vec<String>>,
    pub certificate_verified: bool,
}

/// Chooses generators `y_j`, `j ∉ I_s`, through the level-0 and level-1 stages.
pub fn select_generators(relators: &[Word], rank: u32, sig: &FiltrationSignature, trunc: usize) -> Result<SelectionReport> {
    let m = relators.len();
    if m >= rank as usize {
        return Err(Error::TooManyRelators { m, n: rank as usize });
    }
    if !sig.base.is_abelian() {
        return Err(Error::UnsupportedQuotient(format!("base {} has a noncommutative group ring", sig.base.name())));
    }
    let jac = fox_jacobian(relators, rank, &sig.base)?;

    let lvl0 = LaurentDomain::trivial();
    let m0 = project_level0(&jac, &sig.base)?;
    let cert0 = triangularize(&lvl0, &m0, Mode::FullPivot)?;
    cert0.verify(&lvl0)?;
    let t0 = cert0.rank;

    let zf = GroupRingDomain;
    let mut lifted = jac.clone();
    for t in cert0.matrix.log() {
        lifted.apply_mut(&zf, &t.map(lift_laurent))?;
    }
    let lift_consistent = project_level0(&lifted, &sig.base)?.entries() == cert0.matrix.entries();
    if !lift_consistent {
        return Err(Error::InternalInconsistency("lifted level-0 transformations disagree with M0".into()));
    }

    let graded = GradedDomain { rank, trunc };
    let (m1, _) = project_level1(&lifted, &graded)?;
    for (r, row) in m1.entries().iter().enumerate() {
        for (c, x) in row.iter().enumerate() {
            if graded.shadow(x) != *cert0.matrix.entry(r, c) {
                return Err(Error::InternalInconsistency(format!("level-1 shadow differs from M0 at ({r},{c})")));
            }
        }
    }
    let mut work = m1.rebased();
    let mut col_perm = cert0.col_perm.clone();
    for r in 1..t0 {
        for l in 0..r {
            clear_entry(&graded, &mut work, l, r)?;
        }
    }
    let phase1 = work.log().len();
    for r in t0..m {
        for l in 0..t0 {
            clear_entry(&graded, &mut work, l, r)?;
        }
    }
    let phase2 = work.log().len() - phase1;
    let ts = pivot_block(&graded, &mut work, &mut col_perm, t0)?;
    let phase3 = work.log().len() - phase1 - phase2;
    let cert = TriangularCertificate { rank: ts, mode: Mode::FullPivot, col_perm, matrix: work };
    cert.verify(&graded)?;

    let mut pivots: Vec<u32> = cert.pivot_columns().iter().map(|&c| c as u32 + 1).collect();
    pivots.sort_unstable();
    let selected: Vec<u32> = (1..=rank).filter(|j| !pivots.contains(j)).collect();
    let mut level0_pivots: Vec<u32> = cert0.pivot_columns().iter().map(|&c| c as u32 + 1).collect();
    level0_pivots.sort_unstable();
    Ok(SelectionReport {
        rank,
        relators: relators.iter().map(Word::to_string).collect(),
        signature: sig.to_string(),
        trunc,
        t0,
        level0_pivots,
        level0_matrix: cert0.matrix.render(&lvl0),
        level0_log_len: cert0.matrix.log().len(),
        lift_consistent,
        ts,
        p: selected.len(),
        pivot_columns: pivots,
        selected,
        phase_log_lens: [phase1, phase2, phase3],
        level1_matrix: cert.matrix.render(&graded),
        certificate_verified: true,
    })
}

/// Level-0 shadow of the graded projection; used to compare both routes.
pub fn graded_to_level0(m: &RingMatrix<Poly>, dom: &GradedDomain) -> Vec<Vec<Poly>> {
    m.entries().iter().map(|r| r.iter().map(|x| dom.shadow(x)).collect()).collect()
}

/// Counts of nonzero entries per ψ value; handy in reports.
pub fn psi_profile<D: Domain>(dom: &D, m: &RingMatrix<D::Elem>) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for r in m.entries() {
        for x in r {
            if let Some(v) = dom.psi(x) {
                *out.entry(v).or_default() += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ring_element, parse_word, parse_word_list};

    fn w(s: &str) -> Word {
        parse_word(s, None).unwrap()
    }

    fn lp(terms: &[(&[i64], i64)]) -> Poly {
        let mut p = Poly::zero();
        for (e, c) in terms {
            p.add_term(Mono::from_exponents(e), BigInt::from(*c));
        }
        p
    }

    fn sig() -> FiltrationSignature {
        "gamma2;m=[2]".parse().unwrap()
    }

    #[test]
    fn jacobian_rows() {
        let j = fox_jacobian(&[w("[y1,y3]")], 3, &QuotientSpec::abelian()).unwrap();
        assert_eq!(j.entry(0, 0), &parse_ring_element("y3 - [y1,y3]", None).unwrap());
        assert!(j.entry(0, 1).is_zero());
        assert_eq!(j.entry(0, 2), &parse_ring_element("1 - Y3 y1 y3", None).unwrap());
        let e = fox_jacobian(&[], 3, &QuotientSpec::abelian()).unwrap();
        assert_eq!((e.rows(), e.cols()), (0, 3));
        let z = fox_jacobian(&[Word::identity()], 2, &QuotientSpec::abelian()).unwrap();
        assert!(z.row_is_zero(&GroupRingDomain, 0));
        assert_eq!(fox_jacobian(&[w("y1")], 2, &QuotientSpec::abelian()).err(), Some(Error::NotInVerbal));
    }

    #[test]
    fn level0_projection() {
        let j = fox_jacobian(&[w("[y1,y3]")], 3, &QuotientSpec::abelian()).unwrap();
        let p = project_level0(&j, &QuotientSpec::abelian()).unwrap();
        assert_eq!(p.entry(0, 0), &lp(&[(&[0, 0, 1], 1), (&[], -1)]));
        assert!(p.entry(0, 1).is_zero());
        assert_eq!(p.entry(0, 2), &lp(&[(&[], 1), (&[1], -1)]));
    }

    #[test]
    fn level1_shadow_is_level0() {
        let rels = parse_word_list("[y1,y2]^y3; [[y1,y2],y3] y2^-1 [y2,y1] y2", None).unwrap();
        let q = QuotientSpec::abelian();
        let j = fox_jacobian(&rels, 3, &q).unwrap();
        let dom = GradedDomain { rank: 3, trunc: 4 };
        let (m1, _) = project_level1(&j, &dom).unwrap();
        assert_eq!(graded_to_level0(&m1, &dom), project_level0(&j, &q).unwrap().entries());
    }

    #[test]
    fn binomial_inverse() {
        let dom = GradedDomain { rank: 1, trunc: 5 };
        let prod = dom.mul(&binomial_series(2, 3, 5), &binomial_series(2, -3, 5));
        assert_eq!(prod, Poly::one());
    }

    #[test]
    fn transforms_and_replay() {
        let dom = LaurentDomain::augmentation();
        let m = RingMatrix::new(vec![vec![lp(&[(&[1], 1)]), lp(&[(&[], 2)])], vec![lp(&[(&[0, 1], 1)]), Poly::zero()]], 2).unwrap();
        let sw = ElementaryTransform::SwapCols(0, 1);
        assert_eq!(m.apply(&dom, &sw).unwrap().apply(&dom, &sw).unwrap().entries(), m.entries());
        let one = ElementaryTransform::ScaleRow { row: 1, factor: Poly::one() };
        assert_eq!(m.apply(&dom, &one).unwrap().entries(), m.entries());
        let add = ElementaryTransform::AddScaledRow { from: 0, to: 1, factor: lp(&[(&[1], 1), (&[], -1)]) };
        let moved = m.apply(&dom, &add).unwrap();
        assert_eq!(moved.replay(&dom).unwrap(), moved.entries());
        assert_eq!(m.apply(&dom, &ElementaryTransform::ScaleRow { row: 0, factor: Poly::zero() }).err(), Some(Error::ZeroFactor));
        assert!(matches!(m.apply(&dom, &ElementaryTransform::SwapRows(0, 5)), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn full_pivot_single_row() {
        let j = fox_jacobian(&[w("[y1,y3]")], 3, &QuotientSpec::abelian()).unwrap();
        let p = project_level0(&j, &QuotientSpec::abelian()).unwrap();
        let c = triangularize(&LaurentDomain::trivial(), &p, Mode::FullPivot).unwrap();
        assert_eq!(c.rank, 1);
        assert_eq!(c.pivot_columns(), vec![0]);
        assert_eq!(c.matrix.entries(), p.entries());
        c.verify(&LaurentDomain::trivial()).unwrap();
        let z = RingMatrix::new(vec![vec![Poly::zero(); 3]; 2], 3).unwrap();
        assert_eq!(triangularize(&LaurentDomain::trivial(), &z, Mode::FullPivot).unwrap().rank, 0);
    }

    #[test]
    fn diagonal_is_already_triangular() {
        let dom = LaurentDomain::augmentation();
        let u = lp(&[(&[1], 2)]);
        let v = lp(&[(&[1], 1), (&[], -1)]);
        let m = RingMatrix::new(vec![vec![u.clone(), Poly::zero()], vec![Poly::zero(), v.clone()]], 2).unwrap();
        let c = triangularize(&dom, &m, Mode::FullPivot).unwrap();
        assert_eq!(c.matrix.entries(), m.entries());
        assert_eq!(c.rank, 2);
        c.verify(&dom).unwrap();
        assert!(matches!(triangularize(&dom, &m, Mode::RowsOnly), Err(Error::ShadowNotTriangular(_))));
    }

    #[test]
    fn rows_only_clears_below() {
        let dom = LaurentDomain::augmentation();
        let x = lp(&[(&[1], 1), (&[], -1)]);
        let m = RingMatrix::new(
            vec![vec![lp(&[(&[0, 1], 1)]), x.clone(), Poly::one()], vec![x.clone(), lp(&[(&[], 3)]), x.clone()]],
            3,
        )
        .unwrap();
        let c = triangularize(&dom, &m, Mode::RowsOnly).unwrap();
        assert_eq!(c.rank, 2);
        c.verify(&dom).unwrap();
        assert!(c.matrix.log().iter().all(ElementaryTransform::is_row_operation));
    }

    #[test]
    fn lemma9_cases() {
        let dom = LaurentDomain::augmentation();
        let a = lp(&[(&[1], 1)]);
        let m = RingMatrix::new(vec![vec![a.clone(), Poly::one()], vec![Poly::one(), a.clone()]], 2).unwrap();
        let b = vec![lp(&[(&[], 2)]), lp(&[(&[0, 1], 1)])];
        let swap = lemma9_certificate(&dom, &m, &ElementaryTransform::SwapRows(0, 1), &b).unwrap();
        assert_eq!((swap.d.clone(), swap.combo), (Poly::one(), vec![b[1].clone(), b[0].clone()]));
        let scale = ElementaryTransform::ScaleRow { row: 0, factor: a.clone() };
        let zero_b = vec![Poly::zero(), Poly::one()];
        assert_eq!(lemma9_certificate(&dom, &m, &scale, &zero_b).unwrap().d, Poly::one());
        let s = lemma9_certificate(&dom, &m, &scale, &b).unwrap();
        assert_eq!(s.d, a);
        assert_eq!(s.combo[0], b[0]);
        let add = ElementaryTransform::AddScaledRow { from: 0, to: 1, factor: a.clone() };
        assert_eq!(lemma9_certificate(&dom, &m, &add, &b).unwrap().d, Poly::one());
        lemma9_certificate(&dom, &m, &ElementaryTransform::SwapCols(0, 1), &b).unwrap();
    }

    #[test]
    fn selection_examples() {
        let r = select_generators(&[w("[y1,y3]")], 3, &sig(), 6).unwrap();
        assert_eq!((r.t0, r.selected.clone(), r.p), (1, vec![2, 3], 2));
        let r = select_generators(&parse_word_list("[y1,y2];[y3,y4]", None).unwrap(), 4, &sig(), 6).unwrap();
        assert_eq!((r.t0, r.pivot_columns.clone(), r.selected.clone()), (2, vec![1, 3], vec![2, 4]));
        let r = select_generators(&[Word::identity()], 3, &sig(), 6).unwrap();
        assert_eq!((r.ts, r.selected.clone()), (0, vec![1, 2, 3]));
        assert!(matches!(select_generators(&[w("[y1,y2]"), w("[y1,y3]")], 2, &sig(), 6), Err(Error::TooManyRelators { .. })));
    }

    #[test]
    fn graded_valuation() {
        let dom = GradedDomain { rank: 2, trunc: 6 };
        let t = Poly::var(3);
        let u = lp(&[(&[1], 1)]).add(&t);
        let v = dom.mul(&t, &t).add(&dom.mul(&t, &Poly::var(4)));
        assert_eq!(dom.psi(&u), Some(0));
        assert_eq!(dom.psi(&v), Some(2));
        assert_eq!(dom.psi(&dom.mul(&u, &v)), Some(2));
        assert_eq!(dom.render(&u), "y1 + t1");
    }
}
