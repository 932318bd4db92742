use std::collections::BTreeMap;

use num_bigint::BigInt;
use proptest::prelude::*;

use freikalk::filtration::{class_in_subgroup, eval_product, leading_form, locate_level, LevelIndex};
use freikalk::fox::derive;
use freikalk::freiheit::{freiheit_check, Bounds, Outcome};
use freikalk::jacobian::{triangularize, Domain, LaurentDomain, Mode, RingMatrix};
use freikalk::laurent::{Mono, Poly};
use freikalk::magnus::{self, Monomial, TruncSeries};
use freikalk::oracle::{sample_rn_element, samples, SampleSpec};
use freikalk::parse::parse_word;
use freikalk::ring::{QuotientSpec, RingElement};
use freikalk::schreier::SchreierSystem;
use freikalk::subgroup;
use freikalk::words::Syllable;
use freikalk::Word;

fn word(rank: u32, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec((1..=rank, prop_oneof![Just(1i64), Just(-1i64), Just(2i64), Just(-2i64)]), 0..=max_len)
        .prop_map(|s| Word::from_syllables(s.into_iter().map(|(g, e)| Syllable::new(g, e))))
}

fn element(rank: u32) -> impl Strategy<Value = RingElement> {
    prop::collection::vec((word(rank, 5), -3i64..=3), 1..=4).prop_map(|terms| {
        let mut u = RingElement::zero();
        for (w, c) in terms {
            u.add_term(w, BigInt::from(c));
        }
        u
    })
}

fn gamma2(rank: u32) -> impl Strategy<Value = Word> {
    (word(rank, 4), word(rank, 4), word(rank, 3)).prop_map(|(a, b, f)| Word::commutator(&a, &b).conjugate(&f))
}

fn laurent() -> impl Strategy<Value = Poly> {
    prop::collection::vec((-2i64..=2, -2i64..=2, -3i64..=3), 0..=3).prop_map(|terms| {
        let mut p = Poly::zero();
        for (a, b, c) in terms {
            p.add_term(Mono::from_exponents(&[a, b]), BigInt::from(c));
        }
        p
    })
}

fn series_product(a: &BTreeMap<Monomial, BigInt>, b: &BTreeMap<Monomial, BigInt>) -> BTreeMap<Monomial, BigInt> {
    let mut out: BTreeMap<Monomial, BigInt> = BTreeMap::new();
    for (ma, ca) in a {
        for (mb, cb) in b {
            let mut m = ma.clone();
            m.extend(mb);
            *out.entry(m).or_default() += ca * cb;
        }
    }
    out.retain(|_, c| *c != BigInt::from(0));
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn words_form_a_group(a in word(4, 12), b in word(4, 12), c in word(4, 12)) {
        prop_assert!(a.mul(&a.inverse()).is_identity());
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b).inverse(), b.inverse().mul(&a.inverse()));
    }

    #[test]
    fn word_text_roundtrips(a in word(4, 16)) {
        prop_assert_eq!(parse_word(&a.to_string(), None).unwrap(), a);
    }

    #[test]
    fn derivative_product_rule(u in element(3), v in element(3), k in 1u32..=3) {
        let lhs = derive(&u.mul(&v), k);
        let rhs = derive(&u, k).mul(&v).add(&derive(&v, k).scale(&u.augmentation()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn fundamental_identity(u in element(3)) {
        let mut sum = RingElement::zero();
        for j in 1..=3 {
            sum.add_assign(&RingElement::minus_one(&Word::gen(j)).mul(&derive(&u, j)));
        }
        prop_assert_eq!(sum, u.sub(&RingElement::from_int(u.augmentation())));
    }

    #[test]
    fn magnus_expansion_is_multiplicative(a in word(3, 10), b in word(3, 10)) {
        let d = 5;
        prop_assert_eq!(magnus::expand_word(&a.mul(&b), d), magnus::expand_word(&a, d).mul(&magnus::expand_word(&b, d)));
        prop_assert_eq!(magnus::expand_word(&a, d).mul(&magnus::expand_word(&a.inverse(), d)), TruncSeries::one(d));
    }

    #[test]
    fn commutator_class_is_superadditive(a in word(3, 6), b in word(3, 6)) {
        let d = 7;
        let c = Word::commutator(&a, &b);
        prop_assume!(!c.is_identity());
        let (ca, cb) = (magnus::lcs_class(&a, d).unwrap(), magnus::lcs_class(&b, d).unwrap());
        let cc = magnus::lcs_class(&c, d).unwrap();
        if let (Some(x), Some(y)) = (ca.finite(), cb.finite()) {
            if x + y < d {
                prop_assert!(cc.at_least(x + y) != Some(false), "[{}, {}] has class {}", a, b, cc);
            }
        }
    }

    #[test]
    fn leading_forms_multiply(u in element(2), v in element(2)) {
        let d = 6;
        let (Some(pu), Some(pv)) = (magnus::ideal_valuation(&u, d).finite(), magnus::ideal_valuation(&v, d).finite()) else {
            return Ok(());
        };
        prop_assume!(pu + pv <= d);
        let (du, fu) = leading_form(&u, d).unwrap();
        let (dv, fv) = leading_form(&v, d).unwrap();
        let (duv, fuv) = leading_form(&u.mul(&v), d).unwrap();
        prop_assert_eq!(duv, du + dv);
        prop_assert_eq!(fuv, series_product(&fu, &fv));
    }

    #[test]
    fn level_of_commutator_doubles(a in gamma2(3), b in gamma2(3)) {
        let sig = "gamma2;m=[2]".parse().unwrap();
        let d = 8;
        let c = Word::commutator(&a, &b);
        prop_assume!(!c.is_identity());
        let la = locate_level(&a, 3, &sig, d).unwrap();
        let lb = locate_level(&b, 3, &sig, d).unwrap();
        let lc = locate_level(&c, 3, &sig, d).unwrap();
        prop_assert!(lc >= (la + lb).min(d - 1), "levels {} {} -> {}", la, lb, lc);
    }

    #[test]
    fn augmentation_order_is_a_valuation(a in laurent(), b in laurent()) {
        let dom = LaurentDomain::augmentation();
        prop_assert_eq!(dom.psi(&dom.zero()), None);
        match (dom.psi(&a), dom.psi(&b)) {
            (Some(x), Some(y)) => {
                prop_assert_eq!(dom.psi(&dom.mul(&a, &b)), Some(x + y));
                if let Some(s) = dom.psi(&dom.add(&a, &b)) {
                    prop_assert!(s >= x.min(y));
                }
            }
            _ => prop_assert!(dom.is_zero(&dom.mul(&a, &b))),
        }
    }

    #[test]
    fn full_pivot_certifies(entries in prop::collection::vec(laurent(), 12), rows in 1usize..=3) {
        let dom = LaurentDomain::augmentation();
        let grid: Vec<Vec<Poly>> = entries.chunks(4).take(rows).map(|r| r.to_vec()).collect();
        let m = RingMatrix::new(grid, 4).unwrap();
        let cert = triangularize(&dom, &m, Mode::FullPivot).unwrap();
        cert.verify(&dom).unwrap();
        prop_assert_eq!(cert.matrix.replay(&dom).unwrap(), cert.matrix.entries().to_vec());
        prop_assert_eq!(cert.matrix.original(), m.entries());
    }

    #[test]
    fn schreier_rewrite_spells_back(v in gamma2(3)) {
        let mut sys = SchreierSystem::new(3, &QuotientSpec::abelian(), &[1, 2]).unwrap();
        let x = sys.rewrite(&v).unwrap();
        prop_assert_eq!(sys.spell(&x), v.clone());
        for j in 1..=3 {
            prop_assert!(sys.lemma7_decompose(&v, j).unwrap().holds());
        }
    }

    #[test]
    fn subgroup_express_roundtrips(x in word(2, 8)) {
        let basis = [parse_word("y1 y2", None).unwrap(), parse_word("y2^3", None).unwrap()];
        let v = x.substitute(&basis);
        prop_assert_eq!(subgroup::express(&v, &basis).unwrap(), x);
    }

    #[test]
    fn conjugates_of_h_relators_are_not_free(h in word(2, 3), f in word(3, 3)) {
        let c = Word::commutator(&Word::gen(1), &Word::gen(2));
        let r = h.mul(&c).mul(&h.inverse()).conjugate(&f);
        let sig = "gamma2;m=[2]".parse().unwrap();
        let reach = f.exponent_sums(3).iter().map(|e| e.unsigned_abs() as usize).sum::<usize>();
        let bounds = Bounds { samples: 20, conj: reach.max(1), ..Bounds::default() };
        let v = freiheit_check(&r, 3, &sig, &[LevelIndex::new(1, 2)], &bounds, 1, 6).unwrap();
        prop_assert_eq!(v.outcome, Outcome::NotFree);
        let cert = v.witness().unwrap();
        cert.verify(&[r.clone()], 3, &[1, 2], 6).unwrap();
        prop_assert!(class_in_subgroup(&cert.witness, &[1, 2], 6).unwrap().at_least(2) == Some(false));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn verdict_survives_cyclic_conjugation(r in gamma2(3), cut in 0usize..8) {
        let (reduced, _) = r.cyclic_reduce();
        prop_assume!(!reduced.is_identity());
        let letters: Vec<_> = reduced.letters().collect();
        let cut = cut % letters.len();
        let rotated = Word::from_letters(letters[cut..].iter().chain(&letters[..cut]).copied());
        let sig = "gamma2;m=[2]".parse().unwrap();
        let bounds = Bounds { samples: 50, ..Bounds::default() };
        let a = freiheit_check(&r, 3, &sig, &[], &bounds, 3, 6).unwrap();
        let b = freiheit_check(&rotated, 3, &sig, &[], &bounds, 3, 6).unwrap();
        prop_assert_eq!(a.outcome, b.outcome, "{} vs {}", r, rotated);
    }

    #[test]
    fn oracle_samples_are_reproducible(seed in any::<u64>()) {
        let spec = SampleSpec {
            relators: vec![parse_word("[y1,y3]", None).unwrap()],
            rank: 3,
            conj_len: 3,
            factors: 2,
            count: 30,
            seed,
            level: LevelIndex::new(1, 2),
            keep: vec![2, 3],
        };
        let all = samples(&spec).unwrap();
        prop_assert_eq!(all.len(), 30);
        for (i, s) in all.iter().enumerate() {
            prop_assert_eq!(&sample_rn_element(&spec, i).unwrap().word, &s.word);
            let product = eval_product(&s.factors, &spec.relators).mul(&s.residual);
            prop_assert_eq!(&product, &s.word);
        }
        prop_assert_eq!(samples(&spec).unwrap().iter().map(|s| s.word.clone()).collect::<Vec<_>>(),
            all.iter().map(|s| s.word.clone()).collect::<Vec<_>>());
    }

    #[test]
    fn cli_json_is_stable(w in gamma2(3)) {
        prop_assume!(!w.is_identity());
        let text = w.to_string();
        let args = ["freikalk", "weight", "--rank", "3", "--word", text.as_str(), "--format", "json"];
        let a = freikalk::cli::run(args);
        let b = freikalk::cli::run(args);
        prop_assert_eq!(a.code, 0);
        prop_assert_eq!(&a.stdout, &b.stdout);
        let v: serde_json::Value = serde_json::from_str(&a.stdout).unwrap();
        prop_assert_eq!(&v["command"], "weight");
    }
}
