use proptest::prelude::*;
use toeplitz::exact::{gcd, q, Monomial, MultiPoly, MultiRat, Rational, VarId};

fn vars() -> Vec<VarId> {
    vec![VarId::x(0), VarId::x(1), VarId::y(0), VarId::a(2)]
}

fn poly_strategy() -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((-5i64..6, 0u32..3, 0u32..3, 0u32..2, 0u32..2), 0..5).prop_map(|ts| {
        let v = vars();
        MultiPoly::from_terms(ts.into_iter().map(|(c, e0, e1, e2, e3)| {
            let mut m = Monomial::one();
            for (var, e) in v.iter().zip([e0, e1, e2, e3]) {
                m = m.mul(&Monomial::var(*var, e)).unwrap();
            }
            (m, q(c, 1))
        }))
    })
}

fn nonzero_poly() -> impl Strategy<Value = MultiPoly> {
    poly_strategy().prop_filter("nonzero", |p| !p.is_zero())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn poly_ring_axioms(a in poly_strategy(), b in poly_strategy(), c in poly_strategy()) {
        prop_assert_eq!(a.add(&b), b.add(&a));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
    }

    #[test]
    fn exact_division_roundtrip(a in poly_strategy(), b in nonzero_poly()) {
        let p = a.mul(&b);
        prop_assert_eq!(p.exact_div(&b), Some(a));
    }

    #[test]
    fn gcd_recovers_common_factor(f in nonzero_poly(), g in nonzero_poly(), h in nonzero_poly()) {
        let d = gcd(&f.mul(&g), &f.mul(&h));
        prop_assert!(f.mul(&g).exact_div(&d).is_some());
        prop_assert!(f.mul(&h).exact_div(&d).is_some());
        prop_assert!(d.exact_div(&f.primitive()).is_some() || f.is_constant());
    }

    #[test]
    fn rat_field_laws(a in nonzero_poly(), b in nonzero_poly(), c in nonzero_poly()) {
        let r = MultiRat::new(a.clone(), b.clone()).unwrap();
        let s = MultiRat::new(c.clone(), a.clone()).unwrap();
        prop_assert_eq!(r.mul(&r.inv().unwrap()), MultiRat::one());
        prop_assert_eq!(r.add(&s).sub(&s), r.clone());
        prop_assert_eq!(r.mul(&s), MultiRat::new(c, b).unwrap());
    }

    #[test]
    fn canonical_form_is_structural(a in nonzero_poly(), b in nonzero_poly(), f in nonzero_poly()) {
        let r1 = MultiRat::new(a.clone(), b.clone()).unwrap();
        let r2 = MultiRat::new(a.mul(&f), b.mul(&f)).unwrap();
        prop_assert_eq!(r1.num(), r2.num());
        prop_assert_eq!(r1.den(), r2.den());
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in poly_strategy(), b in poly_strategy(), xs in prop::collection::vec(-7i64..8, 4)) {
        let v = vars();
        let val = |w: VarId| v.iter().position(|u| *u == w).map(|i| q(xs[i], 1));
        let ea = a.eval_rational(&val).unwrap();
        let eb = b.eval_rational(&val).unwrap();
        prop_assert_eq!(a.mul(&b).eval_rational(&val).unwrap(), &ea * &eb);
        prop_assert_eq!(a.add(&b).eval_rational(&val).unwrap(), ea + eb);
    }
}

#[test]
fn eps_squares_to_one() {
    let e = MultiPoly::var(VarId::eps());
    assert!(e.mul(&e).is_one());
    let r = MultiRat::new(MultiPoly::one(), MultiPoly::int(2).add(&e)).unwrap();
    assert!(!r.den().contains_var(VarId::eps()));
    assert_eq!(r.mul(&MultiRat::from_poly(MultiPoly::int(2).add(&e))), MultiRat::one());
}

#[test]
fn jets_truncate() {
    let d = VarId::jet(3 * 64 + 3, false);
    let p = MultiPoly::var(d);
    assert!(p.pow(3).is_zero());
    assert!(!p.pow(2).is_zero());
    let r = MultiRat::new(MultiPoly::one(), MultiPoly::one().add(&p)).unwrap();
    assert!(r.is_poly());
    assert_eq!(r.num(), &MultiPoly::one().sub(&p).add(&p.pow(2)));
}

#[test]
fn division_by_zero_is_reported() {
    assert!(MultiRat::new(MultiPoly::one(), MultiPoly::zero()).is_err());
    assert!(MultiRat::zero().inv().is_err());
    let x = MultiRat::var(VarId::x(0));
    assert!(x.evaluate(&|_| Some(Rational::from_integer(0.into()))).is_ok());
    let r = x.inv().unwrap();
    assert!(r.evaluate(&|_| Some(q(0, 1))).is_err());
}

#[test]
fn derivative_quotient_rule() {
    let x = MultiRat::var(VarId::x(0));
    let r = x.inv().unwrap();
    let d = r.partial_derivative(VarId::x(0));
    assert_eq!(d, x.mul(&x).inv().unwrap().neg());
}
