use proptest::prelude::*;
use std::collections::HashMap;
use toeplitz::exact::{q, MultiRat, Rational, VarId};
use toeplitz::gamma::{build_gamma, RecursionSpec};
use toeplitz::lax::{Boundary, LatticeWindow};
use toeplitz::series::{substitute_series, LSeries, SeriesVar};
use toeplitz::verify::iterate;

fn rat() -> impl Strategy<Value = Rational> {
    (-6i64..7, 1i64..5).prop_map(|(n, d)| q(n, d))
}

fn c(r: &Rational) -> MultiRat {
    MultiRat::constant(r.clone())
}

fn series(val: i64, cs: &[Rational], trunc: i64) -> LSeries {
    LSeries::new(SeriesVar::T, val, cs.iter().map(c).collect(), trunc)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn substitution_matches_direct_evaluation(
        k in prop::collection::vec(rat(), 6),
        h0 in prop::collection::vec(rat(), 3),
        h1 in prop::collection::vec(rat(), 3),
    ) {
        let (a, b) = (VarId::a(0), VarId::a(1));
        let (va, vb) = (MultiRat::var(a), MultiRat::var(b));
        let coeff = c(&k[0]).add(&va.mul(&vb).scale(&k[1])).add(&va.mul(&va).scale(&k[2]));
        let coeff2 = c(&k[3]).add(&vb.mul(&vb).mul(&vb).scale(&k[4])).add(&va.scale(&k[5]));
        let f = LSeries::new(SeriesVar::T, 0, vec![coeff.clone(), coeff2.clone()], 5);
        let mut map = HashMap::new();
        map.insert(a, LSeries::constant(SeriesVar::T, va.clone()).add(&series(1, &h0, 5)));
        map.insert(b, LSeries::constant(SeriesVar::T, vb.clone()).add(&series(1, &h1, 5)));
        let got = substitute_series(&f, &map, 5).unwrap();
        let one = LSeries::constant(SeriesVar::T, MultiRat::one());
        let ev = |r: &MultiRat| r.eval_in(&one, &mut |v| map.get(&v).cloned().unwrap_or_else(|| LSeries::constant(SeriesVar::T, MultiRat::var(v)))).unwrap();
        let want = ev(&coeff).add(&ev(&coeff2).shift(1)).truncate(5);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn reversion_inverts_composition(c2 in rat(), c3 in rat(), lead in rat().prop_filter("nonzero", |r| *r != q(0, 1))) {
        let f = series(1, &[lead, c2, c3], 6);
        let g = f.reverse().unwrap();
        let id = f.compose(&g).unwrap();
        prop_assert_eq!(id, LSeries::gen(SeriesVar::Lambda).truncate(6));
    }

    #[test]
    fn inversion_roundtrip(cs in prop::collection::vec(rat(), 4), val in -2i64..3) {
        prop_assume!(cs[0] != q(0, 1));
        let f = series(val, &cs, val + 5);
        let g = f.invert().unwrap();
        let one = f.mul(&g);
        prop_assert_eq!(one.coeff(0), Some(MultiRat::one()));
        for p in 1..one.trunc() {
            prop_assert_eq!(one.coeff(p), Some(MultiRat::zero()));
        }
    }

    #[test]
    fn forward_iteration_solves_the_recursion(
        x0 in rat(), x1 in rat(), u in rat().prop_filter("nonzero", |r| *r != q(0, 1)), n in 3i64..9,
    ) {
        let spec = RecursionSpec::rational(1, &[(1, u)], true, n).unwrap();
        prop_assume!(x0.clone() * &x0 != q(1, 1) && x1.clone() * &x1 != q(1, 1));
        if let Ok((xs, _)) = iterate(&spec, n, vec![x0, x1], None, 3) {
            let w = LatticeWindow::new(n, xs, None, Boundary::Zero);
            for k in n + 1..=n + 3 {
                prop_assert_eq!(build_gamma(&spec, &w, k).gamma, q(0, 1));
            }
        }
    }
}
