use betheforge::error::BetheError;
use betheforge::scalars::{
    f, f_left, f_right, g, h, k, relative_gap, summation_identity_residuals, RootSet, Scalar,
};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

type Q = BigRational;

fn q(p: i64, d: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(d))
}

// independent product of (a - b + 1)/(a - b), written without the library helpers
fn oracle_product(pairs: &[(Q, Q)]) -> Q {
    pairs.iter().fold(Q::one(), |acc, (a, b)| {
        let d = a - b;
        acc * (&d + Q::one()) / d
    })
}

fn distinct(vals: Vec<(i64, i64)>) -> Vec<Q> {
    let mut out: Vec<Q> = Vec::new();
    for (p, d) in vals {
        let x = q(p, d);
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

#[test]
fn scalar_functions_at_small_integers() {
    assert_eq!(f(&q(2, 1), &q(0, 1)).unwrap(), q(3, 2));
    assert_eq!(g(&q(2, 1), &q(0, 1)).unwrap(), q(1, 2));
    assert_eq!(h(&q(0, 1), &q(1, 1)).unwrap(), q(1, 2));
    assert_eq!(k(&q(3, 1), &q(0, 1)).unwrap(), q(1, 2));
}

#[test]
fn poles_are_reported() {
    let u = q(1, 3);
    assert!(matches!(f(&u, &u), Err(BetheError::Pole(_))));
    assert!(matches!(h(&q(-3, 1), &q(0, 1)), Err(BetheError::Pole(_))));
    assert!(matches!(k(&q(1, 1), &q(0, 1)), Err(BetheError::Pole(_))));
    assert!(matches!(f_left(std::slice::from_ref(&u), &u), Err(BetheError::Pole(_))));
    let z = Complex64::new(0.5, 0.0);
    assert!(matches!(g(&z, &Complex64::new(0.5, 1e-14)), Err(BetheError::Pole(_))));
}

#[test]
fn empty_products_are_one() {
    assert!(f_left::<Q>(&[], &q(1, 2)).unwrap().is_one());
    assert!(f_right::<Q>(&q(1, 2), &[]).unwrap().is_one());
}

#[test]
fn root_set_ordering() {
    let set = RootSet::new(vec![q(1, 1), q(2, 1), q(3, 1)]).unwrap();
    assert_eq!(&*set.without(1), &[q(1, 1), q(3, 1)]);
    assert_eq!(&*set.with(q(5, 1)), &[q(1, 1), q(2, 1), q(3, 1), q(5, 1)]);
    assert!(RootSet::new(vec![q(1, 2), q(2, 4)]).is_err());
}

#[test]
fn literal_parsing() {
    assert_eq!(Q::parse_literal("-5/4").unwrap(), q(-5, 4));
    assert_eq!(Q::parse_literal("\u{2212}1.25").unwrap(), q(-5, 4));
    assert!(Q::parse_literal("1/0").is_err());
    let z = Complex64::parse_literal("0.5-2i").unwrap();
    assert_eq!(z, Complex64::new(0.5, -2.0));
}

#[test]
fn relative_gap_uses_unit_floor() {
    let (_, rel) = relative_gap(&q(1, 100), &q(0, 1));
    assert_eq!(rel, 0.01);
    let (_, rel) = relative_gap(&q(200, 1), &q(100, 1));
    assert_eq!(rel, 0.5);
}

proptest! {
    #[test]
    fn products_match_oracle(
        us in prop::collection::vec((-12i64..=12, 1i64..=5), 0..6),
        (xp, xd) in (-12i64..=12, 1i64..=5),
    ) {
        let x = q(xp, xd);
        let us: Vec<Q> = distinct(us).into_iter().filter(|u| *u != x).collect();
        let left: Vec<(Q, Q)> = us.iter().map(|u| (u.clone(), x.clone())).collect();
        let right: Vec<(Q, Q)> = us.iter().map(|u| (x.clone(), u.clone())).collect();
        prop_assert_eq!(f_left(&us, &x).unwrap(), oracle_product(&left));
        prop_assert_eq!(f_right(&x, &us).unwrap(), oracle_product(&right));
    }

    #[test]
    fn summation_identities_hold_exactly(
        us in prop::collection::vec((-12i64..=12, 1i64..=5), 0..6),
        (xp, xd) in (-12i64..=12, 1i64..=5),
        (yp, yd) in (-12i64..=12, 1i64..=5),
    ) {
        let (x, y) = (q(xp, xd), q(yp, yd));
        let us: Vec<Q> = distinct(us).into_iter().filter(|u| *u != x && *u != y).collect();
        prop_assume!(x != y);
        let (r1, r2) = summation_identity_residuals(&us, &x, &y).unwrap();
        prop_assert_eq!(r1, 0.0);
        prop_assert_eq!(r2, 0.0);
    }

    #[test]
    fn f_and_g_are_related(a in -50i64..50, b in 1i64..7) {
        // f(x, y) = 1 + g(x, y)
        let x = q(a, b);
        let y = q(1, 3);
        prop_assume!(x != y);
        prop_assert_eq!(f(&x, &y).unwrap(), Q::one() + g(&x, &y).unwrap());
        prop_assert!(!g(&x, &y).unwrap().is_zero());
    }
}

#[test]
fn known_values() {
    let n = |v: i64| q(v, 1);
    assert_eq!(f(&n(3), &n(1)).unwrap(), q(3, 2));
    assert!(matches!(f(&n(1), &n(1)), Err(BetheError::Pole(_))));
    assert_eq!(f(&n(5), &n(4)).unwrap(), n(2));
    assert!(f(&n(4), &n(5)).unwrap().is_zero());
    assert_eq!(g(&n(2), &n(1)).unwrap(), n(1));
    assert_eq!(h(&n(4), &n(1)).unwrap(), q(1, 6));
    assert_eq!(k(&n(4), &n(1)).unwrap(), q(1, 2));
    assert!(f_left::<Q>(&[], &n(7)).unwrap().is_one());
    assert_eq!(f_left(&[n(3), n(5)], &n(1)).unwrap(), q(15, 8));
    assert_eq!(f_right(&n(1), &[n(3), n(5)]).unwrap(), q(3, 8));
}

// both sides of the two summation identities, written out with the oracle product
fn summation_sides(us: &[Q], x: &Q, y: &Q) -> [(Q, Q); 2] {
    let g = |a: &Q, b: &Q| Q::one() / (a - b);
    let mut l1 = Q::zero();
    let mut l2 = Q::zero();
    for (j, uj) in us.iter().enumerate() {
        let rest: Vec<&Q> = us.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, u)| u).collect();
        let gg = g(x, uj) * g(uj, y);
        l1 += &gg * oracle_product(&rest.iter().map(|u| (uj.clone(), (*u).clone())).collect::<Vec<_>>());
        l2 += &gg * oracle_product(&rest.iter().map(|u| ((*u).clone(), uj.clone())).collect::<Vec<_>>());
    }
    let right = |a: &Q| oracle_product(&us.iter().map(|u| (a.clone(), u.clone())).collect::<Vec<_>>());
    let left = |a: &Q| oracle_product(&us.iter().map(|u| (u.clone(), a.clone())).collect::<Vec<_>>());
    [(l1, g(x, y) * (right(x) - right(y))), (l2, g(x, y) * (left(y) - left(x)))]
}

#[test]
fn summation_identities_on_fixed_sets() {
    let n = |v: i64| q(v, 1);
    for (us, x, y) in [(vec![n(1), n(2)], n(5), n(7)), (vec![], n(5), n(7)), (vec![n(1), n(2), n(3), n(4)], n(-1), n(10))] {
        for (lhs, rhs) in summation_sides(&us, &x, &y) {
            assert_eq!(lhs, rhs);
        }
        assert_eq!(summation_identity_residuals(&us, &x, &y).unwrap(), (0.0, 0.0));
    }
}
