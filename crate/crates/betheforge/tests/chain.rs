use betheforge::chain::{
    check_commuting, check_rtt, detect_vacuum, spectrum, transfer, weights, Annihilation, ChainSpec, Model,
};
use betheforge::error::BetheError;
use betheforge::operator::Op;
use betheforge::rmatrix::sp4_slot;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;

type Q = BigRational;

fn q(p: i64, d: i64) -> Q {
    Q::new(BigInt::from(p), BigInt::from(d))
}

fn inv_f(x: &Q, z: &Q) -> Q {
    let d = x - z;
    &d / (&d + Q::one())
}

#[test]
fn default_sites_and_json_round_trip() {
    let spec = ChainSpec::<Q>::with_default_sites(Model::Sp4, 3).unwrap();
    assert_eq!(spec.zs, vec![q(0, 1), q(1, 3), q(2, 3)]);
    assert_eq!(spec.dim(), 64);
    let text = serde_json::to_string(&spec.to_file()).unwrap();
    assert_eq!(ChainSpec::<Q>::from_json_str(&text).unwrap(), spec);
    let spec = ChainSpec::<Q>::from_json_str(r#"{"model":"gl3","length":2,"inhomogeneities":["1/2","-1/4"]}"#).unwrap();
    assert_eq!(spec.zs, vec![q(1, 2), q(-1, 4)]);
}

#[test]
fn bad_chains_are_rejected() {
    assert!(ChainSpec::<Q>::new(Model::Gl2, vec![]).is_err());
    assert!(ChainSpec::new(Model::Gl2, vec![q(0, 1), q(1, 1)]).is_err());
    assert!(ChainSpec::new(Model::Sp4, vec![q(1, 2), q(-5, 2)]).is_err());
    assert!(ChainSpec::<Q>::from_json_str(r#"{"model":"gl2","length":3,"inhomogeneities":["0"]}"#).is_err());
    assert!(ChainSpec::<Q>::from_json_str(r#"{"model":"so5","length":1}"#).is_err());
}

#[test]
fn single_site_gl2_transfer_is_scalar() {
    // tr over the auxiliary space of ((x - z) I + P) / (x - z + 1)
    let spec = ChainSpec::new(Model::Gl2, vec![q(1, 5)]).unwrap();
    let x = q(7, 3);
    let d = &x - q(1, 5);
    let expected = (q(2, 1) * &d + Q::one()) / (d + Q::one());
    assert_eq!(transfer(&spec, &x).unwrap(), Op::identity(2).scale(&expected));
}

#[test]
fn gl_vacuum_and_weights() {
    for model in [Model::Gl2, Model::Gl3] {
        let spec = ChainSpec::new(model, vec![q(0, 1), q(1, 2)]).unwrap();
        let vac = detect_vacuum(&spec).unwrap();
        assert_eq!((vac.local, vac.index, vac.convention), (0, 0, Annihilation::IGreaterK));
        let x = q(-7, 4);
        let off = inv_f(&x, &q(0, 1)) * inv_f(&x, &q(1, 2));
        let w = weights(&spec, &vac, &x).unwrap();
        assert!(w[0].is_one());
        for wi in &w[1..] {
            assert_eq!(*wi, off);
        }
    }
}

#[test]
fn sp4_vacuum_and_weights() {
    let zs = vec![q(0, 1), q(1, 2)];
    let spec = ChainSpec::new(Model::Sp4, zs.clone()).unwrap();
    let vac = detect_vacuum(&spec).unwrap();
    assert_eq!(vac.local, sp4_slot(2));
    assert_eq!(vac.convention, Annihilation::ILessK);
    let x = q(5, 7);
    let w = weights(&spec, &vac, &x).unwrap();
    let mut low = Q::one();
    let mut mid = Q::one();
    for z in &zs {
        let h = Q::one() / (&x - z + q(3, 1));
        low *= (Q::one() - h) * inv_f(&x, z);
        mid *= inv_f(&x, z);
    }
    assert!(w[sp4_slot(2)].is_one());
    assert_eq!(w[sp4_slot(1)], mid);
    assert_eq!(w[sp4_slot(-1)], mid);
    assert_eq!(w[sp4_slot(-2)], low);
}

#[test]
fn transfer_eigenvalue_on_vacuum_is_weight_sum() {
    let spec = ChainSpec::new(Model::Sp4, vec![q(0, 1), q(2, 5)]).unwrap();
    let vac = detect_vacuum(&spec).unwrap();
    let x = q(-9, 4);
    let total = weights(&spec, &vac, &x).unwrap().into_iter().fold(q(0, 1), |a, b| a + b);
    let out = transfer(&spec, &x).unwrap().apply(&vac.vector::<Q>(spec.dim()));
    let mut expected = vec![q(0, 1); spec.dim()];
    expected[vac.index] = total;
    assert_eq!(out, expected);
}

#[test]
fn spectrum_capacity_is_enforced() {
    let spec = ChainSpec::<Complex64>::with_default_sites(Model::Sp4, 5).unwrap();
    assert!(matches!(spectrum(&spec, &Complex64::new(0.3, 0.1)), Err(BetheError::Capacity(_))));
    let spec = ChainSpec::<Complex64>::with_default_sites(Model::Gl2, 2).unwrap();
    let total: usize = spectrum(&spec, &Complex64::new(0.3, 0.1)).unwrap().iter().map(|(_, m)| m).sum();
    assert_eq!(total, 4);
}

#[test]
fn coinciding_points_are_rejected() {
    let spec = ChainSpec::<Q>::with_default_sites(Model::Gl2, 1).unwrap();
    assert!(check_commuting(&spec, &q(1, 3), &q(1, 3)).is_err());
}

fn rat() -> impl Strategy<Value = Q> {
    (-12i64..=12, 1i64..=5).prop_map(|(p, d)| q(p, d))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transfer_matrices_commute_exactly(z2 in rat(), x in rat(), y in rat(), which in 0usize..3) {
        let model = [Model::Gl2, Model::Gl3, Model::Sp4][which];
        let Ok(spec) = ChainSpec::new(model, vec![q(0, 1), z2]) else { return Ok(()) };
        let (Ok(c), Ok(r)) = (check_commuting(&spec, &x, &y), check_rtt(&spec, &x, &y)) else {
            return Ok(());
        };
        prop_assert_eq!(c, 0.0);
        prop_assert_eq!(r, 0.0);
    }
}

#[test]
fn single_site_grid_is_the_r_matrix() {
    use betheforge::chain::build_monodromy;
    use betheforge::rmatrix::gl_r;
    let spec = ChainSpec::new(Model::Gl2, vec![q(0, 1)]).unwrap();
    let x = q(3, 1);
    let grid = build_monodromy(&spec, &x).unwrap();
    let r = gl_r(2, &x, &q(0, 1)).unwrap();
    assert_eq!(grid.full, r);
    for i in 0..2 {
        for k in 0..2 {
            assert_eq!(*grid.entry(i, k), r.block(2 * i, 2 * k, 2));
        }
    }
    let vac = detect_vacuum(&spec).unwrap();
    assert_eq!(weights(&spec, &vac, &x).unwrap(), vec![Q::one(), q(3, 4)]);

    let spec = ChainSpec::new(Model::Sp4, vec![q(0, 1), q(1, 2)]).unwrap();
    let grid = build_monodromy(&spec, &q(4, 1)).unwrap();
    assert_eq!((grid.d, grid.dim, grid.full.dim()), (4, 16, 64));
}

#[test]
fn fixed_point_identities() {
    let gl2 = ChainSpec::new(Model::Gl2, vec![q(0, 1), q(1, 2)]).unwrap();
    assert_eq!(check_rtt(&gl2, &q(3, 1), &q(5, 1)).unwrap(), 0.0);
    assert_eq!(check_commuting(&gl2, &q(3, 1), &q(5, 1)).unwrap(), 0.0);
    let sp4 = ChainSpec::new(Model::Sp4, vec![q(0, 1)]).unwrap();
    assert_eq!(check_commuting(&sp4, &q(4, 1), &q(7, 1)).unwrap(), 0.0);
    // x - y = -3 puts R(x, y) itself on the pole of h
    assert!(matches!(check_rtt(&sp4, &q(4, 1), &q(7, 1)), Err(BetheError::Pole(_))));
    assert_eq!(check_rtt(&sp4, &q(4, 1), &q(13, 2)).unwrap(), 0.0);
}

#[test]
fn sp4_vacuum_stable_across_lengths() {
    let slots: Vec<usize> = (1..=3)
        .map(|l| detect_vacuum(&ChainSpec::<Q>::with_default_sites(Model::Sp4, l).unwrap()).unwrap().local)
        .collect();
    assert_eq!(slots, vec![3, 3, 3]);
}

#[test]
fn spectrum_sizes_and_trace() {
    let x = Complex64::new(0.37, 0.21);
    let gl2 = ChainSpec::<Complex64>::with_default_sites(Model::Gl2, 2).unwrap();
    let spec = spectrum(&gl2, &x).unwrap();
    let sum: Complex64 = spec.iter().map(|(e, m)| e * *m as f64).sum();
    let h = transfer(&gl2, &x).unwrap();
    let trace: Complex64 = (0..4).map(|i| h.get(i, i)).sum();
    assert!((sum - trace).norm() < 1e-10);
    let sp4 = ChainSpec::<Complex64>::with_default_sites(Model::Sp4, 2).unwrap();
    let count: usize = spectrum(&sp4, &x).unwrap().iter().map(|(_, m)| m).sum();
    assert_eq!(count, 16);
    let sp4 = ChainSpec::<Complex64>::with_default_sites(Model::Sp4, 4).unwrap();
    let count: usize = spectrum(&sp4, &x).unwrap().iter().map(|(_, m)| m).sum();
    assert_eq!(count, 256);
}
