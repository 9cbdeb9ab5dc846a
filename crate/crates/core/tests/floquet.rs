use proptest::prelude::*;

use lmg_core::floquet::{
    effective_spectrum, fold_quasienergy, max_deviation, monodromy, propagator_between, quasienergies,
    rwa_comparison, zone_distance, QuasiSpectrum,
};
use lmg_core::linalg::eigh;
use lmg_core::model::hamiltonian_at;
use lmg_core::spin::build_ops;
use lmg_core::{IntegratorSettings, ModelParams};

fn spectrum_distance(a: &QuasiSpectrum, b: &QuasiSpectrum) -> f64 {
    let one_way = |x: &QuasiSpectrum, y: &QuasiSpectrum| {
        x.quasienergies
            .iter()
            .map(|e| {
                y.quasienergies
                    .iter()
                    .map(|f| zone_distance(*e, *f, x.omega))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[test]
fn quasienergies_do_not_depend_on_the_period_window() {
    let p = ModelParams::strong_drive(12);
    let ops = build_ops(12).unwrap();
    let s = IntegratorSettings::default();
    let base = quasienergies(&monodromy(&p, &ops, &s).unwrap().matrix, p.omega).unwrap();
    for shift in [0.21, 0.5, 0.83] {
        let t0 = shift * p.period();
        let u = propagator_between(&p, &ops, t0, t0 + p.period(), &s).unwrap();
        let q = quasienergies(&u.matrix, p.omega).unwrap();
        assert!(spectrum_distance(&base, &q) < 1e-9);
    }
}

#[test]
fn quasienergies_are_stable_under_tolerance_halving() {
    let p = ModelParams::strong_drive(30);
    let ops = build_ops(30).unwrap();
    let s = IntegratorSettings::default();
    let a = quasienergies(&monodromy(&p, &ops, &s).unwrap().matrix, p.omega).unwrap();
    let b = quasienergies(&monodromy(&p, &ops, &s.halved()).unwrap().matrix, p.omega).unwrap();
    assert!(spectrum_distance(&a, &b) < 1e-8);
}

#[test]
fn undriven_quasienergies_are_folded_eigenvalues() {
    let p = ModelParams {
        gamma0x: 0.7,
        gammay: 1.6,
        omega: 3.0,
        n_particles: 9,
        ..Default::default()
    };
    let ops = build_ops(9).unwrap();
    let (values, _) = eigh(&hamiltonian_at(&p, &ops, 0.0).unwrap());
    let u = monodromy(&p, &ops, &IntegratorSettings::default()).unwrap();
    let q = quasienergies(&u.matrix, p.omega).unwrap();
    for e in values {
        let folded = fold_quasienergy(e, p.omega);
        let nearest = q
            .quasienergies
            .iter()
            .map(|x| zone_distance(*x, folded, p.omega))
            .fold(f64::INFINITY, f64::min);
        assert!(nearest < 1e-10);
    }
}

#[test]
fn every_mode_has_definite_parity() {
    let p = ModelParams::strong_drive(10);
    let ops = build_ops(10).unwrap();
    let u = monodromy(&p, &ops, &IntegratorSettings::default()).unwrap();
    let q = quasienergies(&u.matrix, p.omega).unwrap();
    for x in &q.parity_expect {
        assert!((x.abs() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn rwa_regression_and_frequency_trend() {
    let ops = build_ops(10).unwrap();
    let s = IntegratorSettings::default();
    let dev = |omega: f64| {
        let p = ModelParams {
            omega,
            ..ModelParams::strong_drive(10)
        };
        max_deviation(&rwa_comparison(&p, &ops, &s).unwrap())
    };
    let d40 = dev(40.0);
    assert!((d40 - 0.030170493538651755).abs() < 1e-8);
    let d80 = dev(80.0);
    let d160 = dev(160.0);
    assert!(d80 < d40 && d160 < d80);
}

#[test]
fn effective_spectrum_folds_eigenvalues() {
    let p = ModelParams {
        gammay: 2.0,
        gamma0x: -1.0,
        n_particles: 6,
        ..Default::default()
    };
    let ops = build_ops(6).unwrap();
    let h = hamiltonian_at(&p, &ops, 0.0).unwrap();
    let q = effective_spectrum(&h, 1.5);
    assert_eq!(q.len(), 7);
    assert!(q.quasienergies.iter().all(|x| *x > -0.75 && *x <= 0.75));
}

proptest! {
    #[test]
    fn folding_lands_in_zone_and_is_idempotent(x in -1e4..1e4f64, omega in 0.1..200.0f64) {
        let f = fold_quasienergy(x, omega);
        prop_assert!(f > -omega / 2.0 && f <= omega / 2.0);
        prop_assert!((fold_quasienergy(f, omega) - f).abs() < 1e-9 * (1.0 + x.abs()));
        let k = ((x - f) / omega).round();
        prop_assert!((x - f - k * omega).abs() < 1e-9 * (1.0 + x.abs()));
    }

    #[test]
    fn zone_distance_is_symmetric_and_bounded(a in -100.0..100.0f64, b in -100.0..100.0f64, omega in 0.5..50.0f64) {
        let d = zone_distance(a, b, omega);
        prop_assert!(d >= 0.0 && d <= omega / 2.0 + 1e-12);
        prop_assert!((d - zone_distance(b, a, omega)).abs() < 1e-12);
    }
}
