use lmg_core::dynamics::{
    coherent_state_at, effective_evolution, effective_lab_states, effective_states, evolve, evolve_states,
    lab_trajectory, project_trajectory, rotating_expectations, stroboscopic_states,
};
use lmg_core::landscape::{find_minima, STATIONARY_TOL};
use lmg_core::linalg::CVector;
use lmg_core::spin::{build_ops, coherent_state};
use lmg_core::{IntegratorSettings, ModelParams, StateVector};

fn overlap(a: &CVector, b: &CVector) -> f64 {
    a.dotc(b).norm()
}

#[test]
fn initial_moments_follow_the_bloch_vector() {
    let n = 40;
    let ops = build_ops(n).unwrap();
    let p = ModelParams::strong_drive(n);
    for (theta, phi) in [(0.3, 0.0), (1.2, 0.4), (2.5, -2.0)] {
        let psi = coherent_state(n, theta, phi).unwrap();
        let tr = evolve(&p, &ops, &psi, &[0.0], &IntegratorSettings::default()).unwrap();
        let want = [
            theta.sin() * f64::cos(phi),
            theta.sin() * f64::sin(phi),
            -theta.cos(),
        ];
        assert!((tr.jx[0] - want[0]).abs() < 1e-12);
        assert!((tr.jy[0] - want[1]).abs() < 1e-12);
        assert!((tr.jz[0] - want[2]).abs() < 1e-12);
    }
}

#[test]
fn coherent_state_projects_back_to_its_centre() {
    let n = 30;
    let ops = build_ops(n).unwrap();
    let p = ModelParams::strong_drive(n);
    for (q, pp) in [(0.0, 0.5), (-0.97, 0.0), (0.3, -0.2)] {
        let psi = coherent_state_at(n, q, pp).unwrap();
        let tr = evolve(&p, &ops, &psi, &[0.0], &IntegratorSettings::default()).unwrap();
        let tr = project_trajectory(tr, n).unwrap();
        let [pq, ppp] = tr.qp_path.unwrap()[0].unwrap();
        assert!((pq - q).abs() < 1e-9 && (ppp - pp).abs() < 1e-9);
    }
}

#[test]
fn stroboscopic_states_match_direct_evolution() {
    let n = 16;
    let ops = build_ops(n).unwrap();
    let p = ModelParams::strong_drive(n);
    let s = IntegratorSettings::default();
    let psi = coherent_state_at(n, 0.2, 0.3).unwrap();
    let strob = stroboscopic_states(&p, &ops, &psi, 5, &s).unwrap();
    let times: Vec<f64> = (0..=5).map(|r| r as f64 * p.period()).collect();
    let direct = evolve_states(&p, &ops, &psi, &times, &s).unwrap();
    for (a, b) in strob.states.iter().zip(&direct.states) {
        assert!((overlap(a.amplitudes(), b.amplitudes()) - 1.0).abs() < 1e-9);
    }
}

/// `1 - |⟨ψ_lab|ψ_eff⟩|` at each time, with `γ₁ˣ/Ω` held fixed.
fn rwa_infidelity(omega: f64, times_in_periods: &[f64]) -> Vec<f64> {
    let n = 20;
    let ops = build_ops(n).unwrap();
    let p = ModelParams {
        omega,
        gamma1x: 210.0 * omega / 40.0,
        ..ModelParams::strong_drive(n)
    };
    let times: Vec<f64> = times_in_periods.iter().map(|r| r * p.period()).collect();
    let psi = coherent_state_at(n, 0.0, 0.5).unwrap();
    let lab = evolve_states(&p, &ops, &psi, &times, &IntegratorSettings::default()).unwrap();
    let eff = effective_lab_states(&p, &ops, &psi, &times).unwrap();
    lab.states
        .iter()
        .zip(&eff)
        .map(|(a, b)| 1.0 - overlap(a.amplitudes(), b))
        .collect()
}

#[test]
fn effective_evolution_tracks_stroboscopic_states() {
    let slow = rwa_infidelity(40.0, &[10.0]);
    let fast = rwa_infidelity(80.0, &[20.0]);
    assert!(slow[0] < 0.05, "{slow:?}");
    assert!(fast[0] < slow[0], "{fast:?} vs {slow:?}");
}

#[test]
fn effective_frame_reproduces_micromotion_within_a_period() {
    let fractions = [0.13, 0.25, 0.5, 0.71, 0.9];
    let slow = rwa_infidelity(40.0, &fractions);
    let fast = rwa_infidelity(80.0, &fractions);
    let worst = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    assert!(worst(&slow) < 0.05, "{slow:?}");
    assert!(worst(&fast) < worst(&slow));
}

#[test]
fn rotating_frame_removes_micromotion_around_b() {
    let n = 60;
    let ops = build_ops(n).unwrap();
    let p = ModelParams::strong_drive(n);
    let report = find_minima(&p, 201, STATIONARY_TOL).unwrap();
    let b = report
        .minima
        .iter()
        .min_by(|x, y| (x.q - 0.97).abs().total_cmp(&(y.q - 0.97).abs()))
        .unwrap();
    let psi = coherent_state_at(n, b.q, b.p).unwrap();
    let times: Vec<f64> = (0..=64).map(|k| k as f64 * p.period() / 64.0).collect();
    let lab = evolve_states(&p, &ops, &psi, &times, &IntegratorSettings::default()).unwrap();
    let spread = |tr: &lmg_core::dynamics::Trajectory| {
        let dev = |v: &[f64]| v.iter().map(|x| (x - v[0]).abs()).fold(0.0, f64::max);
        dev(&tr.jx).max(dev(&tr.jy)).max(dev(&tr.jz))
    };
    let lab_spread = spread(&lab_trajectory(&ops, &lab));
    let rot_spread = spread(&rotating_expectations(&p, &ops, &lab).unwrap());
    assert!(rot_spread < lab_spread, "rotating {rot_spread} vs lab {lab_spread}");
}

#[test]
fn effective_evolution_conserves_h0_and_parity() {
    let n = 50;
    let ops = build_ops(n).unwrap();
    let p = ModelParams::strong_drive(n);
    let psi = coherent_state_at(n, 0.4, 0.1).unwrap();
    let times: Vec<f64> = (0..=40).map(|r| r as f64 * p.period()).collect();
    let tr = effective_evolution(&p, &ops, &psi, &times).unwrap();
    let drift = tr.generator_drift.as_ref().unwrap().iter().copied().fold(0.0, f64::max);
    assert!(drift < 1e-9);
    assert!(tr.max_norm_drift() < 1e-12);
    assert!(tr.max_parity_drift() < 1e-12);
    let (_, states) = effective_states(&p, &ops, &psi, &times).unwrap();
    assert_eq!(states.len(), times.len());
}

#[test]
fn mismatched_state_is_rejected() {
    let ops = build_ops(6).unwrap();
    let p = ModelParams::strong_drive(6);
    let psi: StateVector = coherent_state(5, 0.3, 0.0).unwrap();
    assert!(evolve(&p, &ops, &psi, &[0.0, 0.1], &IntegratorSettings::default()).is_err());
}
