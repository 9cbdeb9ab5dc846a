//! Finite-N evolution of spin states in the lab, rotating, stroboscopic and
//! effective pictures, and projection of the spin expectations onto the
//! `(Q, P)` disk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{monodromy, propagate_columns};
use crate::integrator::IntegratorSettings;
use crate::landscape::qel;
use crate::linalg::{eigh, expectation, spectral_apply, CMatrix, CVector, C64};
use crate::model::{effective_h0_closed_form, rotating_unitary, ModelParams};
use crate::spin::{bloch_projection, coherent_state, qp_to_angles, CollectiveSpinOps, StateVector};

/// Largest norm drift accepted from an integration.
pub const MAX_NORM_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Lab,
    Rotating,
    Stroboscopic,
    Effective,
}

impl Frame {
    pub fn as_str(&self) -> &'static str {
        match self {
            Frame::Lab => "lab",
            Frame::Rotating => "rotating",
            Frame::Stroboscopic => "stroboscopic",
            Frame::Effective => "effective",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lab" => Ok(Frame::Lab),
            "rotating" => Ok(Frame::Rotating),
            "stroboscopic" => Ok(Frame::Stroboscopic),
            "effective" => Ok(Frame::Effective),
            other => Err(Error::invalid(format!(
                "unknown frame {other:?} (expected lab, rotating, stroboscopic or effective)"
            ))),
        }
    }
}

/// Spin expectations over time, each divided by `j = N/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frame: Frame,
    pub n_particles: usize,
    pub times: Vec<f64>,
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    pub jz: Vec<f64>,
    /// Set by [`project_trajectory`]; `None` marks a sample with a
    /// vanishing expectation vector.
    pub qp_path: Option<Vec<Option<[f64; 2]>>>,
    /// `2|⟨J⟩|/N` per sample, set alongside `qp_path`.
    pub polarization: Option<Vec<f64>>,
    /// `|‖ψ‖ - 1|`
    pub norm_drift: Vec<f64>,
    /// `|⟨Π⟩(t) - ⟨Π⟩(0)|`
    pub parity_drift: Vec<f64>,
    /// `|⟨h₀⟩(t) - ⟨h₀⟩(0)|` for effective evolution.
    pub generator_drift: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_parity_drift(&self) -> f64 {
        self.parity_drift.iter().copied().fold(0.0, f64::max)
    }

    fn from_states(frame: Frame, ops: &CollectiveSpinOps, times: &[f64], states: &[CVector]) -> Self {
        let j = ops.j();
        let parity0 = states.first().map(|s| ops.parity_expectation(s)).unwrap_or(0.0);
        let mut t = Trajectory {
            frame,
            n_particles: ops.n_particles(),
            times: times.to_vec(),
            jx: Vec::with_capacity(states.len()),
            jy: Vec::with_capacity(states.len()),
            jz: Vec::with_capacity(states.len()),
            qp_path: None,
            polarization: None,
            norm_drift: Vec::with_capacity(states.len()),
            parity_drift: Vec::with_capacity(states.len()),
            generator_drift: None,
        };
        for s in states {
            let [x, y, z] = ops.expectations(s);
            t.jx.push(x / j);
            t.jy.push(y / j);
            t.jz.push(z / j);
            t.norm_drift.push((s.norm() - 1.0).abs());
            t.parity_drift.push((ops.parity_expectation(s) - parity0).abs());
        }
        t
    }
}

/// Lab-frame states at the requested times.
#[derive(Debug, Clone)]
pub struct LabEvolution {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("at least one output time is required"));
    }
    if !(times[0] >= 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("output times must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("output times must be strictly increasing"));
    }
    Ok(())
}

fn check_state(ops: &CollectiveSpinOps, psi: &StateVector) -> Result<()> {
    ops.check_dim(psi.dim())
}

/// `|Ψ, t⟩` from `i d|Ψ⟩/dt = H(t)|Ψ⟩` at each of `times`.
pub fn evolve_states(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    psi0: &StateVector,
    times: &[f64],
    settings: &IntegratorSettings,
) -> Result<LabEvolution> {
    check_times(times)?;
    check_state(ops, psi0)?;
    let dim = ops.dim();
    let y0 = CMatrix::from_column_slice(dim, 1, psi0.amplitudes().as_slice());
    let mut states = Vec::with_capacity(times.len());
    let mut worst: Option<(f64, f64)> = None;
    propagate_columns(params, ops, y0, 0.0, times, settings, |_, t, y| {
        let v = CVector::from_column_slice(y.as_slice());
        let drift = (v.norm() - 1.0).abs();
        if drift > MAX_NORM_DRIFT && worst.is_none() {
            worst = Some((t, drift));
        }
        states.push(StateVector::from_propagated(v));
    })?;
    if let Some((_, drift)) = worst {
        return Err(Error::IntegrationAccuracy {
            what: "norm drift",
            value: drift,
            limit: MAX_NORM_DRIFT,
        });
    }
    Ok(LabEvolution {
        times: times.to_vec(),
        states,
    })
}

/// Lab-frame trajectory.
pub fn evolve(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    psi0: &StateVector,
    times: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let lab = evolve_states(params, ops, psi0, times, settings)?;
    Ok(lab_trajectory(ops, &lab))
}

pub fn lab_trajectory(ops: &CollectiveSpinOps, lab: &LabEvolution) -> Trajectory {
    let states: Vec<CVector> = lab.states.iter().map(|s| s.amplitudes().clone()).collect();
    Trajectory::from_states(Frame::Lab, ops, &lab.times, &states)
}

/// `|Ψ_m, t⟩ = U_m†(t)|Ψ, t⟩`.
pub fn rotating_states(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    lab: &LabEvolution,
) -> Result<Vec<CVector>> {
    lab.times
        .iter()
        .zip(&lab.states)
        .map(|(&t, s)| Ok(rotating_unitary(params, ops, t)?.adjoint() * s.amplitudes()))
        .collect()
}

/// Rotating-frame trajectory from lab-frame states.
pub fn rotating_expectations(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    lab: &LabEvolution,
) -> Result<Trajectory> {
    let states = rotating_states(params, ops, lab)?;
    Ok(Trajectory::from_states(Frame::Rotating, ops, &lab.times, &states))
}

/// `⟨Ψ|U_m J_α U_m†|Ψ⟩` for a lab-frame state, divided by `j`: the
/// rotating-frame expectations computed from rotated operators instead of
/// rotated states.
pub fn rotating_operator_expectations(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    t: f64,
    lab_state: &StateVector,
) -> Result<[f64; 3]> {
    check_state(ops, lab_state)?;
    let u = rotating_unitary(params, ops, t)?;
    let ud = u.adjoint();
    let psi = lab_state.amplitudes();
    let j = ops.j();
    let mut out = [0.0; 3];
    for (o, op) in out.iter_mut().zip([ops.jx(), ops.jy(), ops.jz()]) {
        *o = expectation(&(&u * op * &ud), psi).re / j;
    }
    Ok(out)
}

/// States at `t_r = rT`, `r = 0..=r_max`, from powers of the one-period
/// propagator.
pub fn stroboscopic_states(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    psi0: &StateVector,
    r_max: usize,
    settings: &IntegratorSettings,
) -> Result<LabEvolution> {
    if r_max < 1 {
        return Err(Error::invalid("stroboscopic evolution needs at least one period"));
    }
    check_state(ops, psi0)?;
    let u = monodromy(params, ops, settings)?;
    let period = params.period();
    let mut psi = psi0.amplitudes().clone();
    let mut states = vec![StateVector::from_propagated(psi.clone())];
    for r in 1..=r_max {
        let bound = r as f64 * u.unitarity_defect;
        if bound > MAX_NORM_DRIFT {
            return Err(Error::IntegrationAccuracy {
                what: "accumulated unitarity defect after r periods",
                value: r as f64,
                limit: MAX_NORM_DRIFT,
            });
        }
        psi = &u.matrix * psi;
        states.push(StateVector::from_propagated(psi.clone()));
    }
    Ok(LabEvolution {
        times: (0..=r_max).map(|r| r as f64 * period).collect(),
        states,
    })
}

/// Stroboscopic trajectory at `t_r = 2πr/Ω`, `r = 0..=r_max`.
pub fn stroboscopic(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    psi0: &StateVector,
    r_max: usize,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    let lab = stroboscopic_states(params, ops, psi0, r_max, settings)?;
    let states: Vec<CVector> = lab.states.iter().map(|s| s.amplitudes().clone()).collect();
    Ok(Trajectory::from_states(Frame::Stroboscopic, ops, &lab.times, &states))
}

/// `exp(-i h₀ t)|Ψ, 0⟩` at each time: the rotating-frame state under the
/// time-independent `m = 0` effective Hamiltonian.
pub fn effective_states(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    psi0: &StateVector,
    times: &[f64],
) -> Result<(CMatrix, Vec<CVector>)> {
    check_times(times)?;
    check_state(ops, psi0)?;
    let h0 = effective_h0_closed_form(params, ops)?;
    let (values, vectors) = eigh(&h0);
    let coeffs = vectors.adjoint() * psi0.amplitudes();
    let states = times
        .iter()
        .map(|&t| {
            let phased = CVector::from_iterator(
                coeffs.len(),
                coeffs
                    .iter()
                    .zip(&values)
                    .map(|(c, &e)| c * C64::from_polar(1.0, -e * t)),
            );
            &vectors * phased
        })
        .collect();
    Ok((h0, states))
}

/// Trajectory of the effective evolution, with `⟨h₀⟩` conservation recorded.
pub fn effective_evolution(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Trajectory> {
    let (h0, states) = effective_states(params, ops, psi0, times)?;
    let mut traj = Trajectory::from_states(Frame::Effective, ops, times, &states);
    let e0 = expectation(&h0, psi0.amplitudes()).re;
    traj.generator_drift = Some(
        states
            .iter()
            .map(|s| (expectation(&h0, s).re - e0).abs())
            .collect(),
    );
    Ok(traj)
}

/// Lab-frame approximation `U_m(t) exp(-i h₀ t)|Ψ, 0⟩`.
pub fn effective_lab_states(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    psi0: &StateVector,
    times: &[f64],
) -> Result<Vec<CVector>> {
    let (_, states) = effective_states(params, ops, psi0, times)?;
    times
        .iter()
        .zip(states)
        .map(|(&t, s)| Ok(rotating_unitary(params, ops, t)? * s))
        .collect()
}

/// Attach the `(Q, P)` projection of every sample.
pub fn project_trajectory(mut traj: Trajectory, n_particles: usize) -> Result<Trajectory> {
    if n_particles == 0 {
        return Err(Error::invalid("number of particles must be at least 1"));
    }
    let j = n_particles as f64 / 2.0;
    let mut path = Vec::with_capacity(traj.len());
    let mut pol = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        match bloch_projection(traj.jx[k] * j, traj.jy[k] * j, traj.jz[k] * j, n_particles) {
            Ok(proj) => {
                path.push(Some([proj.point.q, proj.point.p]));
                pol.push(proj.polarization);
            }
            Err(Error::DegenerateDirection) => {
                path.push(None);
                pol.push(0.0);
            }
            Err(e) => return Err(e),
        }
    }
    traj.qp_path = Some(path);
    traj.polarization = Some(pol);
    Ok(traj)
}

/// Coherent state centred at `(Q, P)` inside the disk.
pub fn coherent_state_at(n_particles: usize, q: f64, p: f64) -> Result<StateVector> {
    let b = qp_to_angles(q, p)?;
    coherent_state(n_particles, b.theta, b.phi)
}

/// How far a projected trajectory strays from a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Confinement {
    pub origin: [f64; 2],
    /// Largest Euclidean `(Q, P)` distance from `origin`.
    pub max_excursion: f64,
    /// Largest and mean landscape energy along the path.
    pub max_energy: f64,
    pub mean_energy: f64,
    pub min_energy: f64,
    pub min_polarization: f64,
    pub flagged_samples: usize,
}

impl Confinement {
    pub fn energy_band(&self) -> f64 {
        self.max_energy - self.min_energy
    }
}

/// Confinement statistics of a projected trajectory around `origin`.
pub fn confinement(params: &ModelParams, traj: &Trajectory, origin: [f64; 2]) -> Result<Confinement> {
    let path = traj
        .qp_path
        .as_ref()
        .ok_or_else(|| Error::invalid("trajectory has no (Q, P) projection"))?;
    let mut stats = Confinement {
        origin,
        max_excursion: 0.0,
        max_energy: f64::NEG_INFINITY,
        mean_energy: 0.0,
        min_energy: f64::INFINITY,
        min_polarization: traj
            .polarization
            .as_ref()
            .map(|p| p.iter().copied().fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NAN),
        flagged_samples: 0,
    };
    let mut used = 0usize;
    for pt in path {
        match pt {
            Some([q, p]) => {
                let e = qel(params, *q, *p)?;
                stats.max_excursion = stats.max_excursion.max((q - origin[0]).hypot(p - origin[1]));
                stats.max_energy = stats.max_energy.max(e);
                stats.min_energy = stats.min_energy.min(e);
                stats.mean_energy += e;
                used += 1;
            }
            None => stats.flagged_samples += 1,
        }
    }
    if used == 0 {
        return Err(Error::DegenerateDirection);
    }
    stats.mean_energy /= used as f64;
    Ok(stats)
}

/// `exp(-i h t)` applied through an eigendecomposition; exposed for callers
/// that reuse one decomposition across many times.
pub fn spectral_propagator(values: &[f64], vectors: &CMatrix, t: f64) -> CMatrix {
    spectral_apply(values, vectors, |e| C64::from_polar(1.0, -e * t))
}
