//! Symmetric-phase bosonisation: to quadratic order the driven model is a
//! parametrically driven oscillator `q̈ + (ε² + d cos Ωt) q = 0`, whose
//! stability follows from the monodromy (Hill) matrix over one period.

use serde::{Deserialize, Serialize};

use super::ModelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// `ε² = h²(1 + γʸ/h)(1 + γ₀ˣ/h)`; negative when the undriven symmetric
    /// phase is statically unstable.
    pub epsilon_sq: f64,
    /// Coefficient `h γ₁ˣ (1 + γʸ/h)` of `cos Ωt` in the stiffness.
    pub drive_coeff: f64,
    pub omega: f64,
    /// Constant `N h / 2`.
    pub ground_shift: f64,
}

impl OscillatorParams {
    /// `ε` when `ε² ≥ 0`.
    pub fn epsilon(&self) -> Option<f64> {
        (self.epsilon_sq >= 0.0).then(|| self.epsilon_sq.sqrt())
    }
}

pub fn symmetric_phase_oscillator(params: &ModelParams) -> OscillatorParams {
    // h²(1 + a/h)(1 + b/h) = (h + a)(h + b) without dividing by h
    OscillatorParams {
        epsilon_sq: (params.h + params.gammay) * (params.h + params.gamma0x),
        drive_coeff: params.gamma1x * (params.h + params.gammay),
        omega: params.omega,
        ground_shift: params.n_particles as f64 * params.h / 2.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub monodromy_trace: f64,
    pub determinant: f64,
}

/// Floquet stability of the oscillator from its one-period fundamental
/// matrix, integrated with `steps` classical RK4 steps. The motion is bounded
/// iff `|tr M| ≤ 2` (up to a 1e-9 allowance for integration error).
pub fn oscillator_stability(osc: &OscillatorParams, steps: usize) -> Result<StabilityReport> {
    if steps < 1000 {
        return Err(Error::invalid(format!(
            "oscillator integration needs at least 1000 steps, got {steps}"
        )));
    }
    if !(osc.omega > 0.0) {
        return Err(Error::invalid("omega must be positive"));
    }
    let m = monodromy(osc, steps);
    let trace = m[0][0] + m[1][1];
    let determinant = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    Ok(StabilityReport {
        stable: trace.abs() <= 2.0 + 1e-9,
        monodromy_trace: trace,
        determinant,
    })
}

/// Columns are the solutions started from `(q, q̇) = (1, 0)` and `(0, 1)`.
fn monodromy(osc: &OscillatorParams, steps: usize) -> [[f64; 2]; 2] {
    let period = std::f64::consts::TAU / osc.omega;
    let dt = period / steps as f64;
    let stiffness = |t: f64| osc.epsilon_sq + osc.drive_coeff * (osc.omega * t).cos();
    let deriv = |t: f64, y: [f64; 4]| {
        let k = stiffness(t);
        [y[1], -k * y[0], y[3], -k * y[2]]
    };
    let mut y = [1.0, 0.0, 0.0, 1.0];
    for i in 0..steps {
        let t = i as f64 * dt;
        let k1 = deriv(t, y);
        let k2 = deriv(t + dt / 2.0, axpy(y, dt / 2.0, k1));
        let k3 = deriv(t + dt / 2.0, axpy(y, dt / 2.0, k2));
        let k4 = deriv(t + dt, axpy(y, dt, k3));
        for j in 0..4 {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    [[y[0], y[2]], [y[1], y[3]]]
}

fn axpy(y: [f64; 4], a: f64, x: [f64; 4]) -> [f64; 4] {
    [y[0] + a * x[0], y[1] + a * x[1], y[2] + a * x[2], y[3] + a * x[3]]
}
