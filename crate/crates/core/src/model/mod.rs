//! The driven LMG Hamiltonian
//!
//! ```text
//! H(t) = -h J_z - (γˣ(t) J_x² + γʸ J_y²) / N,   γˣ(t) = γ₀ˣ + γ₁ˣ cos Ωt
//! ```
//!
//! together with the rotating-frame transformation
//! `U_m(t) = exp(-iΘ(t) J_x²) exp(-iθ_m(t) J_z)`, its Fourier components and
//! the closed-form time average for `m = 0`.

mod oscillator;

pub use oscillator::{
    oscillator_stability, symmetric_phase_oscillator, OscillatorParams, StabilityReport,
};

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::bessel::bessel_j0;
use crate::error::{Error, Result};
use crate::linalg::{c, frobenius, CMatrix, C64, I};
use crate::spin::CollectiveSpinOps;

/// Couplings and drive of the model. Energies are in the same (arbitrary)
/// unit as `h`; the usual convention is `h = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Transverse field, negative by convention.
    pub h: f64,
    /// Static part of the xx coupling.
    pub gamma0x: f64,
    /// Drive amplitude of the xx coupling.
    pub gamma1x: f64,
    pub gammay: f64,
    /// Drive angular frequency.
    pub omega: f64,
    /// Resonance index of the rotating frame.
    pub m: u32,
    pub n_particles: usize,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            h: -1.0,
            gamma0x: 0.0,
            gamma1x: 0.0,
            gammay: 0.0,
            omega: 40.0,
            m: 0,
            n_particles: 10,
        }
    }
}

impl ModelParams {
    /// `(h, γ₀ˣ, γ₁ˣ, γʸ, Ω) = (-1, -1, 210, 2, 40)`, `m = 0`: a strongly
    /// driven point whose landscape keeps the undriven pair of global minima
    /// and gains drive-induced local minima.
    pub fn strong_drive(n_particles: usize) -> Self {
        ModelParams {
            h: -1.0,
            gamma0x: -1.0,
            gamma1x: 210.0,
            gammay: 2.0,
            omega: 40.0,
            m: 0,
            n_particles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::invalid(format!("omega must be positive, got {}", self.omega)));
        }
        if self.n_particles == 0 {
            return Err(Error::invalid("number of particles must be at least 1"));
        }
        let finite = [self.h, self.gamma0x, self.gamma1x, self.gammay];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("couplings must be finite"));
        }
        Ok(())
    }

    /// Drive period `T = 2π / Ω`.
    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    /// `Θ(t) = γ₁ˣ sin(Ωt) / (NΩ)`
    pub fn drive_phase(&self, t: f64) -> f64 {
        self.gamma1x * (self.omega * t).sin() / (self.n_particles as f64 * self.omega)
    }

    /// `Θ'(t) = γ₁ˣ cos(Ωt) / N`
    pub fn drive_phase_rate(&self, t: f64) -> f64 {
        self.gamma1x * (self.omega * t).cos() / self.n_particles as f64
    }

    /// `θ_m(t) = mΩt / 2`
    pub fn frame_angle(&self, t: f64) -> f64 {
        self.m as f64 * self.omega * t / 2.0
    }
}

/// `γˣ(t) = γ₀ˣ + γ₁ˣ cos Ωt`
pub fn drive_coupling(params: &ModelParams, t: f64) -> f64 {
    params.gamma0x + params.gamma1x * (params.omega * t).cos()
}

fn check(params: &ModelParams, ops: &CollectiveSpinOps) -> Result<()> {
    params.validate()?;
    ops.check_dim(params.n_particles + 1)
}

/// Lab-frame Hamiltonian `H(t)`.
pub fn hamiltonian_at(params: &ModelParams, ops: &CollectiveSpinOps, t: f64) -> Result<CMatrix> {
    check(params, ops)?;
    let n = params.n_particles as f64;
    let gx = drive_coupling(params, t);
    let jx2 = ops.jx() * ops.jx();
    let jy2 = ops.jy() * ops.jy();
    Ok(ops.jz() * c(-params.h) - (jx2 * c(gx) + jy2 * c(params.gammay)) * c(1.0 / n))
}

/// `U_m(t) = exp(iΘ(t) J_x²) exp(-iθ_m(t) J_z)`, with `|Ψ⟩ = U_m |Ψ_m⟩`.
///
/// The sign of `Θ` is the one for which `i∂_t U_I = H_drive U_I`, so the
/// `γ₁ˣ cos Ωt` part of `H` is removed exactly.
pub fn rotating_unitary(params: &ModelParams, ops: &CollectiveSpinOps, t: f64) -> Result<CMatrix> {
    check(params, ops)?;
    Ok(ops.exp_jx_squared(-params.drive_phase(t)) * ops.exp_jz(params.frame_angle(t)))
}

/// Rotating-frame Hamiltonian `H_m(t) = U_m†(H - i∂_t)U_m`.
///
/// With `U_m = U_I U_z`, the time derivative contributes
/// `Θ' U_z† J_x² U_z - (mΩ/2) J_z`, and since `J_x²` commutes with `U_I`
/// this is `U_m†(H + Θ' J_x²)U_m - (mΩ/2) J_z`: the static Hamiltonian
/// conjugated by `U_m`.
pub fn rotating_hamiltonian_at(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    t: f64,
) -> Result<CMatrix> {
    let u = rotating_unitary(params, ops, t)?;
    let jx2 = ops.jx() * ops.jx();
    let h = hamiltonian_at(params, ops, t)? + jx2 * c(params.drive_phase_rate(t));
    let half_m_omega = params.m as f64 * params.omega / 2.0;
    Ok(u.adjoint() * h * &u - ops.jz() * c(half_m_omega))
}

/// `h_n = (1/T) ∫₀ᵀ H_m(t) e^{-inΩt} dt` by the periodic trapezoid rule.
pub fn fourier_component(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    n: i32,
    samples: usize,
) -> Result<CMatrix> {
    if samples < 64 {
        return Err(Error::invalid(format!(
            "Fourier quadrature needs at least 64 samples, got {samples}"
        )));
    }
    check(params, ops)?;
    let period = params.period();
    let dim = ops.dim();
    let mut acc = CMatrix::zeros(dim, dim);
    for k in 0..samples {
        let t = period * k as f64 / samples as f64;
        let weight = C64::from_polar(1.0 / samples as f64, -(n as f64) * params.omega * t);
        acc += rotating_hamiltonian_at(params, ops, t)? * weight;
    }
    Ok(acc)
}

/// Fourier component with the sample count doubled from 256 until two
/// successive estimates differ by less than `tol` in Frobenius norm.
/// Returns the estimate and the sample count used.
pub fn fourier_component_converged(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    n: i32,
    tol: f64,
) -> Result<(CMatrix, usize)> {
    const MAX_SAMPLES: usize = 1 << 16;
    let mut samples = 256;
    let mut prev = fourier_component(params, ops, n, samples)?;
    while samples < MAX_SAMPLES {
        samples *= 2;
        let next = fourier_component(params, ops, n, samples)?;
        let change = frobenius(&(&next - &prev));
        prev = next;
        if change < tol {
            return Ok((prev, samples));
        }
    }
    Err(Error::IntegrationAccuracy {
        what: "Fourier quadrature change",
        value: f64::NAN,
        limit: tol,
    })
}

/// Closed-form RWA Hamiltonian for `m = 0`:
///
/// ```text
/// h₀ = [ -(h/2) K B₁ + (γʸ/4N) K² B₂ + h.c. ] - (γʸ/2N)(J_z² + J_y²) - (γ₀ˣ/N) J_x²
/// K  = J_z - iJ_y,  B₁ = J₀[(γ₁ˣ/NΩ)(2J_x + 1)],  B₂ = J₀[(4γ₁ˣ/NΩ)(J_x + 1)]
/// ```
pub fn effective_h0_closed_form(params: &ModelParams, ops: &CollectiveSpinOps) -> Result<CMatrix> {
    check(params, ops)?;
    if params.m != 0 {
        return Err(Error::UnsupportedResonance(params.m));
    }
    let n = params.n_particles as f64;
    let scale = params.gamma1x / (n * params.omega);
    let b1 = ops.jx_function(|x| bessel_j0(scale * (2.0 * x + 1.0)));
    let b2 = ops.jx_function(|x| bessel_j0(4.0 * scale * (x + 1.0)));
    let k = ops.jz() - ops.jy() * I;
    let k2 = &k * &k;

    let half = &k * b1 * c(-params.h / 2.0) + k2 * b2 * c(params.gammay / (4.0 * n));
    let jx2 = ops.jx() * ops.jx();
    let jy2 = ops.jy() * ops.jy();
    let jz2 = ops.jz() * ops.jz();
    Ok(&half + half.adjoint()
        - (jz2 + jy2) * c(params.gammay / (2.0 * n))
        - jx2 * c(params.gamma0x / n))
}

/// Detuning `δ⁽ᵐ⁾ = -h - mΩ/2` and the RWA validity ratio
/// `max(|δ|, |γ₀ˣ|, |γʸ|) / Ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detuning {
    pub delta: f64,
    pub rwa_ratio: f64,
}

pub fn resonance_detuning(params: &ModelParams) -> Detuning {
    let delta = -params.h - params.m as f64 * params.omega / 2.0;
    let largest = delta
        .abs()
        .max(params.gamma0x.abs())
        .max(params.gammay.abs());
    Detuning {
        delta,
        rwa_ratio: largest / params.omega,
    }
}
