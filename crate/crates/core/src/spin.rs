//! Collective spin algebra in the symmetric (Dicke) subspace `j = N/2`,
//! spin coherent states and the maps between the Bloch sphere and the
//! `(Q, P)` disk.
//!
//! All matrices live in the `J_z` eigenbasis ordered by ascending
//! magnetic quantum number, so basis index `k` carries `m = k - j`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, eigh, spectral_apply, CMatrix, CVector, C64};

/// Angular-momentum matrices for `N` spin-1/2 particles with `j = N/2`.
#[derive(Debug, Clone)]
pub struct CollectiveSpinOps {
    n_particles: usize,
    jx: CMatrix,
    jy: CMatrix,
    jz: CMatrix,
    parity: CMatrix,
    // eigenvectors of jx; column k belongs to eigenvalue k - j
    jx_vectors: CMatrix,
}

/// Build `J_x`, `J_y`, `J_z` and the parity operator for `n_particles` spins.
pub fn build_ops(n_particles: usize) -> Result<CollectiveSpinOps> {
    if n_particles == 0 {
        return Err(Error::invalid("number of particles must be at least 1"));
    }
    let dim = n_particles + 1;
    let j = n_particles as f64 / 2.0;
    let mut raise = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim - 1 {
        let m = k as f64 - j;
        raise[(k + 1, k)] = (j * (j + 1.0) - m * (m + 1.0)).sqrt();
    }
    let lower = raise.transpose();

    let jx = (&raise + &lower).map(|x| c(0.5 * x));
    // (J+ - J-) / 2i
    let jy = (&raise - &lower).map(|x| C64::new(0.0, -0.5 * x));
    let jz = CMatrix::from_fn(dim, dim, |r, col| {
        if r == col {
            c(r as f64 - j)
        } else {
            c(0.0)
        }
    });
    let parity = CMatrix::from_fn(dim, dim, |r, col| {
        if r == col {
            c(parity_sign(r))
        } else {
            c(0.0)
        }
    });
    let (_, jx_vectors) = eigh(&jx);

    Ok(CollectiveSpinOps {
        n_particles,
        jx,
        jy,
        jz,
        parity,
        jx_vectors,
    })
}

/// Eigenvalue of `exp(iπ(J_z + j))` on basis slot `k`.
fn parity_sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl CollectiveSpinOps {
    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.n_particles + 1
    }

    /// Total spin `j = N/2`.
    pub fn j(&self) -> f64 {
        self.n_particles as f64 / 2.0
    }

    pub fn jx(&self) -> &CMatrix {
        &self.jx
    }

    pub fn jy(&self) -> &CMatrix {
        &self.jy
    }

    pub fn jz(&self) -> &CMatrix {
        &self.jz
    }

    pub fn parity(&self) -> &CMatrix {
        &self.parity
    }

    /// Diagonal of the parity matrix (`±1`).
    pub fn parity_diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(parity_sign).collect()
    }

    /// `f(J_x)` through the exact spectrum `{-j, ..., j}`.
    pub fn jx_function<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        self.jx_complex_function(|x| c(f(x)))
    }

    pub fn jx_complex_function<F: Fn(f64) -> C64>(&self, f: F) -> CMatrix {
        let j = self.j();
        let values: Vec<f64> = (0..self.dim()).map(|k| k as f64 - j).collect();
        spectral_apply(&values, &self.jx_vectors, f)
    }

    /// `exp(-i angle J_x²)`
    pub fn exp_jx_squared(&self, angle: f64) -> CMatrix {
        self.jx_complex_function(|m| C64::from_polar(1.0, -angle * m * m))
    }

    /// `exp(-i angle J_z)`, diagonal.
    pub fn exp_jz(&self, angle: f64) -> CMatrix {
        let j = self.j();
        CMatrix::from_fn(self.dim(), self.dim(), |r, col| {
            if r == col {
                C64::from_polar(1.0, -angle * (r as f64 - j))
            } else {
                c(0.0)
            }
        })
    }

    /// Real symmetric `J_x²`, `J_y²` and the diagonal of `J_z`.
    pub fn real_quadratics(&self) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
        let jx2 = (&self.jx * &self.jx).map(|z| z.re);
        let jy2 = (&self.jy * &self.jy).map(|z| z.re);
        let jz = (0..self.dim()).map(|k| self.jz[(k, k)].re).collect();
        (jx2, jy2, jz)
    }

    /// `(⟨J_x⟩, ⟨J_y⟩, ⟨J_z⟩)` in `psi` (not normalised by `j`).
    pub fn expectations(&self, psi: &CVector) -> [f64; 3] {
        [
            psi.dotc(&(&self.jx * psi)).re,
            psi.dotc(&(&self.jy * psi)).re,
            psi.dotc(&(&self.jz * psi)).re,
        ]
    }

    /// `⟨Π⟩` using the diagonal parity representation.
    pub fn parity_expectation(&self, psi: &CVector) -> f64 {
        psi.iter()
            .enumerate()
            .map(|(k, a)| parity_sign(k) * a.norm_sqr())
            .sum()
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(Error::invalid(format!(
                "dimension mismatch: operators are {}x{}, got {dim}",
                self.dim(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Normalised state in the `J_z` eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(CVector);

impl StateVector {
    /// Wrap amplitudes, requiring unit norm within 1e-9.
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("state norm {norm} differs from 1")));
        }
        Ok(StateVector(amplitudes))
    }

    /// Scale to unit norm.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("cannot normalise a zero or non-finite vector"));
        }
        Ok(StateVector(amplitudes.unscale(norm)))
    }

    /// Propagated states may carry integration drift in their norm.
    pub(crate) fn from_propagated(amplitudes: CVector) -> Self {
        StateVector(amplitudes)
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_inner(self) -> CVector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `|⟨self|other⟩|`
    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.0.dotc(&other.0).norm()
    }
}

/// Spin coherent state pointing along polar angle `theta` (measured from the
/// south pole `|j, -j⟩`) and azimuth `phi`.
///
/// Amplitudes are `sqrt(C(N,k)) cos(θ/2)^(N-k) sin(θ/2)^k e^(-ikφ)` on
/// `m = k - j`, which is the normal-ordered exponential `exp(τJ₊)|j,-j⟩`
/// with `τ = e^(-iφ) tan(θ/2)` written without the pole at `θ = π`.
pub fn coherent_state(n_particles: usize, theta: f64, phi: f64) -> Result<StateVector> {
    if n_particles == 0 {
        return Err(Error::invalid("number of particles must be at least 1"));
    }
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::invalid(format!("theta = {theta} outside [0, π]")));
    }
    let (s, co) = (theta / 2.0).sin_cos();
    let n = n_particles;
    let mut amps = CVector::zeros(n + 1);
    let mut sqrt_binom = 1.0;
    for k in 0..=n {
        if k > 0 {
            sqrt_binom *= ((n - k + 1) as f64 / k as f64).sqrt();
        }
        let magnitude = sqrt_binom * co.powi((n - k) as i32) * s.powi(k as i32);
        amps[k] = C64::from_polar(magnitude, -(k as f64) * phi);
    }
    // exact in exact arithmetic; renormalise the rounding
    StateVector::normalized(amps)
}

/// A point of the `(Q, P)` disk together with its Bloch-sphere angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochPoint {
    pub q: f64,
    pub p: f64,
    pub theta: f64,
    pub phi: f64,
    pub alpha_sq: f64,
}

impl BlochPoint {
    /// The whole rim `Q² + P² = 1` collapses onto the north pole.
    pub fn on_boundary(&self) -> bool {
        self.alpha_sq >= 1.0
    }

    /// Scaled spin components `(X1, X2, X3) = ⟨J⟩ / N` on the sphere of radius 1/2.
    pub fn scaled_spin(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [0.5 * st * cp, 0.5 * st * sp, -0.5 * ct]
    }
}

/// `(Q, P) → (θ, φ)` with `θ = π - arccos(2|α|² - 1)` and `φ = atan2(P, Q)`.
pub fn qp_to_angles(q: f64, p: f64) -> Result<BlochPoint> {
    let alpha_sq = q * q + p * p;
    if !(alpha_sq <= 1.0 + 1e-12) {
        return Err(Error::OutOfDisk { q, p });
    }
    let alpha_sq = alpha_sq.min(1.0);
    if alpha_sq >= 1.0 {
        return Ok(BlochPoint {
            q,
            p,
            theta: PI,
            phi: 0.0,
            alpha_sq: 1.0,
        });
    }
    let theta = PI - (2.0 * alpha_sq - 1.0).clamp(-1.0, 1.0).acos();
    let phi = p.atan2(q);
    Ok(BlochPoint {
        q,
        p,
        theta,
        phi,
        alpha_sq,
    })
}

/// `(θ, φ) → (Q, P)`: `Q = sin(θ/2) cos φ`, `P = sin(θ/2) sin φ`.
pub fn angles_to_qp(theta: f64, phi: f64) -> BlochPoint {
    let radius = (theta / 2.0).sin();
    let (sp, cp) = phi.sin_cos();
    let mut phi_wrapped = phi.sin().atan2(phi.cos());
    if phi_wrapped <= -PI {
        phi_wrapped = PI;
    }
    BlochPoint {
        q: radius * cp,
        p: radius * sp,
        theta,
        phi: phi_wrapped,
        alpha_sq: radius * radius,
    }
}

/// Result of projecting an expectation vector onto the Bloch sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochProjection {
    pub point: BlochPoint,
    /// `|⟨J⟩| / j` before the radial rescaling; 1 for a coherent state.
    pub polarization: f64,
}

/// Project `(⟨J_x⟩, ⟨J_y⟩, ⟨J_z⟩)` radially onto the sphere of radius `j`
/// and read off `(θ, φ)` and `(Q, P)`.
pub fn bloch_projection(
    jx_expect: f64,
    jy_expect: f64,
    jz_expect: f64,
    n_particles: usize,
) -> Result<BlochProjection> {
    if n_particles == 0 {
        return Err(Error::invalid("number of particles must be at least 1"));
    }
    let n = n_particles as f64;
    let x = [jx_expect / n, jy_expect / n, jz_expect / n];
    let len = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if !(len > 1e-14) {
        return Err(Error::DegenerateDirection);
    }
    let x3 = 0.5 * x[2] / len;
    let theta = (-2.0 * x3).clamp(-1.0, 1.0).acos();
    let phi = x[1].atan2(x[0]);
    Ok(BlochProjection {
        point: angles_to_qp(theta, phi),
        polarization: 2.0 * len,
    })
}
