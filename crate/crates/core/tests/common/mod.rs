#![allow(dead_code)]

use lmg_core::bessel::bessel_j;
use lmg_core::landscape::{rim_saddles, MinimaReport, QelPoint};
use lmg_core::linalg::{c, hermitian_function, CMatrix, C64, I};
use lmg_core::{CollectiveSpinOps, ModelParams};

pub const BESSEL_ORDERS: i32 = 40;

/// Rotating-frame Hamiltonian from its Bessel-series form, truncated at
/// `|l| ≤ 40`:
///
/// ```text
/// H_m = -h/2 [(J_z + iΛ₁) O₁ + h.c.] - (mΩ/2) J_z
///       + γʸ/4N [(J_z + iΛ₁)² O₂ + h.c.] - γʸ/2N (J_z² + Λ₁²) - γ₀ˣ/N Λ₂²
/// O₁ = Σ_l J_l[(γ₁ˣ/NΩ)(2Λ₂ + 1)] e^{-ilΩt},  O₂ = Σ_l J_l[(4γ₁ˣ/NΩ)(Λ₂ + 1)] e^{-ilΩt}
/// Λ₁ = -J_y cos θ - J_x sin θ,  Λ₂ = J_x cos θ - J_y sin θ,  θ = mΩt/2
/// ```
pub fn rotating_hamiltonian_series(params: &ModelParams, ops: &CollectiveSpinOps, t: f64) -> CMatrix {
    let n = params.n_particles as f64;
    let theta = params.m as f64 * params.omega * t / 2.0;
    let (s, co) = theta.sin_cos();
    let lam1 = -(ops.jy() * c(co)) - ops.jx() * c(s);
    let lam2 = ops.jx() * c(co) - ops.jy() * c(s);
    let k = params.gamma1x / (n * params.omega);
    let dim = ops.dim();
    let mut o1 = CMatrix::zeros(dim, dim);
    let mut o2 = CMatrix::zeros(dim, dim);
    for l in -BESSEL_ORDERS..=BESSEL_ORDERS {
        let phase = C64::from_polar(1.0, -(l as f64) * params.omega * t);
        o1 += hermitian_function(&lam2, |x| bessel_j(l, k * (2.0 * x + 1.0))).unwrap() * phase;
        o2 += hermitian_function(&lam2, |x| bessel_j(l, 4.0 * k * (x + 1.0))).unwrap() * phase;
    }
    let a = ops.jz() + &lam1 * I;
    let first = &a * o1;
    let second = &a * &a * o2;
    let jz2 = ops.jz() * ops.jz();
    (&first + first.adjoint()) * c(-params.h / 2.0)
        - ops.jz() * c(params.m as f64 * params.omega / 2.0)
        + (&second + second.adjoint()) * c(params.gammay / (4.0 * n))
        - (jz2 + &lam1 * &lam1) * c(params.gammay / (2.0 * n))
        - &lam2 * &lam2 * c(params.gamma0x / n)
}

/// Groups of minima with equal energy (to `tol`), in report order.
pub fn energy_families(points: &[QelPoint], tol: f64) -> Vec<Vec<usize>> {
    let mut families: Vec<Vec<usize>> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match families
            .iter_mut()
            .find(|f| (points[f[0]].energy - p.energy).abs() < tol)
        {
            Some(f) => f.push(i),
            None => families.push(vec![i]),
        }
    }
    families
}

/// Family of global minima, and the local family with the deepest basin
/// (rim-saddle energy minus minimum energy).
pub struct Labelled {
    pub a: usize,
    pub b: usize,
    pub rims: Vec<Option<f64>>,
    pub families: Vec<Vec<usize>>,
    pub depths: Vec<f64>,
}

pub fn label_families(params: &ModelParams, report: &MinimaReport, grid_n: usize) -> Labelled {
    let rims = rim_saddles(params, &report.minima, grid_n).unwrap();
    let families = energy_families(&report.minima, 1e-8);
    let depths: Vec<f64> = families
        .iter()
        .map(|f| rims[f[0]].map(|r| r - report.minima[f[0]].energy).unwrap_or(f64::NAN))
        .collect();
    let a = families[0][0];
    let b_family = (1..families.len())
        .max_by(|&x, &y| depths[x].total_cmp(&depths[y]))
        .expect("no local minima");
    Labelled {
        a,
        b: families[b_family][0],
        rims,
        families,
        depths,
    }
}
