//! The `m = 0` quasienergy landscape `E(Q, P)` on the unit disk, its exact
//! derivatives, stationary points, minima and phase diagrams.
//!
//! With `a = Q² + P²`, `z = a - 1/2`, `w = 1 - a` and `x = Q√w`:
//!
//! ```text
//! E = -h z J₀(2γ₁ˣx/Ω) - (γʸ/2)(z² + wP²) + (γʸ/2)(z² - wP²) J₀(4γ₁ˣx/Ω) - γ₀ˣ w Q²
//! ```

use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_j0, bessel_j012};
use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Grid points with `Q² + P²` above `1 - BOUNDARY_MARGIN` are not scanned.
pub const BOUNDARY_MARGIN: f64 = 1e-6;
/// Distinct stationary points closer than this are merged.
pub const CLUSTER_RADIUS: f64 = 1e-3;
/// Hessian eigenvalues within this of zero make a point degenerate.
pub const CLASSIFY_TOL: f64 = 1e-8;
/// Gradient norm accepted as stationary.
pub const STATIONARY_TOL: f64 = 1e-10;

const MAX_ITERATIONS: usize = 500;
const DISK_TOL: f64 = 1e-12;

/// Value, gradient and Hessian of a function of `(Q, P)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Jet {
    v: f64,
    d: [f64; 2],
    /// `[∂QQ, ∂QP, ∂PP]`
    h: [f64; 3],
}

impl Jet {
    fn constant(v: f64) -> Self {
        Jet {
            v,
            d: [0.0; 2],
            h: [0.0; 3],
        }
    }

    fn variable(v: f64, index: usize) -> Self {
        let mut d = [0.0; 2];
        d[index] = 1.0;
        Jet { v, d, h: [0.0; 3] }
    }

    fn scale(self, s: f64) -> Self {
        Jet {
            v: s * self.v,
            d: [s * self.d[0], s * self.d[1]],
            h: [s * self.h[0], s * self.h[1], s * self.h[2]],
        }
    }

    /// `f(self)` from `(f, f', f'')` at `self.v`.
    fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        let [d0, d1] = self.d;
        Jet {
            v: f,
            d: [f1 * d0, f1 * d1],
            h: [
                f2 * d0 * d0 + f1 * self.h[0],
                f2 * d0 * d1 + f1 * self.h[1],
                f2 * d1 * d1 + f1 * self.h[2],
            ],
        }
    }

    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }

    /// `J₀(c · self)`
    fn bessel_j0_scaled(self, c: f64) -> Self {
        let (j0, j1, j2) = bessel_j012(c * self.v);
        self.chain(j0, -c * j1, -c * c * (j0 - j2) / 2.0)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d: [self.d[0] + o.d[0], self.d[1] + o.d[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            v: a.v * b.v,
            d: [a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]],
            h: [
                a.h[0] * b.v + 2.0 * a.d[0] * b.d[0] + a.v * b.h[0],
                a.h[1] * b.v + a.d[0] * b.d[1] + a.d[1] * b.d[0] + a.v * b.h[1],
                a.h[2] * b.v + 2.0 * a.d[1] * b.d[1] + a.v * b.h[2],
            ],
        }
    }
}

fn require_m0(params: &ModelParams) -> Result<()> {
    if params.m != 0 {
        return Err(Error::UnsupportedResonance(params.m));
    }
    if !(params.omega > 0.0) {
        return Err(Error::invalid("omega must be positive"));
    }
    Ok(())
}

fn disk_check(q: f64, p: f64) -> Result<f64> {
    let a = q * q + p * p;
    if !(a <= 1.0 + DISK_TOL) {
        return Err(Error::OutOfDisk { q, p });
    }
    Ok(a.min(1.0))
}

fn qel_unchecked(params: &ModelParams, q: f64, p: f64) -> f64 {
    let a = (q * q + p * p).min(1.0);
    let z = a - 0.5;
    let w = 1.0 - a;
    let x = q * w.sqrt();
    let k = params.gamma1x / params.omega;
    let gy = params.gammay;
    -params.h * z * bessel_j0(2.0 * k * x) - gy / 2.0 * (z * z + w * p * p)
        + gy / 2.0 * (z * z - w * p * p) * bessel_j0(4.0 * k * x)
        - params.gamma0x * w * q * q
}

/// `E(Q, P)` on the closed disk.
pub fn qel(params: &ModelParams, q: f64, p: f64) -> Result<f64> {
    require_m0(params)?;
    disk_check(q, p)?;
    Ok(qel_unchecked(params, q, p))
}

fn qel_jet(params: &ModelParams, q: f64, p: f64) -> Result<Jet> {
    require_m0(params)?;
    let a = disk_check(q, p)?;
    if a >= 1.0 {
        return Err(Error::invalid(format!(
            "derivatives are singular on the boundary, got (Q, P) = ({q}, {p})"
        )));
    }
    let qj = Jet::variable(q, 0);
    let pj = Jet::variable(p, 1);
    let q2 = qj * qj;
    let p2 = pj * pj;
    let a = q2 + p2;
    let z = a - Jet::constant(0.5);
    let w = Jet::constant(1.0) - a;
    let x = qj * w.sqrt();
    let k = params.gamma1x / params.omega;
    let gy = params.gammay;
    let z2 = z * z;
    let wp2 = w * p2;
    let e = (z * x.bessel_j0_scaled(2.0 * k)).scale(-params.h) - (z2 + wp2).scale(gy / 2.0)
        + ((z2 - wp2) * x.bessel_j0_scaled(4.0 * k)).scale(gy / 2.0)
        - (w * q2).scale(params.gamma0x);
    Ok(e)
}

/// `(∂E/∂Q, ∂E/∂P)` in the open disk.
pub fn qel_gradient(params: &ModelParams, q: f64, p: f64) -> Result<[f64; 2]> {
    Ok(qel_jet(params, q, p)?.d)
}

/// Symmetric Hessian `[[E_QQ, E_QP], [E_QP, E_PP]]` in the open disk.
pub fn qel_hessian(params: &ModelParams, q: f64, p: f64) -> Result<[[f64; 2]; 2]> {
    let j = qel_jet(params, q, p)?;
    Ok([[j.h[0], j.h[1]], [j.h[1], j.h[2]]])
}

/// `(λ₁, λ₂)`: the curvatures of `E` at the origin along `P` and `Q`,
/// `λ₁ = -2(h + γʸ)`, `λ₂ = -2h - 2γ₀ˣ - (h + γʸ)(γ₁ˣ/Ω)²`.
pub fn origin_eigenvalues(params: &ModelParams) -> (f64, f64) {
    let s = params.h + params.gammay;
    let lambda1 = -2.0 * s;
    let ratio = params.gamma1x / params.omega;
    let lambda2 = -2.0 * params.h - 2.0 * params.gamma0x - s * ratio * ratio;
    (lambda1, lambda2)
}

/// Ascending eigenvalues of a symmetric 2×2 matrix.
pub fn sym2_eigenvalues(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let mean = (m[0][0] + m[1][1]) / 2.0;
    let half_diff = (m[0][0] - m[1][1]) / 2.0;
    let r = half_diff.hypot(m[0][1]);
    [mean - r, mean + r]
}

/// Unit eigenvector of a symmetric 2×2 matrix for eigenvalue `lambda`.
fn sym2_eigenvector(m: &[[f64; 2]; 2], lambda: f64) -> [f64; 2] {
    let a = [m[0][1], lambda - m[0][0]];
    let b = [lambda - m[1][1], m[0][1]];
    let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
    let n = v[0].hypot(v[1]);
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        [v[0] / n, v[1] / n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Minimum,
    Saddle,
    Maximum,
    Degenerate,
}

impl Classification {
    pub fn from_eigenvalues(eig: [f64; 2]) -> Self {
        let [lo, hi] = eig;
        if lo > CLASSIFY_TOL {
            Classification::Minimum
        } else if hi < -CLASSIFY_TOL {
            Classification::Maximum
        } else if lo < -CLASSIFY_TOL && hi > CLASSIFY_TOL {
            Classification::Saddle
        } else {
            Classification::Degenerate
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Minimum => "minimum",
            Classification::Saddle => "saddle",
            Classification::Maximum => "maximum",
            Classification::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QelPoint {
    pub q: f64,
    pub p: f64,
    pub energy: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    /// Ascending.
    pub hessian_eigenvalues: [f64; 2],
    pub classification: Classification,
    /// For degenerate points: `E` rises in every probed direction.
    pub probe_minimum: bool,
}

impl QelPoint {
    pub fn at(params: &ModelParams, q: f64, p: f64) -> Result<Self> {
        let j = qel_jet(params, q, p)?;
        let hessian = [[j.h[0], j.h[1]], [j.h[1], j.h[2]]];
        let hessian_eigenvalues = sym2_eigenvalues(&hessian);
        let classification = Classification::from_eigenvalues(hessian_eigenvalues);
        let probe_minimum = match classification {
            Classification::Minimum => true,
            Classification::Degenerate => probe_is_minimum(params, q, p, j.v),
            _ => false,
        };
        Ok(QelPoint {
            q,
            p,
            energy: j.v,
            gradient: j.d,
            hessian,
            hessian_eigenvalues,
            classification,
            probe_minimum,
        })
    }

    pub fn gradient_norm(&self) -> f64 {
        self.gradient[0].hypot(self.gradient[1])
    }

    pub fn distance_to(&self, q: f64, p: f64) -> f64 {
        (self.q - q).hypot(self.p - p)
    }
}

/// `E` strictly above `energy` on two small rings around `(q, p)`.
fn probe_is_minimum(params: &ModelParams, q: f64, p: f64, energy: f64) -> bool {
    const DIRECTIONS: usize = 32;
    [1e-3, 1e-2].iter().all(|&r| {
        (0..DIRECTIONS).all(|k| {
            let angle = std::f64::consts::TAU * k as f64 / DIRECTIONS as f64;
            let (qq, pp) = (q + r * angle.cos(), p + r * angle.sin());
            qq * qq + pp * pp > 1.0 || qel_unchecked(params, qq, pp) > energy
        })
    })
}

/// A refinement that did not reach a stationary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineFailure {
    pub start: [f64; 2],
    pub last: [f64; 2],
    pub gradient_norm: f64,
    pub iterations: usize,
    pub reason: String,
}

/// Indices of the mirror images `(-Q, P)` and `(Q, -P)` within a list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryPartners {
    pub q_mirror: Option<usize>,
    pub p_mirror: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaReport {
    pub params: ModelParams,
    pub grid_resolution: usize,
    /// Non-degenerate minima sorted by energy, then `Q`, then `P`.
    pub minima: Vec<QelPoint>,
    /// Degenerate stationary points reached by descent, same order.
    pub degenerate: Vec<QelPoint>,
    /// Non-degenerate minima plus degenerate points that pass the ring probe.
    pub count: usize,
    pub global_minimum_energy: f64,
    pub symmetry_partners: Vec<SymmetryPartners>,
    pub failures: Vec<RefineFailure>,
    /// Descents that ran into the excluded boundary band.
    pub boundary_escapes: usize,
}

impl MinimaReport {
    /// Every minimum has both mirror images in the list.
    pub fn is_mirror_closed(&self) -> bool {
        self.symmetry_partners
            .iter()
            .all(|s| s.q_mirror.is_some() && s.p_mirror.is_some())
    }

    /// Minima and probe-verified degenerate minima, sorted.
    pub fn counted_points(&self) -> Vec<QelPoint> {
        let mut all: Vec<QelPoint> = self
            .minima
            .iter()
            .chain(self.degenerate.iter().filter(|d| d.probe_minimum))
            .copied()
            .collect();
        sort_points(&mut all);
        all
    }
}

fn sort_points(points: &mut [QelPoint]) {
    points.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then(a.q.total_cmp(&b.q))
            .then(a.p.total_cmp(&b.p))
    });
}

fn grid_axis(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect()
}

fn scan_grid<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let axis = grid_axis(n);
    (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (q, p) = (axis[idx / n], axis[idx % n]);
            if q * q + p * p <= 1.0 - BOUNDARY_MARGIN {
                f(q, p)
            } else {
                f64::NAN
            }
        })
        .collect()
}

/// Grid points whose value does not exceed any of their valid neighbours.
fn discrete_minima(values: &[f64], n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = values[i * n + j];
            if v.is_nan() {
                continue;
            }
            let mut is_min = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= n as i64 || jj >= n as i64 {
                        continue;
                    }
                    let w = values[ii as usize * n + jj as usize];
                    if w < v {
                        is_min = false;
                        break 'nb;
                    }
                }
            }
            if is_min {
                out.push((i, j));
            }
        }
    }
    out
}

enum Descent {
    Converged([f64; 2]),
    Boundary,
    Failed(RefineFailure),
}

/// Damped Newton descent on `E` using `|λ|`-modified Hessians, so every
/// step is a descent direction.
fn descend(params: &ModelParams, start: [f64; 2], tol: f64) -> Descent {
    let mut x = start;
    let mut jet = match qel_jet(params, x[0], x[1]) {
        Ok(j) => j,
        Err(_) => return Descent::Boundary,
    };
    for iter in 0..MAX_ITERATIONS {
        let g = jet.d;
        let gnorm = g[0].hypot(g[1]);
        if gnorm < tol {
            return Descent::Converged(x);
        }
        let hess = [[jet.h[0], jet.h[1]], [jet.h[1], jet.h[2]]];
        let eig = sym2_eigenvalues(&hess);
        let scale = eig[0].abs().max(eig[1].abs()).max(1.0);
        let floor = 1e-6 * scale;
        let mut d = [0.0; 2];
        for &lam in &eig {
            let v = sym2_eigenvector(&hess, lam);
            let coeff = (v[0] * g[0] + v[1] * g[1]) / lam.abs().max(floor);
            d[0] -= coeff * v[0];
            d[1] -= coeff * v[1];
        }
        if eig[0] == eig[1] {
            // eigenvectors coincide; use the scalar case
            let lam = eig[0].abs().max(floor);
            d = [-g[0] / lam, -g[1] / lam];
        }
        let slope = g[0] * d[0] + g[1] * d[1];
        let mut t = 1.0;
        let accepted = loop {
            let trial = [x[0] + t * d[0], x[1] + t * d[1]];
            let a = trial[0] * trial[0] + trial[1] * trial[1];
            if a < 1.0 - 1e-9 {
                if let Ok(tj) = qel_jet(params, trial[0], trial[1]) {
                    let armijo = tj.v <= jet.v + 1e-4 * t * slope;
                    let tgn = tj.d[0].hypot(tj.d[1]);
                    let flat = tj.v <= jet.v + 1e-12 * (1.0 + jet.v.abs()) && tgn < gnorm;
                    if armijo || flat {
                        break Some((trial, tj));
                    }
                }
            }
            t /= 2.0;
            if t < 1e-14 {
                break None;
            }
        };
        match accepted {
            Some((trial, tj)) => {
                x = trial;
                jet = tj;
                if x[0] * x[0] + x[1] * x[1] > 1.0 - BOUNDARY_MARGIN {
                    return Descent::Boundary;
                }
            }
            None => {
                return Descent::Failed(RefineFailure {
                    start,
                    last: x,
                    gradient_norm: gnorm,
                    iterations: iter,
                    reason: "line search stalled".into(),
                })
            }
        }
    }
    let gnorm = jet.d[0].hypot(jet.d[1]);
    if gnorm < tol {
        return Descent::Converged(x);
    }
    Descent::Failed(RefineFailure {
        start,
        last: x,
        gradient_norm: gnorm,
        iterations: MAX_ITERATIONS,
        reason: "iteration limit".into(),
    })
}

/// Newton iteration on `∇E = 0`, damped so `|∇E|` decreases.
fn newton_stationary(params: &ModelParams, start: [f64; 2], tol: f64) -> Option<[f64; 2]> {
    let mut x = start;
    let mut jet = qel_jet(params, x[0], x[1]).ok()?;
    for _ in 0..100 {
        let g = jet.d;
        let gnorm = g[0].hypot(g[1]);
        if gnorm < tol {
            return Some(x);
        }
        let det = jet.h[0] * jet.h[2] - jet.h[1] * jet.h[1];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let d = [
            -(jet.h[2] * g[0] - jet.h[1] * g[1]) / det,
            -(-jet.h[1] * g[0] + jet.h[0] * g[1]) / det,
        ];
        let mut t = 1.0;
        loop {
            let trial = [x[0] + t * d[0], x[1] + t * d[1]];
            if trial[0] * trial[0] + trial[1] * trial[1] < 1.0 - 1e-9 {
                if let Ok(tj) = qel_jet(params, trial[0], trial[1]) {
                    if tj.d[0].hypot(tj.d[1]) < gnorm {
                        x = trial;
                        jet = tj;
                        break;
                    }
                }
            }
            t /= 2.0;
            if t < 1e-10 {
                return None;
            }
        }
    }
    (jet.d[0].hypot(jet.d[1]) < tol).then_some(x)
}

fn cluster_points(points: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let mut reps: Vec<[f64; 2]> = Vec::new();
    for x in points {
        if !reps
            .iter()
            .any(|r| (r[0] - x[0]).hypot(r[1] - x[1]) < CLUSTER_RADIUS)
        {
            reps.push(x);
        }
    }
    reps
}

fn partners(points: &[QelPoint]) -> Vec<SymmetryPartners> {
    let find = |q: f64, p: f64| points.iter().position(|o| o.distance_to(q, p) < CLUSTER_RADIUS);
    points
        .iter()
        .map(|m| SymmetryPartners {
            q_mirror: find(-m.q, m.p),
            p_mirror: find(m.q, -m.p),
        })
        .collect()
}

fn check_grid(grid_n: usize, tol: f64) -> Result<()> {
    if grid_n < 101 {
        return Err(Error::invalid(format!("grid must have at least 101 points per axis, got {grid_n}")));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("refinement tolerance must be positive"));
    }
    Ok(())
}

/// Local minima of `E` from a `grid_n × grid_n` scan of `[-1, 1]²` followed
/// by descent to `|∇E| < refine_tol`.
pub fn find_minima(params: &ModelParams, grid_n: usize, refine_tol: f64) -> Result<MinimaReport> {
    require_m0(params)?;
    check_grid(grid_n, refine_tol)?;
    let values = scan_grid(grid_n, |q, p| qel_unchecked(params, q, p));
    let axis = grid_axis(grid_n);
    let seeds: Vec<[f64; 2]> = discrete_minima(&values, grid_n)
        .into_iter()
        .map(|(i, j)| [axis[i], axis[j]])
        .collect();
    let outcomes: Vec<Descent> = seeds
        .par_iter()
        .map(|&s| descend(params, s, refine_tol))
        .collect();

    let mut converged = Vec::new();
    let mut failures = Vec::new();
    let mut boundary_escapes = 0;
    for o in outcomes {
        match o {
            Descent::Converged(x) => converged.push(x),
            Descent::Boundary => boundary_escapes += 1,
            Descent::Failed(f) => failures.push(f),
        }
    }
    let mut minima = Vec::new();
    let mut degenerate = Vec::new();
    for x in cluster_points(converged) {
        let pt = QelPoint::at(params, x[0], x[1])?;
        match pt.classification {
            Classification::Minimum => minima.push(pt),
            Classification::Degenerate => degenerate.push(pt),
            // descent converged onto a saddle or maximum: only possible when
            // started exactly on one; keep it out of the minima
            _ => {}
        }
    }
    sort_points(&mut minima);
    sort_points(&mut degenerate);
    let count = minima.len() + degenerate.iter().filter(|d| d.probe_minimum).count();
    let global_minimum_energy = minima
        .iter()
        .chain(degenerate.iter().filter(|d| d.probe_minimum))
        .map(|m| m.energy)
        .fold(f64::INFINITY, f64::min);
    let symmetry_partners = partners(&minima);
    Ok(MinimaReport {
        params: *params,
        grid_resolution: grid_n,
        minima,
        degenerate,
        count,
        global_minimum_energy,
        symmetry_partners,
        failures,
        boundary_escapes,
    })
}

/// All interior stationary points found from local minima of `|∇E|²` on the
/// grid, sorted by energy, then `Q`, then `P`.
pub fn stationary_points(params: &ModelParams, grid_n: usize) -> Result<Vec<QelPoint>> {
    require_m0(params)?;
    check_grid(grid_n, STATIONARY_TOL)?;
    let values = scan_grid(grid_n, |q, p| match qel_jet(params, q, p) {
        Ok(j) => j.d[0] * j.d[0] + j.d[1] * j.d[1],
        Err(_) => f64::NAN,
    });
    let axis = grid_axis(grid_n);
    let seeds: Vec<[f64; 2]> = discrete_minima(&values, grid_n)
        .into_iter()
        .map(|(i, j)| [axis[i], axis[j]])
        .collect();
    let found: Vec<[f64; 2]> = seeds
        .par_iter()
        .filter_map(|&s| newton_stationary(params, s, STATIONARY_TOL))
        .collect();
    let mut points = cluster_points(found)
        .into_iter()
        .map(|x| QelPoint::at(params, x[0], x[1]))
        .collect::<Result<Vec<_>>>()?;
    sort_points(&mut points);
    Ok(points)
}

/// A saddle and the minima reached by descending from it along its
/// negative-curvature direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleLink {
    pub saddle: QelPoint,
    /// Indices into the minima list passed in; `None` when the descent
    /// left through the boundary band or matched no listed minimum.
    pub ends: [Option<usize>; 2],
}

/// Connect each saddle to the minima on either side of it.
pub fn saddle_links(params: &ModelParams, saddles: &[QelPoint], minima: &[QelPoint]) -> Vec<SaddleLink> {
    const KICK: f64 = 1e-3;
    saddles
        .iter()
        .filter(|s| s.classification == Classification::Saddle)
        .map(|s| {
            let v = sym2_eigenvector(&s.hessian, s.hessian_eigenvalues[0]);
            let end = |sign: f64| -> Option<usize> {
                let start = [s.q + sign * KICK * v[0], s.p + sign * KICK * v[1]];
                match descend(params, start, STATIONARY_TOL) {
                    Descent::Converged(x) => minima
                        .iter()
                        .position(|m| m.distance_to(x[0], x[1]) < 10.0 * CLUSTER_RADIUS),
                    _ => None,
                }
            };
            SaddleLink {
                saddle: *s,
                ends: [end(1.0), end(-1.0)],
            }
        })
        .collect()
}

/// Lowest saddle energy among the saddles whose descent reaches minimum
/// `index`, or `None` if no saddle connects to it.
pub fn rim_saddle_energy(links: &[SaddleLink], index: usize) -> Option<f64> {
    links
        .iter()
        .filter(|l| l.ends.contains(&Some(index)))
        .map(|l| l.saddle.energy)
        .min_by(f64::total_cmp)
}

/// Rim-saddle energy of every minimum in `minima`, found from the
/// stationary points on a `grid_n` scan.
pub fn rim_saddles(params: &ModelParams, minima: &[QelPoint], grid_n: usize) -> Result<Vec<Option<f64>>> {
    let saddles: Vec<QelPoint> = stationary_points(params, grid_n)?
        .into_iter()
        .filter(|s| s.classification == Classification::Saddle)
        .collect();
    let links = saddle_links(params, &saddles, minima);
    Ok((0..minima.len()).map(|i| rim_saddle_energy(&links, i)).collect())
}

/// One `(Q, P, E)` sample per grid point inside the closed disk.
pub fn landscape_grid(params: &ModelParams, grid_n: usize) -> Result<Vec<[f64; 3]>> {
    require_m0(params)?;
    if grid_n < 2 {
        return Err(Error::invalid("landscape grid needs at least 2 points per axis"));
    }
    let axis = grid_axis(grid_n);
    Ok((0..grid_n * grid_n)
        .into_par_iter()
        .filter_map(|idx| {
            let (q, p) = (axis[idx / grid_n], axis[idx % grid_n]);
            (q * q + p * p <= 1.0).then(|| [q, p, qel_unchecked(params, q, p)])
        })
        .collect())
}

/// Parameter that a phase-diagram axis sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AxisParam {
    #[serde(rename = "gx0")]
    Gamma0x,
    #[serde(rename = "gx1")]
    Gamma1x,
    #[serde(rename = "gy")]
    Gammay,
}

impl AxisParam {
    pub fn name(&self) -> &'static str {
        match self {
            AxisParam::Gamma0x => "gx0",
            AxisParam::Gamma1x => "gx1",
            AxisParam::Gammay => "gy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gx0" => Ok(AxisParam::Gamma0x),
            "gx1" => Ok(AxisParam::Gamma1x),
            "gy" => Ok(AxisParam::Gammay),
            other => Err(Error::invalid(format!(
                "unknown sweep parameter {other:?} (expected gx0, gx1 or gy)"
            ))),
        }
    }

    pub fn apply(&self, params: &mut ModelParams, value: f64) {
        match self {
            AxisParam::Gamma0x => params.gamma0x = value,
            AxisParam::Gamma1x => params.gamma1x = value,
            AxisParam::Gammay => params.gammay = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseAxis {
    pub param: AxisParam,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl PhaseAxis {
    pub fn values(&self) -> Vec<f64> {
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * i as f64 / (self.steps - 1) as f64
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub value1: f64,
    pub value2: f64,
    /// `-1` marks a cell whose refinement failed.
    pub count: i64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub global_min_energy: f64,
    pub diagnostics: String,
    pub report: Option<MinimaReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub axis1: PhaseAxis,
    pub axis2: PhaseAxis,
    /// Row-major: `axis1` outer, `axis2` inner.
    pub cells: Vec<PhaseCell>,
    /// Linear-interpolated zero crossings of `λ₁` along both axes.
    pub lambda1_zero: Vec<[f64; 2]>,
    pub lambda2_zero: Vec<[f64; 2]>,
}

impl PhaseDiagram {
    pub fn cell(&self, i: usize, j: usize) -> &PhaseCell {
        &self.cells[i * self.axis2.steps + j]
    }

    pub fn counts(&self) -> Vec<Vec<i64>> {
        self.cells
            .chunks(self.axis2.steps)
            .map(|row| row.iter().map(|c| c.count).collect())
            .collect()
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.count < 0).count()
    }
}

fn zero_crossings(v1: &[f64], v2: &[f64], grid: &[f64]) -> Vec<[f64; 2]> {
    let n2 = v2.len();
    let mut out = Vec::new();
    let at = |i: usize, j: usize| grid[i * n2 + j];
    for i in 0..v1.len() {
        for j in 0..n2 {
            if j + 1 < n2 {
                let (a, b) = (at(i, j), at(i, j + 1));
                if a == 0.0 {
                    out.push([v1[i], v2[j]]);
                } else if a * b < 0.0 {
                    let s = a / (a - b);
                    out.push([v1[i], v2[j] + s * (v2[j + 1] - v2[j])]);
                }
            }
            if i + 1 < v1.len() {
                let (a, b) = (at(i, j), at(i + 1, j));
                if a * b < 0.0 {
                    let s = a / (a - b);
                    out.push([v1[i] + s * (v1[i + 1] - v1[i]), v2[j]]);
                }
            }
        }
    }
    out.sort_by(|x, y| x[0].total_cmp(&y[0]).then(x[1].total_cmp(&y[1])));
    out.dedup();
    out
}

/// Minima counts over a two-parameter sweep. Cells are computed in
/// parallel and assembled in grid order.
pub fn phase_diagram(
    params: &ModelParams,
    axis1: PhaseAxis,
    axis2: PhaseAxis,
    grid_n: usize,
) -> Result<PhaseDiagram> {
    require_m0(params)?;
    check_grid(grid_n, STATIONARY_TOL)?;
    if axis1.param == axis2.param {
        return Err(Error::invalid("phase-diagram axes must sweep different parameters"));
    }
    for ax in [&axis1, &axis2] {
        if ax.steps < 2 {
            return Err(Error::invalid(format!("axis {} needs at least 2 steps", ax.param.name())));
        }
        if !(ax.lo.is_finite() && ax.hi.is_finite()) {
            return Err(Error::invalid(format!("axis {} range must be finite", ax.param.name())));
        }
    }
    let v1 = axis1.values();
    let v2 = axis2.values();
    let cells: Vec<PhaseCell> = (0..v1.len() * v2.len())
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (v1[idx / v2.len()], v2[idx % v2.len()]);
            let mut p = *params;
            axis1.param.apply(&mut p, a);
            axis2.param.apply(&mut p, b);
            let (lambda1, lambda2) = origin_eigenvalues(&p);
            match find_minima(&p, grid_n, STATIONARY_TOL) {
                Ok(report) if report.failures.is_empty() => PhaseCell {
                    value1: a,
                    value2: b,
                    count: report.count as i64,
                    lambda1,
                    lambda2,
                    global_min_energy: report.global_minimum_energy,
                    diagnostics: String::new(),
                    report: Some(report),
                },
                Ok(report) => PhaseCell {
                    value1: a,
                    value2: b,
                    count: -1,
                    lambda1,
                    lambda2,
                    global_min_energy: report.global_minimum_energy,
                    diagnostics: format!(
                        "{} refinement failure(s); first: {} at ({:?}, {:?}), |grad| {:e}",
                        report.failures.len(),
                        report.failures[0].reason,
                        report.failures[0].last[0],
                        report.failures[0].last[1],
                        report.failures[0].gradient_norm
                    ),
                    report: Some(report),
                },
                Err(e) => PhaseCell {
                    value1: a,
                    value2: b,
                    count: -1,
                    lambda1,
                    lambda2,
                    global_min_energy: f64::NAN,
                    diagnostics: e.to_string(),
                    report: None,
                },
            }
        })
        .collect();
    let l1: Vec<f64> = cells.iter().map(|c| c.lambda1).collect();
    let l2: Vec<f64> = cells.iter().map(|c| c.lambda2).collect();
    Ok(PhaseDiagram {
        lambda1_zero: zero_crossings(&v1, &v2, &l1),
        lambda2_zero: zero_crossings(&v1, &v2, &l2),
        axis1,
        axis2,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn undriven(g0: f64, gy: f64) -> ModelParams {
        ModelParams {
            gamma0x: g0,
            gammay: gy,
            ..Default::default()
        }
    }

    #[test]
    fn closed_form_values() {
        let p = ModelParams::strong_drive(10);
        assert_eq!(qel(&p, 0.0, 0.0).unwrap(), p.h / 2.0);
        for k in 0..12 {
            let a = k as f64 * 0.5;
            assert!((qel(&p, a.cos(), a.sin()).unwrap() + p.h / 2.0).abs() < 1e-12);
        }
        assert!(matches!(qel(&p, 0.9, 0.5), Err(Error::OutOfDisk { .. })));
        let m1 = ModelParams { m: 1, ..p };
        assert!(matches!(qel(&m1, 0.0, 0.0), Err(Error::UnsupportedResonance(1))));
    }

    #[test]
    fn undriven_minimum_value() {
        let p = undriven(0.5, 2.0);
        assert!((qel(&p, 0.0, 0.5).unwrap() + 0.625).abs() < 1e-14);
        let r = find_minima(&p, 201, STATIONARY_TOL).unwrap();
        assert_eq!(r.count, 2);
        for m in &r.minima {
            assert!(m.q.abs() < 1e-9 && (m.p.abs() - 0.5).abs() < 1e-9);
            assert!((m.energy + 0.625).abs() < 1e-12);
        }
        assert!(r.is_mirror_closed());
    }

    #[test]
    fn single_minimum_in_symmetric_phase() {
        let r = find_minima(&undriven(0.5, 0.5), 201, STATIONARY_TOL).unwrap();
        assert_eq!(r.count, 1);
        assert!(r.minima[0].q.abs() < 1e-12 && r.minima[0].p.abs() < 1e-12);
    }

    #[test]
    fn critical_point_is_degenerate_minimum() {
        let r = find_minima(&undriven(0.5, 1.0), 101, STATIONARY_TOL).unwrap();
        assert!(r.minima.is_empty());
        assert_eq!(r.degenerate.len(), 1);
        assert!(r.degenerate[0].probe_minimum);
        assert_eq!(r.count, 1);
    }

    #[test]
    fn origin_hessian() {
        let p = ModelParams::strong_drive(10);
        let h = qel_hessian(&p, 0.0, 0.0).unwrap();
        let (l1, l2) = origin_eigenvalues(&p);
        assert!((h[0][0] - l2).abs() < 1e-9 * l2.abs());
        assert!((h[1][1] - l1).abs() < 1e-9 * l1.abs());
        assert_eq!(h[0][1], 0.0);
        assert_eq!(qel_gradient(&p, 0.0, 0.0).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn origin_eigenvalue_examples() {
        assert_eq!(origin_eigenvalues(&undriven(0.5, 2.0)), (-2.0, 1.0));
        let p = ModelParams {
            gamma0x: 0.5,
            gammay: 2.0,
            gamma1x: 40.0,
            ..Default::default()
        };
        assert!(origin_eigenvalues(&p).1.abs() < 1e-14);
        assert_eq!(origin_eigenvalues(&undriven(0.0, 1.0)).0, 0.0);
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = ModelParams::strong_drive(10);
        let step = 1e-5;
        for &(q, pp) in &[(0.3, -0.2), (-0.55, 0.41), (0.05, 0.9), (0.7, 0.1)] {
            let g = qel_gradient(&p, q, pp).unwrap();
            let fd_q = (qel(&p, q + step, pp).unwrap() - qel(&p, q - step, pp).unwrap()) / (2.0 * step);
            let fd_p = (qel(&p, q, pp + step).unwrap() - qel(&p, q, pp - step).unwrap()) / (2.0 * step);
            assert!((g[0] - fd_q).abs() < 1e-5 * (1.0 + g[0].abs()), "{g:?} {fd_q}");
            assert!((g[1] - fd_p).abs() < 1e-5 * (1.0 + g[1].abs()));
            let h = qel_hessian(&p, q, pp).unwrap();
            let gq = qel_gradient(&p, q + step, pp).unwrap();
            let gm = qel_gradient(&p, q - step, pp).unwrap();
            assert!((h[0][0] - (gq[0] - gm[0]) / (2.0 * step)).abs() < 1e-5 * (1.0 + h[0][0].abs()));
            assert!((h[0][1] - (gq[1] - gm[1]) / (2.0 * step)).abs() < 1e-5 * (1.0 + h[0][1].abs()));
        }
    }

    #[test]
    fn derivatives_reject_boundary() {
        let p = ModelParams::strong_drive(10);
        assert!(qel_gradient(&p, 1.0, 0.0).is_err());
        assert!(qel_hessian(&p, 0.0, -1.0).is_err());
    }

    #[test]
    fn classification_rules() {
        use Classification::*;
        assert_eq!(Classification::from_eigenvalues([1.0, 2.0]), Minimum);
        assert_eq!(Classification::from_eigenvalues([-1.0, 2.0]), Saddle);
        assert_eq!(Classification::from_eigenvalues([-2.0, -1.0]), Maximum);
        assert_eq!(Classification::from_eigenvalues([1e-9, 2.0]), Degenerate);
    }

    #[test]
    fn saddles_link_undriven_minima() {
        let p = undriven(0.5, 2.0);
        let r = find_minima(&p, 201, STATIONARY_TOL).unwrap();
        let sp = stationary_points(&p, 201).unwrap();
        let saddles: Vec<QelPoint> = sp
            .iter()
            .filter(|s| s.classification == Classification::Saddle)
            .copied()
            .collect();
        // the origin separates the two minima
        assert!(saddles.iter().any(|s| s.q.abs() < 1e-9 && s.p.abs() < 1e-9));
        let links = saddle_links(&p, &saddles, &r.minima);
        for i in 0..2 {
            assert_eq!(rim_saddle_energy(&links, i), Some(-0.5));
        }
    }

    #[test]
    fn axis_values_hit_endpoints() {
        let ax = PhaseAxis {
            param: AxisParam::Gammay,
            lo: 0.0,
            hi: 3.0,
            steps: 31,
        };
        let v = ax.values();
        assert_eq!(v.len(), 31);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[30], 3.0);
        assert!((v[10] - 1.0).abs() < 1e-15);
        assert!(AxisParam::parse("omega").is_err());
    }

    #[test]
    fn small_phase_diagram() {
        let base = undriven(0.5, 0.0);
        let a1 = PhaseAxis {
            param: AxisParam::Gammay,
            lo: 0.5,
            hi: 1.5,
            steps: 3,
        };
        let a2 = PhaseAxis {
            param: AxisParam::Gamma1x,
            lo: 0.0,
            hi: 10.0,
            steps: 2,
        };
        let d = phase_diagram(&base, a1, a2, 101).unwrap();
        assert_eq!(d.counts(), vec![vec![1, 1], vec![1, 1], vec![2, 2]]);
        assert!(d.lambda1_zero.iter().any(|z| (z[0] - 1.0).abs() < 1e-12));
        assert_eq!(d.failed_cells(), 0);
    }
}
