//! One-period propagators and quasienergies.
//!
//! The lab-frame Hamiltonian is real symmetric with non-zero entries only
//! on the main diagonal and the second off-diagonals, so propagation works
//! on that band structure directly. The part of the drive term proportional
//! to the identity is split off and restored as an exact scalar phase.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate, IntegrationStats, IntegratorSettings};
use crate::linalg::{eigh, unitary_defect, unitary_eigen, CMatrix, C64};
use crate::model::{effective_h0_closed_form, ModelParams};
use crate::spin::CollectiveSpinOps;

/// Largest unitarity defect accepted from an integration.
pub const MAX_UNITARITY_DEFECT: f64 = 1e-6;

/// Eigenphases closer than this are treated as one degenerate cluster.
const CLUSTER_WIDTH: f64 = 1e-9;

/// Real symmetric band matrix; `bands[d][i]` is the entry `(i, i + d)`.
#[derive(Debug, Clone)]
struct SymBand {
    bands: Vec<Vec<f64>>,
}

impl SymBand {
    fn from_dense(m: &nalgebra::DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut width = 0;
        for d in 0..n {
            if (0..n - d).any(|i| m[(i, i + d)] != 0.0) {
                width = d;
            }
        }
        let bands = (0..=width)
            .map(|d| (0..n - d).map(|i| m[(i, i + d)]).collect())
            .collect();
        SymBand { bands }
    }

    fn zeros_like(other: &SymBand) -> Self {
        SymBand {
            bands: other.bands.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    fn widen(&mut self, width: usize, n: usize) {
        while self.bands.len() <= width {
            let d = self.bands.len();
            self.bands.push(vec![0.0; n - d]);
        }
    }
}

/// `-i H(t)` for the lab-frame Hamiltonian,
/// `H(t) = S + c(t) (D - s·1) + c(t) s·1`, `c(t) = γ₁ˣ cos Ωt`.
#[derive(Debug, Clone)]
pub(crate) struct LabGenerator {
    static_part: SymBand,
    drive_part: SymBand,
    gamma1x: f64,
    omega: f64,
    shift: f64,
    dim: usize,
}

impl LabGenerator {
    pub(crate) fn new(params: &ModelParams, ops: &CollectiveSpinOps) -> Result<Self> {
        params.validate()?;
        ops.check_dim(params.n_particles + 1)?;
        let n = params.n_particles as f64;
        let dim = ops.dim();
        let (jx2, jy2, jz) = ops.real_quadratics();
        let mut s = &jx2 * (-params.gamma0x / n) + &jy2 * (-params.gammay / n);
        for (k, z) in jz.iter().enumerate() {
            s[(k, k)] += -params.h * z;
        }
        let d = &jx2 * (-1.0 / n);
        // J_x² has spectrum [0, j²] (or [1/4, j²]); centre it
        let j = ops.j();
        let shift = -(j * j) / (2.0 * n);
        let mut d_shifted = d.clone();
        for k in 0..dim {
            d_shifted[(k, k)] -= shift;
        }
        let mut static_part = SymBand::from_dense(&s);
        let mut drive_part = SymBand::from_dense(&d_shifted);
        let width = static_part.bands.len().max(drive_part.bands.len()) - 1;
        static_part.widen(width, dim);
        drive_part.widen(width, dim);
        Ok(LabGenerator {
            static_part,
            drive_part,
            gamma1x: params.gamma1x,
            omega: params.omega,
            shift,
            dim,
        })
    }

    fn drive(&self, t: f64) -> f64 {
        self.gamma1x * (self.omega * t).cos()
    }

    /// `exp(-i s ∫_{t0}^{t1} c(t') dt')`, the phase removed by the shift.
    fn phase(&self, t0: f64, t1: f64) -> C64 {
        let integral = self.gamma1x * ((self.omega * t1).sin() - (self.omega * t0).sin()) / self.omega;
        C64::from_polar(1.0, -self.shift * integral)
    }

    pub(crate) fn apply(&self, t: f64, y: &CMatrix, out: &mut CMatrix) {
        let c_t = self.drive(t);
        let mut combined = SymBand::zeros_like(&self.static_part);
        for (d, band) in combined.bands.iter_mut().enumerate() {
            for (i, v) in band.iter_mut().enumerate() {
                *v = self.static_part.bands[d][i] + c_t * self.drive_part.bands[d][i];
            }
        }
        let n = self.dim;
        let ys = y.as_slice();
        let os = out.as_mut_slice();
        for (ycol, ocol) in ys.chunks_exact(n).zip(os.chunks_exact_mut(n)) {
            for i in 0..n {
                let mut acc = combined.bands[0][i] * ycol[i];
                for d in 1..combined.bands.len() {
                    let band = &combined.bands[d];
                    if i + d < n {
                        acc += band[i] * ycol[i + d];
                    }
                    if i >= d {
                        acc += band[i - d] * ycol[i - d];
                    }
                }
                // -i * acc
                ocol[i] = C64::new(acc.im, -acc.re);
            }
        }
    }
}

/// Propagate the columns of `y0` from `t0` through each of `stops`,
/// reporting the (phase-corrected) state on arrival.
pub(crate) fn propagate_columns<O>(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    y0: CMatrix,
    t0: f64,
    stops: &[f64],
    settings: &IntegratorSettings,
    mut on_stop: O,
) -> Result<IntegrationStats>
where
    O: FnMut(usize, f64, CMatrix),
{
    let gen = LabGenerator::new(params, ops)?;
    let mut y = y0;
    let max_step = settings.max_step_fraction * params.period();
    integrate(
        |t, y, out| gen.apply(t, y, out),
        &mut y,
        t0,
        stops,
        settings,
        max_step,
        |idx, t, y| on_stop(idx, t, y * gen.phase(t0, t)),
    )
}

/// A propagator `U(t1, t0)` with its integration diagnostics.
#[derive(Debug, Clone)]
pub struct Propagator {
    pub matrix: CMatrix,
    pub t0: f64,
    pub t1: f64,
    pub unitarity_defect: f64,
    pub stats: IntegrationStats,
}

/// `U(t_end, 0)` from `i dU/dt = H(t) U`, `U(0) = 1`.
pub fn propagator(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Propagator> {
    propagator_between(params, ops, 0.0, t_end, settings)
}

/// `U(t1, t0)`.
pub fn propagator_between(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<Propagator> {
    if !(t1 >= t0) {
        return Err(Error::invalid(format!("end time {t1} precedes start {t0}")));
    }
    let dim = ops.dim();
    let mut matrix = CMatrix::identity(dim, dim);
    let stats = propagate_columns(
        params,
        ops,
        CMatrix::identity(dim, dim),
        t0,
        &[t1],
        settings,
        |_, _, y| matrix = y,
    )?;
    let defect = unitary_defect(&matrix);
    if !(defect <= MAX_UNITARITY_DEFECT) {
        return Err(Error::IntegrationAccuracy {
            what: "unitarity defect",
            value: defect,
            limit: MAX_UNITARITY_DEFECT,
        });
    }
    Ok(Propagator {
        matrix,
        t0,
        t1,
        unitarity_defect: defect,
        stats,
    })
}

/// One-period propagator `U(T, 0)`.
pub fn monodromy(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    settings: &IntegratorSettings,
) -> Result<Propagator> {
    propagator(params, ops, params.period(), settings)
}

/// Fold into the first Brillouin zone `(-Ω/2, Ω/2]`; values within 1e-12 of
/// the lower edge go to the upper edge.
pub fn fold_quasienergy(x: f64, omega: f64) -> f64 {
    let half = omega / 2.0;
    let mut y = (x + half).rem_euclid(omega) - half;
    if y <= -half + 1e-12 {
        y += omega;
    }
    y
}

/// Distance between two quasienergies on the zone circle.
pub fn zone_distance(a: f64, b: f64, omega: f64) -> f64 {
    fold_quasienergy(a - b, omega).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeFrame {
    /// Eigenvectors of the lab-frame monodromy matrix.
    Monodromy,
    /// Eigenvectors of a rotating-frame effective Hamiltonian.
    Rotating,
}

/// Folded quasienergies, sorted ascending, with their modes (columns).
#[derive(Debug, Clone)]
pub struct QuasiSpectrum {
    pub omega: f64,
    pub quasienergies: Vec<f64>,
    pub modes: CMatrix,
    pub parity_expect: Vec<f64>,
    pub unitarity_defect: f64,
    pub frame: ModeFrame,
}

impl QuasiSpectrum {
    pub fn len(&self) -> usize {
        self.quasienergies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quasienergies.is_empty()
    }
}

fn parity_diagonal(dim: usize) -> Vec<f64> {
    (0..dim).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Group indices whose values lie within `width` of each other (transitively).
fn clusters<T, D: Fn(&T, &T) -> f64>(values: &[T], width: f64, dist: D) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for a in 0..n {
        for b in a + 1..n {
            if dist(&values[a], &values[b]) < width {
                let (ra, rb) = (root(&mut label, a), root(&mut label, b));
                label[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = root(&mut label, i);
        if index_of[r] == usize::MAX {
            index_of[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index_of[r]].push(i);
    }
    groups
}

/// Rotate each degenerate block of `vectors` so that its columns are parity
/// eigenvectors, then return `⟨Π⟩` for every column.
fn parity_resolve(vectors: &mut CMatrix, groups: &[Vec<usize>]) -> Vec<f64> {
    let dim = vectors.nrows();
    let parity = parity_diagonal(dim);
    for group in groups.iter().filter(|g| g.len() > 1) {
        let k = group.len();
        let block = CMatrix::from_fn(dim, k, |r, c| vectors[(r, group[c])]);
        let mut restricted = CMatrix::zeros(k, k);
        for a in 0..k {
            for b in 0..k {
                restricted[(a, b)] = (0..dim)
                    .map(|r| block[(r, a)].conj() * parity[r] * block[(r, b)])
                    .sum();
            }
        }
        let (_, rot) = eigh(&restricted);
        let rotated = &block * rot;
        for (c, &col) in group.iter().enumerate() {
            vectors.set_column(col, &rotated.column(c));
        }
    }
    (0..vectors.ncols())
        .map(|c| {
            vectors
                .column(c)
                .iter()
                .zip(&parity)
                .map(|(a, s)| s * a.norm_sqr())
                .sum()
        })
        .collect()
}

/// Quasienergies `ε = fold(i ln λ / T)` of a one-period propagator.
pub fn quasienergies(monodromy: &CMatrix, omega: f64) -> Result<QuasiSpectrum> {
    if !(omega > 0.0) {
        return Err(Error::invalid("omega must be positive"));
    }
    if !monodromy.is_square() {
        return Err(Error::invalid("monodromy matrix must be square"));
    }
    let defect = unitary_defect(monodromy);
    if !(defect <= MAX_UNITARITY_DEFECT) {
        return Err(Error::invalid(format!(
            "monodromy matrix is not unitary (defect {defect:.3e})"
        )));
    }
    let period = std::f64::consts::TAU / omega;
    let (values, mut vectors, _) = unitary_eigen(monodromy);
    let groups = clusters(&values, CLUSTER_WIDTH, |a, b| (a - b).norm());
    let parity = parity_resolve(&mut vectors, &groups);

    // λ = e^{-iεT}
    let raw: Vec<f64> = values
        .iter()
        .map(|v| fold_quasienergy(-v.arg() / period, omega))
        .collect();
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]));
    let dim = monodromy.nrows();
    Ok(QuasiSpectrum {
        omega,
        quasienergies: order.iter().map(|&k| raw[k]).collect(),
        modes: CMatrix::from_fn(dim, dim, |r, c| vectors[(r, order[c])]),
        parity_expect: order.iter().map(|&k| parity[k]).collect(),
        unitarity_defect: defect,
        frame: ModeFrame::Monodromy,
    })
}

/// Spectrum of a Hermitian rotating-frame Hamiltonian, folded into the zone.
pub fn effective_spectrum(h_eff: &CMatrix, omega: f64) -> QuasiSpectrum {
    let (values, mut vectors) = eigh(h_eff);
    let groups = clusters(&values, CLUSTER_WIDTH, |a, b| (a - b).abs());
    let parity = parity_resolve(&mut vectors, &groups);
    let folded: Vec<f64> = values.iter().map(|&v| fold_quasienergy(v, omega)).collect();
    let mut order: Vec<usize> = (0..folded.len()).collect();
    order.sort_by(|&a, &b| folded[a].total_cmp(&folded[b]));
    let dim = h_eff.nrows();
    QuasiSpectrum {
        omega,
        quasienergies: order.iter().map(|&k| folded[k]).collect(),
        modes: CMatrix::from_fn(dim, dim, |r, c| vectors[(r, order[c])]),
        parity_expect: order.iter().map(|&k| parity[k]).collect(),
        unitarity_defect: 0.0,
        frame: ModeFrame::Rotating,
    }
}

/// One matched pair of the RWA comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RwaPair {
    pub quasienergy: f64,
    pub effective: f64,
    /// Distance on the zone circle.
    pub deviation: f64,
    /// `+1` or `-1`.
    pub parity: i8,
}

/// Pair two equally long sorted lists on the zone circle: sorted order up to
/// the cyclic shift with least total distance.
fn cyclic_match(numeric: &[f64], effective: &[f64], omega: f64) -> Vec<(f64, f64)> {
    let n = numeric.len();
    let best_shift = (0..n.max(1))
        .min_by(|&s1, &s2| {
            let cost = |s: usize| -> f64 {
                (0..n)
                    .map(|i| zone_distance(numeric[i], effective[(i + s) % n], omega))
                    .sum()
            };
            cost(s1).total_cmp(&cost(s2))
        })
        .unwrap_or(0);
    (0..n)
        .map(|i| (numeric[i], effective[(i + best_shift) % n]))
        .collect()
}

fn sector(parity: f64) -> i8 {
    if parity >= 0.0 {
        1
    } else {
        -1
    }
}

/// Numerical quasienergies against the folded spectrum of the closed-form
/// `m = 0` effective Hamiltonian, matched within parity sectors. Sorted by
/// quasienergy.
pub fn rwa_comparison(
    params: &ModelParams,
    ops: &CollectiveSpinOps,
    settings: &IntegratorSettings,
) -> Result<Vec<RwaPair>> {
    if params.m != 0 {
        return Err(Error::UnsupportedResonance(params.m));
    }
    let h0 = effective_h0_closed_form(params, ops)?;
    let u = monodromy(params, ops, settings)?;
    let numeric = quasienergies(&u.matrix, params.omega)?;
    let effective = effective_spectrum(&h0, params.omega);
    Ok(match_spectra(&numeric, &effective))
}

/// Pair two spectra of the same operator family by parity sector.
pub fn match_spectra(numeric: &QuasiSpectrum, effective: &QuasiSpectrum) -> Vec<RwaPair> {
    let omega = numeric.omega;
    let split = |s: &QuasiSpectrum, want: i8| -> Vec<f64> {
        s.quasienergies
            .iter()
            .zip(&s.parity_expect)
            .filter(|(_, &p)| sector(p) == want)
            .map(|(&e, _)| e)
            .collect()
    };
    let mut pairs = Vec::with_capacity(numeric.len());
    let sectors_agree = [1i8, -1]
        .iter()
        .all(|&s| split(numeric, s).len() == split(effective, s).len());
    if sectors_agree {
        for s in [1i8, -1] {
            let a = split(numeric, s);
            let b = split(effective, s);
            for (x, y) in cyclic_match(&a, &b, omega) {
                pairs.push(RwaPair {
                    quasienergy: x,
                    effective: y,
                    deviation: zone_distance(x, y, omega),
                    parity: s,
                });
            }
        }
    } else {
        // parity labels unreliable; match the full spectra
        let matched = cyclic_match(&numeric.quasienergies, &effective.quasienergies, omega);
        for ((x, y), &p) in matched.into_iter().zip(&numeric.parity_expect) {
            pairs.push(RwaPair {
                quasienergy: x,
                effective: y,
                deviation: zone_distance(x, y, omega),
                parity: sector(p),
            });
        }
    }
    pairs.sort_by(|a, b| a.quasienergy.total_cmp(&b.quasienergy));
    pairs
}

/// Largest deviation of an RWA comparison.
pub fn max_deviation(pairs: &[RwaPair]) -> f64 {
    pairs.iter().map(|p| p.deviation).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, commutator, expm_hermitian, frobenius};
    use crate::model::hamiltonian_at;
    use crate::spin::build_ops;

    #[test]
    fn fold_examples() {
        let w = 40.0;
        assert_eq!(fold_quasienergy(w, w), 0.0);
        assert!((fold_quasienergy(0.6 * w, w) + 0.4 * w).abs() < 1e-12);
        assert_eq!(fold_quasienergy(-w / 2.0, w), w / 2.0);
        assert_eq!(fold_quasienergy(w / 2.0, w), w / 2.0);
        assert!((fold_quasienergy(-3.7, w) + 3.7).abs() < 1e-14);
    }

    #[test]
    fn free_precession() {
        let p = ModelParams {
            h: -1.3,
            n_particles: 4,
            ..Default::default()
        };
        let ops = build_ops(4).unwrap();
        let t = 0.77;
        let u = propagator(&p, &ops, t, &IntegratorSettings::default()).unwrap();
        // H = -h Jz → U = exp(i h t Jz)
        let want = expm_hermitian(&(ops.jz() * c(-p.h)), t);
        assert!(frobenius(&(u.matrix - want)) < 1e-11);
    }

    #[test]
    fn spin_half_period_is_static_evolution() {
        let p = ModelParams {
            h: -1.0,
            gamma0x: 0.6,
            gamma1x: 25.0,
            gammay: -0.3,
            n_particles: 1,
            ..Default::default()
        };
        let ops = build_ops(1).unwrap();
        let period = p.period();
        let u = monodromy(&p, &ops, &IntegratorSettings::default()).unwrap();
        let shift = (p.gamma0x + p.gammay) / 4.0;
        let h_avg = ops.jz() * c(-p.h) - CMatrix::identity(2, 2) * c(shift);
        let want = expm_hermitian(&h_avg, period);
        assert!(frobenius(&(u.matrix - want)) < 1e-11);
    }

    #[test]
    fn monodromy_unitary_and_parity_symmetric() {
        let p = ModelParams::strong_drive(10);
        let ops = build_ops(10).unwrap();
        let u = monodromy(&p, &ops, &IntegratorSettings::default()).unwrap();
        assert!(u.unitarity_defect < 1e-9, "defect {}", u.unitarity_defect);
        assert!(frobenius(&commutator(&u.matrix, ops.parity())) < 1e-8);
    }

    #[test]
    fn free_precession_quasienergies() {
        let p = ModelParams {
            h: -1.0,
            n_particles: 2,
            ..Default::default()
        };
        let ops = build_ops(2).unwrap();
        let u = expm_hermitian(&(ops.jz() * c(-p.h)), p.period());
        let spec = quasienergies(&u, p.omega).unwrap();
        for (e, want) in spec.quasienergies.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((e - want).abs() < 1e-12);
        }
        for par in &spec.parity_expect {
            assert!((par.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let m = CMatrix::identity(3, 3) * c(1.1);
        assert!(matches!(quasienergies(&m, 40.0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn degenerate_modes_are_parity_resolved() {
        // identity monodromy: one fully degenerate cluster
        let spec = quasienergies(&CMatrix::identity(5, 5), 10.0).unwrap();
        assert!(spec.quasienergies.iter().all(|e| e.abs() < 1e-14));
        assert!(spec.parity_expect.iter().all(|p| (p.abs() - 1.0).abs() < 1e-12));
        let evens = spec.parity_expect.iter().filter(|&&p| p > 0.0).count();
        assert_eq!(evens, 3);
    }

    #[test]
    fn undriven_rwa_is_exact() {
        let p = ModelParams {
            gamma0x: 0.5,
            gammay: 0.8,
            n_particles: 10,
            ..Default::default()
        };
        let ops = build_ops(10).unwrap();
        let pairs = rwa_comparison(&p, &ops, &IntegratorSettings::default()).unwrap();
        assert_eq!(pairs.len(), 11);
        assert!(max_deviation(&pairs) < 1e-8);
    }

    #[test]
    fn cyclic_match_handles_zone_edge() {
        let w = 10.0;
        let numeric = [-4.99, -1.0, 2.0];
        let effective = [-1.01, 2.02, 4.995];
        let pairs = cyclic_match(&numeric, &effective, w);
        assert_eq!(pairs[0], (-4.99, 4.995));
        assert!((zone_distance(-4.99, 4.995, w) - 0.015).abs() < 1e-12);
    }

    #[test]
    fn banded_generator_matches_dense() {
        let p = ModelParams::strong_drive(7);
        let ops = build_ops(7).unwrap();
        let gen = LabGenerator::new(&p, &ops).unwrap();
        let y = CMatrix::from_fn(8, 3, |i, j| C64::new(i as f64 - j as f64, 0.3 * j as f64));
        let t = 0.013;
        let mut out = CMatrix::zeros(8, 3);
        gen.apply(t, &y, &mut out);
        let h = hamiltonian_at(&p, &ops, t).unwrap();
        let shift = gen.shift * gen.drive(t);
        let want = (h - CMatrix::identity(8, 8) * c(shift)) * &y * C64::new(0.0, -1.0);
        assert!(frobenius(&(out - want)) < 1e-10);
    }
}
