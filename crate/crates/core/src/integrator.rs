//! Adaptive Gragg-Bulirsch-Stoer extrapolation for linear matrix ODEs
//! `dY/dt = F(t, Y)`.
//!
//! Each macro step runs the modified midpoint rule with the step sequence
//! `2, 4, ..., 2k` and extrapolates the results polynomially in `h²`,
//! giving order `2k`. The difference between the two highest diagonal
//! entries of the tableau drives the step size. Nothing is renormalised:
//! unitarity drift of the result is left visible to callers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Largest macro step as a fraction of the drive period.
    pub max_step_fraction: f64,
    /// Extrapolation columns `k`; the method has order `2k`.
    pub columns: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rtol: 1e-13,
            atol: 1e-13,
            max_step_fraction: 1.0 / 16.0,
            columns: 8,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        if !(self.max_step_fraction > 0.0 && self.max_step_fraction <= 1.0 / 16.0) {
            return Err(Error::invalid(format!(
                "max step fraction {} must lie in (0, 1/16]",
                self.max_step_fraction
            )));
        }
        if !(2..=12).contains(&self.columns) {
            return Err(Error::invalid(format!(
                "extrapolation columns {} outside 2..=12",
                self.columns
            )));
        }
        Ok(())
    }

    /// Same method with both tolerances halved.
    pub fn halved(&self) -> Self {
        IntegratorSettings {
            rtol: self.rtol / 2.0,
            atol: self.atol / 2.0,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const MAX_STEPS: usize = 5_000_000;

/// Integrate from `t0` through every time in `stops` (non-decreasing, all
/// `≥ t0`), calling `on_stop(index, t, y)` on arrival. `rhs(t, y, out)`
/// must write `F(t, y)` into `out`.
pub fn integrate<F, O>(
    rhs: F,
    y: &mut CMatrix,
    t0: f64,
    stops: &[f64],
    settings: &IntegratorSettings,
    max_step: f64,
    mut on_stop: O,
) -> Result<IntegrationStats>
where
    F: Fn(f64, &CMatrix, &mut CMatrix),
    O: FnMut(usize, f64, &CMatrix),
{
    settings.validate()?;
    if !(max_step > 0.0) {
        return Err(Error::invalid("max step must be positive"));
    }
    let mut stepper = Stepper::new(&rhs, y.nrows(), y.ncols(), settings.columns);
    let mut stats = IntegrationStats::default();
    let mut t = t0;
    let mut h = max_step / 4.0;
    for (idx, &stop) in stops.iter().enumerate() {
        if stop < t {
            return Err(Error::invalid(format!(
                "output times must be non-decreasing and ≥ {t0}, got {stop} after {t}"
            )));
        }
        while t < stop {
            if stats.accepted + stats.rejected > MAX_STEPS {
                return Err(Error::IntegrationAccuracy {
                    what: "step count",
                    value: MAX_STEPS as f64,
                    limit: MAX_STEPS as f64,
                });
            }
            let remaining = stop - t;
            let landing = h >= remaining * (1.0 - 1e-12);
            let step = if landing { remaining } else { h.min(max_step) };
            let err = stepper.step(t, y, step, settings);
            stats.evaluations = stepper.evaluations;
            if err <= 1.0 {
                stats.accepted += 1;
                std::mem::swap(y, &mut stepper.result);
                t = if landing { stop } else { t + step };
            } else {
                stats.rejected += 1;
            }
            let fac = if err.is_nan() {
                0.25
            } else if err == 0.0 {
                4.0
            } else {
                (0.94 * (0.65 / err).powf(1.0 / (2 * settings.columns - 1) as f64)).clamp(0.2, 4.0)
            };
            // keep the natural step when we only shortened it to land
            let base = if landing && err <= 1.0 { h.max(step) } else { step };
            h = (base * fac).min(max_step);
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::IntegrationAccuracy {
                    what: "step size",
                    value: h,
                    limit: 1e-14,
                });
            }
        }
        on_stop(idx, t, y);
    }
    Ok(stats)
}

struct Stepper<'a, F> {
    rhs: &'a F,
    f0: CMatrix,
    fbuf: CMatrix,
    z_prev: CMatrix,
    z_curr: CMatrix,
    table: Vec<CMatrix>,
    result: CMatrix,
    evaluations: usize,
}

impl<'a, F> Stepper<'a, F>
where
    F: Fn(f64, &CMatrix, &mut CMatrix),
{
    fn new(rhs: &'a F, rows: usize, cols: usize, columns: usize) -> Self {
        let zero = || CMatrix::zeros(rows, cols);
        Stepper {
            rhs,
            f0: zero(),
            fbuf: zero(),
            z_prev: zero(),
            z_curr: zero(),
            table: (0..columns).map(|_| zero()).collect(),
            result: zero(),
            evaluations: 0,
        }
    }

    /// One extrapolated macro step; leaves the candidate in `self.result`
    /// and returns the scaled error estimate.
    fn step(&mut self, t: f64, y: &CMatrix, big_h: f64, settings: &IntegratorSettings) -> f64 {
        let k = settings.columns;
        (self.rhs)(t, y, &mut self.f0);
        self.evaluations += 1;
        for j in 0..k {
            let n = 2 * (j + 1);
            self.midpoint(t, y, big_h, n);
            // Neville recursion: table[l] holds T_{j,l} after this loop,
            // result holds T_{j,0} before it starts.
            let mut current = std::mem::replace(&mut self.result, CMatrix::zeros(0, 0));
            for l in 1..=j {
                let ratio = n as f64 / (2 * (j - l + 1)) as f64;
                let denom = ratio * ratio - 1.0;
                let prev = &self.table[l - 1];
                let next = &current + (&current - prev) / C64::new(denom, 0.0);
                self.table[l - 1] = current;
                current = next;
            }
            self.table[j] = current;
        }
        // table[k-1] = T_{k,k}; compare with T_{k,k-1} which sits in table[k-2]
        let best = &self.table[k - 1];
        let lower = &self.table[k - 2];
        let mut err: f64 = 0.0;
        for ((b, l), y0) in best.iter().zip(lower.iter()).zip(y.iter()) {
            let scale = settings.atol + settings.rtol * b.norm().max(y0.norm());
            err = err.max((b - l).norm() / scale);
        }
        self.result = best.clone();
        err
    }

    /// Modified midpoint with `n` substeps over `big_h`; output in `self.result`.
    fn midpoint(&mut self, t: f64, y: &CMatrix, big_h: f64, n: usize) {
        let h = big_h / n as f64;
        let hc = C64::new(h, 0.0);
        let two_h = C64::new(2.0 * h, 0.0);
        self.z_prev.copy_from(y);
        self.z_curr.copy_from(y);
        add_scaled(&mut self.z_curr, hc, &self.f0);
        for m in 1..n {
            (self.rhs)(t + m as f64 * h, &self.z_curr, &mut self.fbuf);
            // z_{m+1} = z_{m-1} + 2h f(z_m), stored over z_prev then swapped
            add_scaled(&mut self.z_prev, two_h, &self.fbuf);
            std::mem::swap(&mut self.z_prev, &mut self.z_curr);
        }
        (self.rhs)(t + big_h, &self.z_curr, &mut self.fbuf);
        self.evaluations += n;
        // Gragg smoothing: (z_n + z_{n-1} + h f(z_n)) / 2
        let mut out = self.z_curr.clone();
        out += &self.z_prev;
        add_scaled(&mut out, hc, &self.fbuf);
        out *= C64::new(0.5, 0.0);
        self.result = out;
    }
}

/// `y += a x`
fn add_scaled(y: &mut CMatrix, a: C64, x: &CMatrix) {
    for (yi, xi) in y.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *yi += a * xi;
    }
}
