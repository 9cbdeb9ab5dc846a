use rayon::prelude::*;
use serde_json::json;

use lmg_core::dynamics::{
    coherent_state_at, confinement, effective_evolution, evolve, evolve_states, project_trajectory,
    rotating_expectations, stroboscopic, Frame, Trajectory,
};
use lmg_core::floquet::rwa_comparison;
use lmg_core::landscape::{find_minima, landscape_grid, phase_diagram, PhaseAxis, STATIONARY_TOL};
use lmg_core::model::{oscillator_stability, resonance_detuning, symmetric_phase_oscillator};
use lmg_core::spin::{angles_to_qp, build_ops, coherent_state};
use lmg_core::ModelParams;

use crate::config::{Command, Initial, RunConfig, Sweep, SweepParam};
use crate::output::{Cell, Table};
use crate::CliError;

const OSCILLATOR_STEPS: usize = 4000;

pub fn run(cfg: &RunConfig) -> Result<Table, CliError> {
    match cfg.command {
        Command::Quasienergies => quasienergies(cfg),
        Command::PhaseDiagram => phase(cfg),
        Command::Landscape => landscape(cfg),
        Command::Minima => minima(cfg),
        Command::Evolve => evolve_cmd(cfg),
        Command::Stability => stability(cfg),
    }
}

fn no_sweeps(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.sweeps.is_empty() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} takes no --sweep", cfg.command.name())))
    }
}

fn quasienergies(cfg: &RunConfig) -> Result<Table, CliError> {
    let omegas = match cfg.sweeps.as_slice() {
        [] => vec![cfg.params.omega],
        [s] if s.param == SweepParam::Omega => s.values(),
        _ => return Err(CliError::Usage("quasienergies takes at most one sweep, over omega".into())),
    };
    let ops = build_ops(cfg.params.n_particles)?;
    let spectra = omegas
        .par_iter()
        .map(|&omega| {
            let p = ModelParams { omega, ..cfg.params };
            p.validate()?;
            rwa_comparison(&p, &ops, &cfg.settings)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new(&[
        "omega",
        "branch_index",
        "quasienergy",
        "effective_eigenvalue",
        "deviation",
        "parity",
    ]);
    for (omega, pairs) in omegas.iter().zip(spectra) {
        for (k, pair) in pairs.iter().enumerate() {
            t.push(vec![
                Cell::F(*omega),
                Cell::U(k),
                Cell::F(pair.quasienergy),
                Cell::F(pair.effective),
                Cell::F(pair.deviation),
                Cell::I(pair.parity as i64),
            ]);
        }
    }
    Ok(t)
}

fn phase_axis(s: &Sweep) -> Result<PhaseAxis, CliError> {
    Ok(PhaseAxis {
        param: s.param.axis()?,
        lo: s.lo,
        hi: s.hi,
        steps: s.steps,
    })
}

fn phase(cfg: &RunConfig) -> Result<Table, CliError> {
    let [a1, a2] = cfg.sweeps.as_slice() else {
        return Err(CliError::Usage("phase-diagram needs exactly two --sweep axes".into()));
    };
    let d = phase_diagram(&cfg.params, phase_axis(a1)?, phase_axis(a2)?, cfg.grid)?;
    let mut t = Table::new(&[
        "axis1",
        "axis2",
        "minima_count",
        "lambda1",
        "lambda2",
        "global_min_energy",
        "diagnostics",
    ]);
    t.notes = vec![("axis1", a1.param.name().into()), ("axis2", a2.param.name().into())];
    let mut extras = Vec::with_capacity(d.cells.len());
    for c in &d.cells {
        t.push(vec![
            Cell::F(c.value1),
            Cell::F(c.value2),
            Cell::I(c.count),
            Cell::F(c.lambda1),
            Cell::F(c.lambda2),
            Cell::F(c.global_min_energy),
            Cell::S(c.diagnostics.clone()),
        ]);
        extras.push(json!({ "report": c.report }));
    }
    t.row_extras = Some(extras);
    t.footer = vec![
        ("lambda1_zero", json!(d.lambda1_zero)),
        ("lambda2_zero", json!(d.lambda2_zero)),
    ];
    t.failed = d.failed_cells();
    Ok(t)
}

fn landscape(cfg: &RunConfig) -> Result<Table, CliError> {
    no_sweeps(cfg)?;
    let grid = landscape_grid(&cfg.params, cfg.grid)?;
    let mut t = Table::new(&["q", "p", "energy"]);
    for [q, p, e] in grid {
        t.push(vec![Cell::F(q), Cell::F(p), Cell::F(e)]);
    }
    Ok(t)
}

fn minima(cfg: &RunConfig) -> Result<Table, CliError> {
    no_sweeps(cfg)?;
    let report = find_minima(&cfg.params, cfg.grid, STATIONARY_TOL)?;
    let mut t = Table::new(&["q", "p", "energy", "hess_eig1", "hess_eig2", "class"]);
    for m in report.counted_points() {
        t.push(vec![
            Cell::F(m.q),
            Cell::F(m.p),
            Cell::F(m.energy),
            Cell::F(m.hessian_eigenvalues[0]),
            Cell::F(m.hessian_eigenvalues[1]),
            Cell::S(m.classification.as_str().into()),
        ]);
    }
    t.notes = vec![
        ("minima_count", report.count.to_string()),
        ("refinement_failures", report.failures.len().to_string()),
    ];
    t.footer = vec![("report", json!(report))];
    t.failed = report.failures.len();
    Ok(t)
}

fn evolve_cmd(cfg: &RunConfig) -> Result<Table, CliError> {
    no_sweeps(cfg)?;
    let p = cfg.params;
    let n = p.n_particles;
    let ops = build_ops(n)?;
    let (psi, origin) = match cfg.initial {
        Some(Initial::Angles { theta, phi }) => {
            let b = angles_to_qp(theta, phi);
            (coherent_state(n, theta, phi)?, [b.q, b.p])
        }
        Some(Initial::Minimum(k)) => {
            let points = find_minima(&p, cfg.grid, STATIONARY_TOL)?.counted_points();
            let m = points.get(k).ok_or_else(|| {
                CliError::Usage(format!("--minimum {k} out of range: the landscape has {} minima", points.len()))
            })?;
            (coherent_state_at(n, m.q, m.p)?, [m.q, m.p])
        }
        None => return Err(CliError::Usage("evolve needs --theta/--phi or --minimum".into())),
    };
    if cfg.periods == 0 {
        return Err(CliError::Usage("periods must be at least 1".into()));
    }
    let period = p.period();
    let sampled: Vec<f64> = (0..=cfg.periods * cfg.samples)
        .map(|k| k as f64 * period / cfg.samples as f64)
        .collect();
    let traj: Trajectory = match cfg.frame {
        Frame::Lab => evolve(&p, &ops, &psi, &sampled, &cfg.settings)?,
        Frame::Rotating => {
            let lab = evolve_states(&p, &ops, &psi, &sampled, &cfg.settings)?;
            rotating_expectations(&p, &ops, &lab)?
        }
        Frame::Stroboscopic => stroboscopic(&p, &ops, &psi, cfg.periods, &cfg.settings)?,
        Frame::Effective => effective_evolution(&p, &ops, &psi, &sampled)?,
    };
    let traj = project_trajectory(traj, n)?;
    let mut t = Table::new(&["t", "frame", "jx", "jy", "jz", "q", "p", "norm_drift", "parity_drift"]);
    let path = traj.qp_path.as_deref().unwrap_or(&[]);
    for k in 0..traj.len() {
        let (q, pp) = match path.get(k).copied().flatten() {
            Some([q, pp]) => (Cell::F(q), Cell::F(pp)),
            None => (Cell::Empty, Cell::Empty),
        };
        t.push(vec![
            Cell::F(traj.times[k]),
            Cell::S(traj.frame.as_str().into()),
            Cell::F(traj.jx[k]),
            Cell::F(traj.jy[k]),
            Cell::F(traj.jz[k]),
            q,
            pp,
            Cell::F(traj.norm_drift[k]),
            Cell::F(traj.parity_drift[k]),
        ]);
    }
    t.notes = vec![("origin", format!("{:?},{:?}", origin[0], origin[1]))];
    if p.m == 0 {
        t.footer.push(("confinement", json!(confinement(&p, &traj, origin)?)));
    }
    if let Some(drift) = &traj.generator_drift {
        let worst = drift.iter().copied().fold(0.0, f64::max);
        t.footer.push(("max_generator_drift", json!(worst)));
    }
    Ok(t)
}

fn stability(cfg: &RunConfig) -> Result<Table, CliError> {
    let points: Vec<ModelParams> = match cfg.sweeps.as_slice() {
        [s] => s
            .values()
            .into_iter()
            .map(|v| {
                let mut p = cfg.params;
                s.param.apply(&mut p, v);
                p
            })
            .collect(),
        [s1, s2] => {
            let (v1, v2) = (s1.values(), s2.values());
            v1.iter()
                .flat_map(|&a| {
                    v2.iter().map(move |&b| {
                        let mut p = cfg.params;
                        s1.param.apply(&mut p, a);
                        s2.param.apply(&mut p, b);
                        p
                    })
                })
                .collect()
        }
        _ => return Err(CliError::Usage("stability needs one or two --sweep axes".into())),
    };
    let reports = points
        .par_iter()
        .map(|p| {
            p.validate()?;
            let osc = symmetric_phase_oscillator(p);
            Ok((osc, oscillator_stability(&osc, OSCILLATOR_STEPS)?))
        })
        .collect::<Result<Vec<_>, lmg_core::Error>>()?;
    let mut t = Table::new(&[
        "h",
        "gx0",
        "gx1",
        "gy",
        "omega",
        "epsilon_sq",
        "drive_coeff",
        "monodromy_trace",
        "determinant",
        "stable",
        "delta_m0",
        "delta_m1",
        "delta_m2",
    ]);
    for (p, (osc, r)) in points.iter().zip(reports) {
        let delta = |m: u32| resonance_detuning(&ModelParams { m, ..*p }).delta;
        t.push(vec![
            Cell::F(p.h),
            Cell::F(p.gamma0x),
            Cell::F(p.gamma1x),
            Cell::F(p.gammay),
            Cell::F(p.omega),
            Cell::F(osc.epsilon_sq),
            Cell::F(osc.drive_coeff),
            Cell::F(r.monodromy_trace),
            Cell::F(r.determinant),
            Cell::B(r.stable),
            Cell::F(delta(0)),
            Cell::F(delta(1)),
            Cell::F(delta(2)),
        ]);
    }
    t.notes = vec![("oscillator_steps", OSCILLATOR_STEPS.to_string())];
    Ok(t)
}
