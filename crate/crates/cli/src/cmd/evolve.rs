use std::f64::consts::TAU;
use std::path::Path;

use anyhow::{bail, Result};
use cvsheet::evolution::{
    effective_coefficients, flat_surface_multiplier, measured_frequency, measured_growth_rate, normal_mode, step_linearized,
    write_trajectory_csv, FrozenModel, InterfaceState, NormalMode, StepOptions, Trajectory,
};
use cvsheet::fit::loglog_slope;
use cvsheet::spectral::{SpectralField, Torus};
use cvsheet::stability::{PhaseTrace, TwoPhaseTrace};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{field, EvolveConfig, PhaseConfig, RunConfig};
use crate::report::{create, Report};

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub sigma: f64,
    pub oracle: NormalMode,
    pub dt: f64,
    pub n_steps: usize,
    pub cfl_limit: f64,
    pub blew_up: bool,
    pub measured_frequency: Option<f64>,
    pub measured_growth_rate: Option<f64>,
    /// Largest `|(E + E~)(t) / (E + E~)(0) - 1|`.
    pub energy_drift: Option<f64>,
    /// Half the fitted slope of `log(E + E~)`.
    pub energy_growth_rate: Option<f64>,
}

fn phase(p: &PhaseConfig) -> PhaseTrace {
    PhaseTrace::uniform(1, p.rho, p.v, p.b, f64::INFINITY)
}

pub fn model(ev: &EvolveConfig, cfg: &RunConfig, sigma: f64) -> Result<FrozenModel> {
    let torus = Torus::new(ev.dim, ev.n)?;
    let trace = TwoPhaseTrace::single(ev.dim, phase(&ev.upper), phase(&ev.lower))?;
    trace.validate(cfg.eos.rho_floor)?;
    let coeffs = effective_coefficients(&trace, &torus)?;
    let bg = field(&torus, &ev.background)?;
    Ok(FrozenModel::new(coeffs, bg, sigma, cfg.cutoffs)?)
}

pub fn oracle(model: &FrozenModel, k: [i64; 2]) -> NormalMode {
    normal_mode(&model.coeffs, 0, [k[0] as f64, k[1] as f64], model.sigma, flat_surface_multiplier(k))
}

fn energy_stats(tr: &Trajectory) -> (Option<f64>, Option<f64>) {
    let total: Vec<(f64, f64)> = tr.points.iter().map(|p| (p.t, p.energy + p.energy_tilde)).collect();
    let Some(&(_, e0)) = total.first() else { return (None, None) };
    if !e0.is_finite() || e0 <= 0.0 {
        return (None, None);
    }
    let drift = total.iter().map(|(_, e)| (e / e0 - 1.0).abs()).fold(0.0, f64::max);
    let n = total.len() as f64;
    let (mt, ml) = (total.iter().map(|p| p.0).sum::<f64>() / n, total.iter().map(|p| p.1.ln()).sum::<f64>() / n);
    let cov: f64 = total.iter().map(|(t, e)| (t - mt) * (e.ln() - ml)).sum();
    let var: f64 = total.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    (Some(drift), (var > 0.0).then(|| 0.5 * cov / var))
}

/// One frozen-coefficient run of `periods` oscillation periods (or e-folding times).
pub fn run_one(ev: &EvolveConfig, cfg: &RunConfig, sigma: f64) -> Result<(RunSummary, Trajectory)> {
    let m = model(ev, cfg, sigma)?;
    let nm = oracle(&m, ev.step.mode);
    let scale = if nm.frequency > 0.0 {
        TAU / nm.frequency
    } else if nm.growth_rate > 0.0 {
        1.0 / nm.growth_rate
    } else {
        1.0
    };
    let limit = m.cfl_limit(ev.step.cfl);
    let dt = ev.dt.unwrap_or_else(|| limit.min(scale / 200.0));
    let n_steps = (ev.periods * scale / dt).ceil() as usize;
    let torus = m.coeffs.torus().clone();
    let psi = field(&torus, &ev.initial)?;
    let state = InterfaceState::new(psi, SpectralField::zeros(&torus), 0.0, sigma)?;
    let opts = StepOptions { dt, n_steps, ..ev.step };
    println!("sigma {sigma}: cfl limit {limit:.4e}, dt {dt:.4e}, {n_steps} steps");
    let tr = step_linearized(&state, &m, &opts)?;
    let t_end = tr.points.last().map(|p| p.t).unwrap_or(0.0);
    let (energy_drift, energy_growth_rate) = if opts.energies { energy_stats(&tr) } else { (None, None) };
    let summary = RunSummary {
        sigma,
        oracle: nm,
        dt,
        n_steps,
        cfl_limit: tr.cfl_limit,
        blew_up: tr.blew_up,
        measured_frequency: measured_frequency(&tr.points),
        measured_growth_rate: measured_growth_rate(&tr.points, 0.5 * t_end, t_end),
        energy_drift,
        energy_growth_rate,
    };
    Ok((summary, tr))
}

#[derive(Serialize)]
struct EvolveSummary {
    main: RunSummary,
    sweep: Vec<RunSummary>,
    sweep_slope: Option<f64>,
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let ev = &cfg.evolve;
    let (main, tr) = run_one(ev, cfg, ev.sigma)?;
    write_trajectory_csv(&tr.points, create(out, "trajectory.csv")?)?;

    let mut rep = Report::new("evolve", cfg);
    let nm = main.oracle;
    if nm.omega_sq > 0.0 {
        if nm.doppler == 0.0 {
            match main.measured_frequency {
                Some(w) => rep.below("frequency", (w / nm.frequency - 1.0).abs(), ev.frequency_tol),
                None => rep.failed("frequency", "fewer than three zero crossings"),
            }
        }
        if let Some(d) = main.energy_drift {
            rep.below("energy_drift", d, ev.drift_tol);
        }
        if let Some(g) = main.energy_growth_rate {
            rep.below("growth_bound", g.abs(), 1e-3);
        }
    } else if nm.omega_sq < 0.0 {
        match main.measured_growth_rate {
            Some(g) => rep.below("growth_rate", (g / nm.growth_rate - 1.0).abs(), ev.growth_tol),
            None => rep.failed("growth_rate", "too few recorded points"),
        }
    }

    let mut sweep = vec![];
    let mut sweep_slope = None;
    if !ev.sigma_sweep.is_empty() {
        let runs: Vec<Result<RunSummary>> = ev.sigma_sweep.par_iter().map(|&s| run_one(ev, cfg, s).map(|r| r.0)).collect();
        sweep = runs.into_iter().collect::<Result<Vec<_>>>()?;
        let mut pts: Vec<(f64, f64)> = vec![];
        for r in std::iter::once(&main).chain(&sweep) {
            match r.measured_frequency {
                Some(w) if r.sigma > 0.0 => pts.push((r.sigma, w)),
                _ => {}
            }
        }
        if pts.len() < 2 {
            bail!("surface-tension sweep needs at least two oscillating runs with sigma > 0");
        }
        let (s, w): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let slope = loglog_slope(&s, &w);
        rep.below("sigma_scaling", (slope - 0.5).abs(), 0.03);
        sweep_slope = Some(slope);
    }
    rep.set_result(EvolveSummary { main, sweep, sweep_slope })?;
    Ok(rep)
}
