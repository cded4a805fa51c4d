use std::path::Path;

use anyhow::Result;
use cvsheet::eos::EquationOfState;
use cvsheet::evolution::{effective_coefficients, energy_functionals, FrozenModel, InterfaceState};
use cvsheet::fit::loglog_slope;
use cvsheet::norms::{
    anisotropic_norm_terms, energy_layer, energy_pattern, layered_energy, weak_energy, write_energy_table, write_norm_table,
    EnergyHistory, EnergySettings, FieldHistory,
};
use cvsheet::spectral::{Mode, SlabGrid, SpectralField, Torus};
use cvsheet::stability::{ellipticity_form, random_stable_3d, random_violating_3d};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::dtn::random_field;
use crate::config::RunConfig;
use crate::report::{create, Report};

/// Weight-pattern entries disagreeing with `(k + alpha_0 - l - (N - 1))_+ / 2`, eps power
/// `2l` and Sobolev index `N - k - l`, for base orders `2..=4`.
pub fn pattern_mismatches(axes: usize) -> usize {
    let mut bad = 0;
    for n in 2..=4usize {
        for l in 0..=n {
            let pat = energy_pattern(n, l, axes);
            for t in &pat.interior {
                let e = (t.k as i64 + t.alpha.time as i64 - l as i64 - (n as i64 - 1)).max(0) as f64 / 2.0;
                if t.pressure_exponent() != e || t.eps_power != 2 * l || t.sobolev != n - t.k - l || t.alpha.weight() != 2 * l {
                    bad += 1;
                }
            }
        }
    }
    bad
}

#[derive(Serialize)]
struct LayerSweep {
    l: usize,
    eps: Vec<f64>,
    interior: Vec<f64>,
    slope: f64,
}

#[derive(Serialize)]
struct Positivity {
    samples: usize,
    min_ratio: f64,
    violating_energy_tilde: f64,
    violating_direction: Option<[f64; 2]>,
    ellipticity_direction: [f64; 2],
    alignment: f64,
}

#[derive(Serialize)]
struct EnergiesSummary {
    pattern_mismatches: usize,
    sweeps: Vec<LayerSweep>,
    weak_base: f64,
    weak_extended: f64,
    positivity: Positivity,
}

fn positivity(cfg: &RunConfig) -> Result<Positivity> {
    let en = &cfg.energies;
    let torus = Torus::new(3, 16)?;
    let ratios: Vec<f64> = (0..en.positivity_samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            let trace = random_stable_3d(&mut rng, cfg.stability.delta0)?;
            let model = FrozenModel::flat(effective_coefficients(&trace, &torus)?, en.sigma)?;
            let psi = random_field(&torus, &mut rng)?.scale(0.1);
            let psi_t = random_field(&torus, &mut rng)?.scale(0.1);
            let e = energy_functionals(&InterfaceState::new(psi, psi_t, 0.0, en.sigma)?, &model)?;
            Ok(e.energy_tilde / (e.energy + e.energy_tilde.abs()).max(1e-300))
        })
        .collect::<Result<_>>()?;
    let min_ratio = ratios.iter().cloned().fold(f64::INFINITY, f64::min);

    // a violating pair probed along the direction where the form is negative
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let trace = random_violating_3d(&mut rng)?;
    let ell = ellipticity_form(&trace, 1);
    let z = ell.direction;
    let k = [(6.0 * z[0]).round() as i64, (6.0 * z[1]).round() as i64];
    let model = FrozenModel::flat(effective_coefficients(&trace, &torus)?, en.sigma)?;
    let psi = SpectralField::from_modes(&torus, &[Mode::cos(0.01, k)])?;
    let e = energy_functionals(&InterfaceState::new(psi, SpectralField::zeros(&torus), 0.0, en.sigma)?, &model)?;
    let alignment = e.negative_direction.map(|d| (d[0] * z[0] + d[1] * z[1]).abs()).unwrap_or(0.0);
    Ok(Positivity {
        samples: ratios.len(),
        min_ratio,
        violating_energy_tilde: e.energy_tilde,
        violating_direction: e.negative_direction,
        ellipticity_direction: z,
        alignment,
    })
}

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Report> {
    let en = &cfg.energies;
    let grid = SlabGrid::new(cfg.grid.dim, en.n, en.nv, cfg.grid.half_height, cfg.grid.stretch)?;
    let eos = cfg.eos.build()?;
    let eos_ref: Option<&dyn EquationOfState> = Some(&eos);
    let history = EnergyHistory::travelling_wave(&grid, [1.0, 0.5, 0.2, 0.3], en.levels, en.dt, 0.1);
    let settings = |eps: f64| EnergySettings { eps, sigma: en.sigma, base_order: en.base_order };

    let mut rep = Report::new("energies", cfg);
    let mismatches = pattern_mismatches(grid.torus().axes());
    rep.below("weight_pattern", mismatches as f64, 0.0);

    let mut sweeps = vec![];
    for l in 0..=en.base_order {
        let interior: Vec<f64> = en
            .eps_sweep
            .par_iter()
            .map(|&e| energy_layer(&history, eos_ref, &settings(e), l).map(|x| x.interior))
            .collect::<cvsheet::Result<_>>()?;
        let slope = loglog_slope(&en.eps_sweep, &interior);
        if en.eps_sweep.len() >= 2 {
            rep.below(&format!("eps_slope_layer_{l}"), (slope - 4.0 * l as f64).abs(), en.slope_tol);
        }
        sweeps.push(LayerSweep { l, eps: en.eps_sweep.clone(), interior, slope });
    }

    let eps0 = en.eps_sweep[0];
    let layers = layered_energy(&history, eos_ref, &settings(eps0))?;
    write_energy_table(&layers, create(out, "energy_terms.csv")?)?;
    let c = history.levels() / 2;
    let v1 = FieldHistory::new(history.upper.iter().map(|s| s.v[0].clone()).collect(), en.dt)?;
    let m = 2.min(c);
    write_norm_table(m, &anisotropic_norm_terms(&v1, m)?, create(out, "norm_terms.csv")?)?;
    let weak = weak_energy(&history, eos_ref, &settings(eps0))?;
    rep.above("weak_extension", weak.extended - weak.base, 0.0);

    let pos = positivity(cfg)?;
    rep.push(
        "energy_tilde_positive",
        pos.min_ratio >= -1e-12,
        pos.min_ratio,
        -1e-12,
        Some(format!("{} stable samples", pos.samples)),
    );
    rep.push(
        "energy_tilde_negative_direction",
        pos.violating_energy_tilde < 0.0 && pos.alignment > 1.0 - 1e-9,
        pos.alignment,
        1.0 - 1e-9,
        Some(format!("E~ = {:.4e} on the violating pair", pos.violating_energy_tilde)),
    );
    rep.set_result(EnergiesSummary {
        pattern_mismatches: mismatches,
        sweeps,
        weak_base: weak.base,
        weak_extended: weak.extended,
        positivity: pos,
    })?;
    Ok(rep)
}
