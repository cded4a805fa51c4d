use std::path::Path;

use anyhow::Result;
use cvsheet::dtn::{flat_dtn_eigenvalue, DtnPair};
use cvsheet::geometry::{
    good_unknown_refinement, ibp_check, transport_refinement, Cutoff, FlattenOptions, Flattening, RefinementReport,
    TangentialIndex,
};
use cvsheet::paradiff::{bony_decompose, symmetrization_symbol_residual};
use cvsheet::spectral::{Mode, Phase, SlabGrid, SpectralField, Torus};
use cvsheet::stability::{
    check_stability_3d, ellipticity_form, hyperbolicity_check, hyperbolicity_matrix, min_eigenvalue, random_stable_3d,
    random_transverse_3d, random_violating_3d, solve_mu_3d, speeds, MarginOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::dtn::random_band;
use crate::config::RunConfig;
use crate::report::{Check, Report};

fn check(name: &str, passed: bool, value: f64, threshold: f64, detail: Option<String>) -> Check {
    Check { name: name.into(), passed, value, threshold, detail }
}

fn below(name: &str, value: f64, threshold: f64) -> Check {
    check(name, value <= threshold, value, threshold, None)
}

type Suite = fn(&RunConfig) -> cvsheet::Result<Vec<Check>>;

fn cutoffs(cfg: &RunConfig) -> cvsheet::Result<Vec<Check>> {
    let c = cfg.cutoffs;
    let detail = c.validate().err().map(|e| e.to_string());
    Ok(vec![check("cutoff_validity", detail.is_none(), c.eps2 - c.eps1, 0.0, detail)])
}

fn symbols(cfg: &RunConfig) -> cvsheet::Result<Vec<Check>> {
    let torus = Torus::new(3, 16)?;
    let psi = SpectralField::from_modes(&torus, &[Mode::sin(0.2, [1, 0])])?;
    let r = symmetrization_symbol_residual(&psi, 1000, cfg.seed)?;
    Ok(vec![below("symbol_symmetrization_order3", r.order3_max, 1e-10), below("symbol_symmetrization_order2", r.order2_max, 1e-10)])
}

/// Slope check with the spread of successive pairwise slopes as a confidence band.
fn slope_check(name: &str, r: &RefinementReport, min: f64) -> Check {
    let pair: Vec<f64> = r
        .steps
        .windows(2)
        .zip(r.residuals.windows(2))
        .map(|(s, e)| (e[1] / e[0]).ln() / (s[1] / s[0]).ln())
        .collect();
    let lo = pair.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pair.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    check(name, r.order >= min, r.order, min, Some(format!("pairwise slopes [{lo:.3}, {hi:.3}], finest residual {:.3e}", r.finest())))
}

fn good_unknown(cfg: &RunConfig) -> cvsheet::Result<Vec<Check>> {
    let v = &cfg.verify;
    let ns = [v.n, 2 * v.n, 4 * v.n];
    let indices = [
        ("good_unknown_d1", TangentialIndex { horizontal: [1, 0], weighted: 0 }),
        ("good_unknown_d1d1", TangentialIndex { horizontal: [2, 0], weighted: 0 }),
        ("good_unknown_d1_weighted", TangentialIndex { horizontal: [1, 0], weighted: 1 }),
    ];
    indices
        .iter()
        .map(|(name, idx)| Ok(slope_check(name, &good_unknown_refinement(cfg.grid.dim, &ns, v.nv, *idx)?, v.min_slope)))
        .collect()
}

fn transport(cfg: &RunConfig) -> cvsheet::Result<Vec<Check>> {
    let v = &cfg.verify;
    let grid = SlabGrid::new(cfg.grid.dim, 4 * v.n, v.nv, cfg.grid.half_height, cfg.grid.stretch)?;
    let r = transport_refinement(&grid, 1.0, &[4e-3, 2e-3, 1e-3])?;
    Ok(vec![
        below("transport_identity", r.finest(), v.identity_tol),
        slope_check("transport_order", &r, v.min_slope),
        below("integration_by_parts", ibp_check(&grid, 1.0)?, v.identity_tol),
    ])
}

fn bony(cfg: &RunConfig) -> cvsheet::Result<Vec<Check>> {
    let torus = Torus::new(cfg.grid.dim, 32)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..8 {
        let a = random_band(&torus, 6, &mut rng)?;
        let u = random_band(&torus, 6, &mut rng)?;
        let p = bony_decompose(&a, &u)?;
        let sum = &(&p.ta_u + &p.tu_a) + &p.remainder;
        worst = worst.max((&sum - &(&a * &u)).max_abs());
    }
    Ok(vec![below("bony_reconstruction", worst, 1e-12)])
}

fn mu(cfg: &RunConfig) -> cvsheet::Result<Vec<Check>> {
    let n = cfg.verify.mu_samples;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut jump, mut sign_mismatch) = (0.0f64, 0usize);
    for _ in 0..n {
        let t = random_transverse_3d(&mut rng)?;
        let m = solve_mu_3d(&t)?;
        jump = jump.max(m.jump_residual(&t));
        let sp = speeds(&t);
        for phase in Phase::BOTH {
            let p = t.phase(phase);
            let ca = match phase {
                Phase::Upper => sp.alfven_upper[0],
                Phase::Lower => sp.alfven_lower[0],
            };
            let mu = m.interface(phase)[0];
            let ratio = if p.cs[0].is_infinite() { 0.0 } else { ca / p.cs[0] };
            let predicted = 1.0 - mu * mu * p.rho[0] * (1.0 + ratio * ratio);
            let e = min_eigenvalue(hyperbolicity_matrix(mu, p.rho[0], ca, p.cs[0]));
            if predicted.abs() > 1e-12 && (e > 0.0) != (predicted > 0.0) {
                sign_mismatch += 1;
            }
        }
        // the aggregate report must agree with the per-phase eigenvalues
        let h = hyperbolicity_check(&t, &m);
        if h.hyperbolic != (h.min_eigenvalue_upper > 0.0 && h.min_eigenvalue_lower > 0.0) {
            sign_mismatch += 1;
        }
    }
    let opts = MarginOptions::new(cfg.stability.delta0);
    let mut non_elliptic = 0usize;
    let mut missed = 0usize;
    for _ in 0..n {
        let t = random_stable_3d(&mut rng, cfg.stability.delta0)?;
        if !(check_stability_3d(&t, opts)?.holds && ellipticity_form(&t, 1).infimum > 0.0) {
            non_elliptic += 1;
        }
        let t = random_violating_3d(&mut rng)?;
        let e = ellipticity_form(&t, 1);
        if check_stability_3d(&t, opts)?.holds || !(e.infimum < 0.0) || e.direction[0].hypot(e.direction[1]) < 0.5 {
            missed += 1;
        }
    }
    Ok(vec![
        below("mu_jump", jump, 1e-12),
        below("mu_hyperbolicity_sign", sign_mismatch as f64, 0.0),
        below("stability_implies_ellipticity", non_elliptic as f64, 0.0),
        below("violation_reports_direction", missed as f64, 0.0),
    ])
}

fn dtn_oracle(cfg: &RunConfig) -> cvsheet::Result<Vec<Check>> {
    let v = &cfg.verify;
    let grid = SlabGrid::new(cfg.grid.dim, 2 * v.n, v.nv, cfg.grid.half_height, cfg.grid.stretch)?;
    let psi = SpectralField::zeros(grid.torus());
    let geo = Flattening::new(&grid, &psi, &Cutoff::build(grid.half_height(), 0.0)?, FlattenOptions::default())?;
    let pair = DtnPair::new(&geo, cfg.krylov)?;
    let mut worst: f64 = 0.0;
    for k in 1..=8i64.min(v.n as i64 - 1) {
        let f = SpectralField::from_modes(grid.torus(), &[Mode::cos(1.0, [k, 0])])?;
        let want = flat_dtn_eigenvalue(k as f64, grid.half_height());
        for phase in Phase::BOTH {
            worst = worst.max((&pair.get(phase).apply(&f)? - &f.scale(want)).max_abs());
        }
    }
    Ok(vec![below("dtn_flat_oracle", worst, 1e-6)])
}

pub fn run(cfg: &RunConfig, _out: &Path) -> Result<Report> {
    let suites: Vec<(&str, Suite)> = vec![
        ("cutoffs", cutoffs),
        ("symbols", symbols),
        ("good_unknown", good_unknown),
        ("transport", transport),
        ("bony", bony),
        ("mu", mu),
        ("dtn", dtn_oracle),
    ];
    let results: Vec<Vec<Check>> = suites
        .par_iter()
        .map(|(name, f)| match f(cfg) {
            Ok(c) => c,
            Err(e) => vec![check(name, false, f64::NAN, f64::NAN, Some(e.to_string()))],
        })
        .collect();
    let mut rep = Report::new("verify", cfg);
    rep.checks = results.into_iter().flatten().collect();
    Ok(rep)
}
