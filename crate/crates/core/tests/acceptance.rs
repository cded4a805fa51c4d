//! End-to-end acceptance run: one PASS/FAIL line per criterion.
//!
//! Reference values are computed here from closed forms (eigenvalues of 2x2 and
//! bordered 3x3 matrices, flat-slab and classical dispersion relations) rather than
//! taken from the library. Set `CVSHEET_ACCEPT_STRICT=1` to turn a FAIL into a
//! nonzero exit.

use std::f64::consts::TAU;
use std::time::Instant;

use cvsheet::dtn::{paralinearization_residual, DtnPair, KrylovOptions, ProbeFamily};
use cvsheet::eos::{EquationOfState, Polytropic};
use cvsheet::evolution::{
    effective_coefficients, energy_functionals, measured_frequency, measured_growth_rate, rho_coupling, step_linearized,
    FrozenModel, InterfaceState, StepOptions, Trajectory,
};
use cvsheet::fit::loglog_slope;
use cvsheet::geometry::{
    good_unknown_refinement, ibp_check, transport_refinement, Cutoff, FlattenOptions, Flattening, TangentialIndex,
};
use cvsheet::norms::{energy_layer, energy_pattern, EnergyHistory, EnergySettings};
use cvsheet::paradiff::{
    sample_table, symmetrization_symbol_residual, CurvatureRoot, CurvatureSymbol, GridJets, PLCutoffs, SummedDtnSymbol,
    Symbol, SymmetrizerM,
};
use cvsheet::spectral::{Mode, Phase, SlabGrid, SpectralField, Torus};
use cvsheet::stability::{
    check_stability_3d, ellipticity_form, hyperbolicity_check, random_stable_3d, random_transverse_3d,
    random_violating_3d, solve_mu_3d, MarginOptions, PhaseTrace, TwoPhaseTrace,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Smallest eigenvalue of `b+ b+^T + b- b-^T - rho+ rho- / (rho+ + rho-) [v][v]^T`.
fn form_min(t: &TwoPhaseTrace) -> f64 {
    let (rp, rm) = (t.upper.rho[0], t.lower.rho[0]);
    let (bp, bm) = (t.upper.b[0], t.lower.b[0]);
    let j = sub(t.upper.v[0], t.lower.v[0]);
    let w = rp * rm / (rp + rm);
    let m = |a: usize, c: usize| bp[a] * bp[c] + bm[a] * bm[c] - w * j[a] * j[c];
    let (a, b, d) = (m(0, 0), m(0, 1), m(1, 1));
    0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt()
}

fn quad(t: &TwoPhaseTrace, z: [f64; 2]) -> f64 {
    let (rp, rm) = (t.upper.rho[0], t.lower.rho[0]);
    let dot = |a: [f64; 2]| a[0] * z[0] + a[1] * z[1];
    dot(t.upper.b[0]).powi(2) + dot(t.lower.b[0]).powi(2) - rp * rm / (rp + rm) * dot(sub(t.upper.v[0], t.lower.v[0])).powi(2)
}

fn mu_consistency() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut jump, mut eig_err, mut mismatch) = (0.0f64, 0.0f64, 0usize);
    let n = 1000;
    for _ in 0..n {
        let t = random_transverse_3d(&mut rng).map_err(e)?;
        let mu = solve_mu_3d(&t).map_err(e)?;
        let (mp, mm) = (mu.upper[0], mu.lower[0]);
        let j = sub(t.upper.v[0], t.lower.v[0]);
        let (bp, bm) = (t.upper.b[0], t.lower.b[0]);
        jump = jump.max((j[0] - mp * bp[0] + mm * bm[0]).hypot(j[1] - mp * bp[1] + mm * bm[1]));
        let h = hyperbolicity_check(&t, &mu);
        for (p, m, got) in [(&t.upper, mp, h.min_eigenvalue_upper), (&t.lower, mm, h.min_eigenvalue_lower)] {
            let ca2 = (p.b[0][0].powi(2) + p.b[0][1].powi(2)) / p.rho[0];
            let r2 = if p.cs[0].is_infinite() { 0.0 } else { ca2 / p.cs[0].powi(2) };
            let q = m * m * p.rho[0] * (1.0 + r2);
            // [[1, x, y], [x, 1, 0], [y, 0, 1]] has spectrum {1, 1 +- sqrt(x^2 + y^2)}
            eig_err = eig_err.max((got - (1.0 - q.sqrt())).abs());
            if (1.0 - q).abs() > 1e-12 && (got > 0.0) != (1.0 - q > 0.0) {
                mismatch += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        jump < 1e-12 && mismatch == 0 && eig_err < 1e-12 && secs < 10.0,
        format!("{n} traces, jump {jump:.2e}, sign mismatches {mismatch}, eigenvalue error {eig_err:.2e}, {secs:.2}s"),
    ))
}

fn stability_ellipticity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = MarginOptions::new(0.1);
    let (mut bad_stable, mut bad_violating, mut worst_stable) = (0, 0, f64::INFINITY);
    for _ in 0..500 {
        let t = random_stable_3d(&mut rng, 0.1).map_err(e)?;
        let lam = form_min(&t);
        worst_stable = worst_stable.min(lam);
        if !check_stability_3d(&t, opts).map_err(e)?.holds || !(lam > 0.0) {
            bad_stable += 1;
        }
        let t = random_violating_3d(&mut rng).map_err(e)?;
        let rep = ellipticity_form(&t, 1);
        let z = rep.direction;
        let negative = form_min(&t) < 0.0 && quad(&t, z) < 0.0 && (quad(&t, z) - form_min(&t)).abs() < 1e-10;
        if check_stability_3d(&t, opts).map_err(e)?.holds || !negative {
            bad_violating += 1;
        }
    }
    Ok((
        bad_stable == 0 && bad_violating == 0,
        format!("500 stable (min form eigenvalue {worst_stable:.3e}), 500 violating; failures {bad_stable} / {bad_violating}"),
    ))
}

fn flat_slab(n: usize, nv: usize) -> Result<(SlabGrid, Flattening), String> {
    let grid = SlabGrid::new(3, n, nv, 20.0, 3.0).map_err(e)?;
    let psi = SpectralField::zeros(grid.torus());
    let geo = Flattening::new(&grid, &psi, &Cutoff::build(20.0, 0.0).map_err(e)?, FlattenOptions::default()).map_err(e)?;
    Ok((grid, geo))
}

fn symmetry(pair: &DtnPair, torus: &Torus, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = || {
        let modes: Vec<Mode> = (0..6)
            .map(|_| Mode::cos(rng.gen_range(-1.0..1.0), [rng.gen_range(1..6), rng.gen_range(-5..6)]))
            .collect();
        SpectralField::from_modes(torus, &modes)
    };
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let (a, b) = (field().map_err(e)?, field().map_err(e)?);
        for phase in Phase::BOTH {
            let op = pair.get(phase);
            let (na, nb) = (op.apply(&a).map_err(e)?, op.apply(&b).map_err(e)?);
            worst = worst.max((na.dot(&b) - a.dot(&nb)).abs() / (na.l2_norm() * b.l2_norm()));
        }
    }
    Ok(worst)
}

fn flat_dtn() -> Outcome {
    let (grid, geo) = flat_slab(32, 48)?;
    let pair = DtnPair::new(&geo, KrylovOptions::default()).map_err(e)?;
    let h = grid.half_height();
    let mut worst: f64 = 0.0;
    for k in 1..=8i64 {
        for kv in [[k, 0], [0, k]] {
            let f = SpectralField::from_modes(grid.torus(), &[Mode::cos(1.0, kv)]).map_err(e)?;
            let want = k as f64 * (h * k as f64).tanh();
            for phase in Phase::BOTH {
                let nf = pair.get(phase).apply(&f).map_err(e)?;
                worst = worst.max((&nf - &f.scale(want)).max_abs());
            }
        }
    }
    let sym = symmetry(&pair, grid.torus(), 3)?;
    Ok((worst < 1e-6 && sym < 1e-8, format!("eigenvalue error {worst:.2e} for k = 1..8, symmetry {sym:.2e}")))
}

fn paralinearization() -> Outcome {
    let grid = SlabGrid::new(3, 96, 64, 20.0, 3.0).map_err(e)?;
    let psi = SpectralField::from_modes(grid.torus(), &[Mode::sin(0.2, [1, 0])]).map_err(e)?;
    let geo = Flattening::new(&grid, &psi, &Cutoff::build(20.0, 0.2).map_err(e)?, FlattenOptions::default()).map_err(e)?;
    let pair = DtnPair::new(&geo, KrylovOptions::default()).map_err(e)?;
    let cut = PLCutoffs::default();
    let mut worst = f64::INFINITY;
    let mut parts = vec![];
    for phase in Phase::BOTH {
        let r = paralinearization_residual(&pair, &psi, phase, &[8, 16, 32], ProbeFamily::Transverse, &cut).map_err(e)?;
        worst = worst.min(r.residual.gain);
        parts.push(format!("{phase:?} gap {:.3}", r.residual.gain));
    }
    Ok((worst >= 1.0, format!("{} over k = 8, 16, 32", parts.join(", "))))
}

fn symbols() -> Outcome {
    let torus = Torus::new(3, 16).map_err(e)?;
    let psi = SpectralField::from_modes(&torus, &[Mode::sin(0.2, [1, 0]), Mode::cos(0.05, [1, 2])]).map_err(e)?;
    let r = symmetrization_symbol_residual(&psi, 1000, 5).map_err(e)?;
    let re_m = sample_table(&SymmetrizerM, &psi, 8.0, 6)
        .map_err(e)?
        .iter()
        .map(|s| s.subprincipal[0].abs())
        .fold(0.0, f64::max);
    let jets = GridJets::from_psi(&psi);
    let mut root: f64 = 0.0;
    for h in 0..torus.len() {
        for a in 0..6 {
            let th = TAU * a as f64 / 12.0;
            let p = jets.point(h, [8.0 * th.cos(), 8.0 * th.sin()]);
            let c = CurvatureRoot.principal(&p).re * SummedDtnSymbol.principal(&p).re;
            root = root.max((CurvatureSymbol.principal(&p).re - c * c).abs());
        }
    }
    Ok((
        r.order3_max < 1e-10 && r.order2_max < 1e-10 && re_m == 0.0 && root < 1e-12,
        format!(
            "{} samples: order3 {:.2e}, order2 {:.2e}, max |Re m_(1/2)| {re_m:.1e}, h2 defect {root:.2e}",
            r.samples, r.order3_max, r.order2_max
        ),
    ))
}

struct Layers {
    rho: [f64; 2],
    v: [[f64; 2]; 2],
    b: [[f64; 2]; 2],
}

fn evolve(l: &Layers, sigma: f64, mode: [i64; 2], periods: f64, scale: f64) -> Result<(Trajectory, f64), String> {
    let torus = Torus::new(2, 32).map_err(e)?;
    let ph = |i: usize| PhaseTrace::uniform(1, l.rho[i], l.v[i], l.b[i], f64::INFINITY);
    let trace = TwoPhaseTrace::single(2, ph(0), ph(1)).map_err(e)?;
    let coeffs = effective_coefficients(&trace, &torus).map_err(e)?;
    let model = FrozenModel::new(coeffs, SpectralField::zeros(&torus), sigma, PLCutoffs::default()).map_err(e)?;
    let dt = model.cfl_limit(0.5).min(scale / 200.0);
    let psi = SpectralField::from_modes(&torus, &[Mode::cos(1e-6, mode)]).map_err(e)?;
    let state = InterfaceState::new(psi, SpectralField::zeros(&torus), 0.0, sigma).map_err(e)?;
    let n_steps = (periods * scale / dt).ceil() as usize;
    let opts = StepOptions { dt, n_steps, record_every: 1, mode, ..Default::default() };
    Ok((step_linearized(&state, &model, &opts).map_err(e)?, dt * n_steps as f64))
}

fn dispersion() -> Outcome {
    let k = 4.0f64;
    let still = |rho: [f64; 2]| Layers { rho, v: [[0.0; 2]; 2], b: [[0.0; 2]; 2] };
    let mut slowest: f64 = 0.0;
    let mut timed = |f: &mut dyn FnMut() -> Result<f64, String>| -> Result<f64, String> {
        let s = Instant::now();
        let r = f()?;
        slowest = slowest.max(s.elapsed().as_secs_f64());
        Ok(r)
    };
    // capillary waves on a deep two-layer interface: omega^2 = sigma k^3 / (rho+ + rho-)
    let capillary = |sigma: f64| -> Result<f64, String> {
        let rho = [1.0, 1.5];
        let w = (sigma * k.powi(3) / (rho[0] + rho[1])).sqrt();
        let (tr, _) = evolve(&still(rho), sigma, [4, 0], 10.0, TAU / w)?;
        measured_frequency(&tr.points).ok_or("no oscillation".to_string()).map(|m| m / w)
    };
    let ratio = timed(&mut || capillary(0.1))?;
    let sigmas = [0.05, 0.1, 0.2, 0.4];
    let mut freqs = vec![];
    for s in sigmas {
        let r = timed(&mut || capillary(s))?;
        freqs.push(r * (s * k.powi(3) / 2.5).sqrt());
    }
    let slope = loglog_slope(&sigmas, &freqs);

    // Kelvin-Helmholtz: gamma = k |[v]| sqrt(rho+ rho-) / (rho+ + rho-)
    let kh = Layers { rho: [1.0, 2.0], v: [[0.5, 0.0], [-0.5, 0.0]], b: [[0.0; 2]; 2] };
    let gamma = k * 1.0 * (2.0f64).sqrt() / 3.0;
    let growth = timed(&mut || {
        let (tr, t) = evolve(&kh, 0.0, [4, 0], 6.0, 1.0 / gamma)?;
        measured_growth_rate(&tr.points, 0.5 * t, t).ok_or("no growth".to_string())
    })?;

    // field-stabilized shear: energy over ten periods
    let mhd = Layers { rho: [1.0, 1.0], v: [[0.2, 0.0], [-0.2, 0.0]], b: [[1.0, 0.0], [0.9, 0.3]] };
    let w = ((16.0 + 0.81 * 16.0) / 2.0 - 0.64f64).sqrt();
    let drift = timed(&mut || {
        let (tr, _) = evolve(&mhd, 0.0, [4, 0], 10.0, TAU / w)?;
        let e0 = tr.points[0].energy + tr.points[0].energy_tilde;
        Ok(tr.points.iter().map(|p| ((p.energy + p.energy_tilde) / e0 - 1.0).abs()).fold(0.0, f64::max))
    })?;

    let ok = (ratio - 1.0).abs() < 0.01
        && (slope - 0.5).abs() <= 0.03
        && (growth / gamma - 1.0).abs() < 0.05
        && drift < 0.01
        && slowest < 60.0;
    Ok((
        ok,
        format!(
            "capillary ratio {ratio:.6}, sqrt(sigma) slope {slope:.4}, KH growth {growth:.4} vs {gamma:.4}, drift {drift:.2e}, slowest run {slowest:.2}s"
        ),
    ))
}

fn random_small(torus: &Torus, rng: &mut ChaCha8Rng) -> Result<SpectralField, String> {
    let modes: Vec<Mode> = (0..5)
        .map(|_| {
            let kv = [rng.gen_range(1..4), rng.gen_range(-3..4)];
            Mode::sin(0.1 * rng.gen_range(-1.0..1.0), kv)
        })
        .collect();
    SpectralField::from_modes(torus, &modes).map_err(e)
}

fn energy_sign() -> Outcome {
    let torus = Torus::new(3, 16).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..200 {
        let t = random_stable_3d(&mut rng, 0.1).map_err(e)?;
        let model = FrozenModel::flat(effective_coefficients(&t, &torus).map_err(e)?, 0.1).map_err(e)?;
        let state = InterfaceState::new(random_small(&torus, &mut rng)?, random_small(&torus, &mut rng)?, 0.0, 0.1).map_err(e)?;
        let r = energy_functionals(&state, &model).map_err(e)?;
        min_ratio = min_ratio.min(r.energy_tilde / (r.energy + r.energy_tilde.abs()));
    }
    let t = random_violating_3d(&mut rng).map_err(e)?;
    let z = ellipticity_form(&t, 1).direction;
    let model = FrozenModel::flat(effective_coefficients(&t, &torus).map_err(e)?, 0.1).map_err(e)?;
    let kv = [(6.0 * z[0]).round() as i64, (6.0 * z[1]).round() as i64];
    let psi = SpectralField::from_modes(&torus, &[Mode::cos(0.01, kv)]).map_err(e)?;
    let r = energy_functionals(&InterfaceState::new(psi, SpectralField::zeros(&torus), 0.0, 0.1).map_err(e)?, &model)
        .map_err(e)?;
    let align = r.negative_direction.map(|d| (d[0] * z[0] + d[1] * z[1]).abs()).unwrap_or(0.0);
    Ok((
        min_ratio >= -1e-12 && r.energy_tilde < 0.0 && align > 1.0 - 1e-9,
        format!("min E~/(E+|E~|) {min_ratio:.3e} on 200 stable pairs; violating E~ {:.3e}, alignment {align:.12}", r.energy_tilde),
    ))
}

fn good_unknown() -> Outcome {
    let idx = |h: [u8; 2], w: u8| TangentialIndex { horizontal: h, weighted: w };
    let cases = [idx([1, 0], 0), idx([0, 1], 0), idx([2, 0], 0), idx([1, 1], 0), idx([1, 0], 1)];
    let mut worst = f64::INFINITY;
    let mut parts = vec![];
    for c in cases {
        let r = good_unknown_refinement(3, &[16, 32, 64], 96, c).map_err(e)?;
        worst = worst.min(r.order);
        parts.push(format!("{:?}+{}w {:.3}", c.horizontal, c.weighted, r.order));
    }
    Ok((worst >= 1.8, parts.join(", ")))
}

fn transport() -> Outcome {
    let grid = SlabGrid::new(3, 64, 64, 20.0, 3.0).map_err(e)?;
    let r = transport_refinement(&grid, 1.0, &[4e-3, 2e-3, 1e-3]).map_err(e)?;
    let ibp = ibp_check(&grid, 1.0).map_err(e)?;
    Ok((
        r.finest() < 1e-6 && ibp < 1e-6 && (r.order - 2.0).abs() < 0.1,
        format!("residuals {:.2e}, order {:.3}, integration by parts {ibp:.2e}", r.finest(), r.order),
    ))
}

fn patterns() -> Outcome {
    let mut bad = 0;
    for n in 2..=4usize {
        for l in 0..=n {
            for t in &energy_pattern(n, l, 2).interior {
                let twice = (t.k as i64 + t.alpha.time as i64 - l as i64 - (n as i64 - 1)).max(0) as usize;
                if t.pressure_exponent_x2 != twice || t.eps_power != 2 * l {
                    bad += 1;
                }
            }
        }
    }
    let grid = SlabGrid::new(3, 16, 16, 20.0, 3.0).map_err(e)?;
    let eos = Polytropic::new(1.4, 1.0, 0.1, 1e-8).map_err(e)?;
    let eos: Option<&dyn EquationOfState> = Some(&eos);
    let hist = EnergyHistory::travelling_wave(&grid, [1.0, 0.5, 0.2, 0.3], 7, 0.05, 0.1);
    let eps = [0.05, 0.1, 0.2, 0.4];
    let mut worst: f64 = 0.0;
    let mut slopes = vec![];
    for l in 0..=2 {
        let vals: Vec<f64> = eps
            .iter()
            .map(|&x| energy_layer(&hist, eos, &EnergySettings { eps: x, sigma: 0.1, base_order: 2 }, l).map(|y| y.interior))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let s = loglog_slope(&eps, &vals);
        worst = worst.max((s - 4.0 * l as f64).abs());
        slopes.push(format!("{s:.4}"));
    }
    Ok((bad == 0 && worst <= 0.1, format!("pattern mismatches {bad}, eps slopes [{}]", slopes.join(", "))))
}

fn rho_coupling_slope() -> Outcome {
    let grid = SlabGrid::new(3, 32, 32, 20.0, 3.0).map_err(e)?;
    let t = grid.torus();
    let psi = SpectralField::from_modes(t, &[Mode::sin(0.2, [1, 0]), Mode::cos(0.1, [0, 1])]).map_err(e)?;
    let geo = Flattening::new(&grid, &psi, &Cutoff::build(20.0, 0.3).map_err(e)?, FlattenOptions::default()).map_err(e)?;
    let pair = DtnPair::new(&geo, KrylovOptions::default()).map_err(e)?;
    let shape = SpectralField::from_modes(t, &[Mode::cos(1.0, [0, 0]), Mode::cos(0.3, [1, 1])]).map_err(e)?;
    let psi_tt = SpectralField::from_modes(t, &[Mode::cos(1.0, [2, 0]), Mode::sin(0.5, [1, 2])]).map_err(e)?;
    let jumps = [0.01, 0.03, 0.1, 0.3, 1.0];
    let norms: Vec<f64> = jumps
        .iter()
        .map(|&j| rho_coupling(&pair, &shape.scale(j), &psi_tt).map(|c| c.l2_norm()))
        .collect::<Result<_, _>>()
        .map_err(e)?;
    let s = loglog_slope(&jumps, &norms);
    Ok(((s - 1.0).abs() <= 0.05 && norms[0] > 0.0, format!("slope {s:.6}, norm at |[rho]| = 1: {:.3e}", norms[4])))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("mu_consistency", mu_consistency),
        ("stability_implies_ellipticity", stability_ellipticity),
        ("flat_dtn", flat_dtn),
        ("paralinearization_gap", paralinearization),
        ("symbol_symmetrization", symbols),
        ("dispersion", dispersion),
        ("energy_sign", energy_sign),
        ("good_unknown_order", good_unknown),
        ("transport_identity", transport),
        ("weight_pattern", patterns),
        ("rho_coupling", rho_coupling_slope),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|err| (false, format!("error: {err}")));
        failed += usize::from(!ok);
        let verdict = if ok { "PASS" } else { "FAIL" };
        println!("{verdict} {:>2} {name}: {detail} [{:.1}s]", i + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("CVSHEET_ACCEPT_STRICT").is_some() {
        std::process::exit(1);
    }
}
