use std::path::Path;

use anyhow::{Context, Result};
use cvsheet::dtn::{flat_dtn_eigenvalue, resolved_project, DtnPair};
use cvsheet::geometry::{Cutoff, FlattenOptions, Flattening};
use cvsheet::io::{write_spectrum_csv, GeometryFile};
use cvsheet::spectral::{Mode, Phase, SlabGrid, SpectralField, Torus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{field, RunConfig};
use crate::report::{create, Report};

/// Smooth random mean-zero interface function.
pub fn random_field(torus: &Torus, rng: &mut impl Rng) -> cvsheet::Result<SpectralField> {
    random_band(torus, (torus.n() / 3).max(1) as i64, rng)
}

/// Six random modes with `1 <= k1 <= kmax` and `|k2| <= kmax`.
pub fn random_band(torus: &Torus, kmax: i64, rng: &mut impl Rng) -> cvsheet::Result<SpectralField> {
    let two = torus.axes() == 2;
    let modes: Vec<Mode> = (0..6)
        .map(|_| {
            let k = [rng.gen_range(1..=kmax), if two { rng.gen_range(-kmax..=kmax) } else { 0 }];
            let a = rng.gen_range(-1.0..1.0) / (1.0 + (k[0] * k[0] + k[1] * k[1]) as f64);
            if rng.gen_bool(0.5) {
                Mode::cos(a, k)
            } else {
                Mode::sin(a, k)
            }
        })
        .collect();
    SpectralField::from_modes(torus, &modes)
}

fn geometry(cfg: &RunConfig, base: Option<&Path>) -> Result<(SlabGrid, SpectralField)> {
    match &cfg.dtn.geometry {
        Some(p) => {
            let p = base.map(|b| b.join(p)).unwrap_or_else(|| p.clone());
            let f = std::fs::File::open(&p).with_context(|| format!("opening {}", p.display()))?;
            let g = GeometryFile::read(f)?;
            let grid = g.grid()?;
            let psi = g.psi(grid.torus())?;
            Ok((grid, psi))
        }
        None => {
            let grid = cfg.grid.build()?;
            let psi = field(grid.torus(), &cfg.dtn.psi)?;
            Ok((grid, psi))
        }
    }
}

#[derive(Serialize)]
struct DtnSummary {
    flat: bool,
    psi_sup: f64,
    oracle_error: Option<f64>,
    symmetry_residual: f64,
    min_d3phi: f64,
}

pub fn run(cfg: &RunConfig, base: Option<&Path>, out: &Path) -> Result<Report> {
    let (grid, psi) = geometry(cfg, base)?;
    let sup = psi.max_abs();
    let cutoff = Cutoff::build(grid.half_height(), sup.min(1.0))?;
    let geo = Flattening::new(&grid, &psi, &cutoff, FlattenOptions::default())?;
    GeometryFile::from_parts(&grid, &psi)?.write(create(out, "geometry.json")?)?;
    let pair = DtnPair::new(&geo, cfg.krylov)?;

    let f = resolved_project(&field(grid.torus(), &cfg.dtn.f)?);
    let up = pair.get(Phase::Upper).apply(&f)?;
    let lo = pair.get(Phase::Lower).apply(&f)?;
    let flat = sup == 0.0;
    let h = grid.half_height();
    let mut names = vec!["f", "dtn_upper", "dtn_lower"];
    let oracle = f.apply_multiplier(|k| flat_dtn_eigenvalue(k[0].hypot(k[1]), h));
    let mut fields = vec![&f, &up, &lo];
    if flat {
        names.push("flat_oracle");
        fields.push(&oracle);
    }
    write_spectrum_csv(&names, &fields, create(out, "dtn_spectrum.csv")?)?;

    let mut rep = Report::new("dtn", cfg);
    let oracle_error = if flat {
        let e = (&up - &oracle).max_abs().max((&lo - &oracle).max_abs()) / f.max_abs().max(1e-300);
        rep.below("flat_oracle", e, cfg.dtn.oracle_tol);
        Some(e)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..4 {
        let a = resolved_project(&random_field(grid.torus(), &mut rng)?);
        let b = resolved_project(&random_field(grid.torus(), &mut rng)?);
        for phase in Phase::BOTH {
            let op = pair.get(phase);
            let (na, nb) = (op.apply(&a)?, op.apply(&b)?);
            let scale = na.l2_norm() * b.l2_norm();
            worst = worst.max((na.dot(&b) - a.dot(&nb)).abs() / scale.max(1e-300));
        }
    }
    rep.below("symmetry", worst, cfg.dtn.symmetry_tol);
    rep.set_result(DtnSummary { flat, psi_sup: sup, oracle_error, symmetry_residual: worst, min_d3phi: geo.min_d3phi() })?;
    Ok(rep)
}
