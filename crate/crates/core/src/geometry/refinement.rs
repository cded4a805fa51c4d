//! Manufactured-solution refinement studies for the flattening identities.

use serde::Serialize;

use super::identities::{good_unknown_residual, ibp_residual, transport_identity_check, TangentialIndex, TimeLevel};
use super::{Cutoff, FlattenOptions, Flattening};
use crate::error::{invalid, Result};
use crate::fit::loglog_slope;
use crate::spectral::{BulkField, Mode, Phase, SlabGrid, SpectralField};

#[derive(Clone, Debug, Serialize)]
pub struct RefinementReport {
    /// Mesh parameter of each run (horizontal spacing or time step).
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of `log residual` against `log step`.
    pub order: f64,
}

impl RefinementReport {
    fn new(steps: Vec<f64>, residuals: Vec<f64>) -> Self {
        let order = loglog_slope(&steps, &residuals);
        Self { steps, residuals, order }
    }

    pub fn finest(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::NAN)
    }
}

const HALF_HEIGHT: f64 = 20.0;

fn manufactured_psi(grid: &SlabGrid) -> Result<SpectralField> {
    let mut modes = vec![Mode::sin(0.2, [1, 0])];
    if grid.dim() == 3 {
        modes.push(Mode::cos(0.1, [1, 1]));
    }
    SpectralField::from_modes(grid.torus(), &modes)
}

/// Good-unknown residual for `f = sin(x1 + 0.3) cos(2 x2) exp(-|x3| / 5)` about
/// `psi = 0.2 sin x1 + 0.1 cos(x1 + x2)`, over horizontal resolutions `ns` at fixed `nv`.
pub fn good_unknown_refinement(dim: usize, ns: &[usize], nv: usize, index: TangentialIndex) -> Result<RefinementReport> {
    if ns.len() < 2 {
        return Err(invalid("ns", "need at least two resolutions"));
    }
    let mut steps = Vec::with_capacity(ns.len());
    let mut residuals = Vec::with_capacity(ns.len());
    for &n in ns {
        let grid = SlabGrid::new(dim, n, nv, HALF_HEIGHT, 3.0)?;
        let psi = manufactured_psi(&grid)?;
        let geo = Flattening::new(&grid, &psi, &Cutoff::build(HALF_HEIGHT, psi.max_abs())?, FlattenOptions::default())?;
        let mut worst: f64 = 0.0;
        for phase in Phase::BOTH {
            let f = BulkField::from_fn(&grid, phase, |x| (x[0] + 0.3).sin() * (2.0 * x[1]).cos() * (-x[2].abs() / 5.0).exp());
            worst = worst.max(good_unknown_residual(&geo, &f, index)?.residual);
        }
        steps.push(grid.torus().spacing());
        residuals.push(worst);
    }
    Ok(RefinementReport::new(steps, residuals))
}

/// Transport identity for the moving interface `psi(t) = 0.1 t sin x1` at `t0`, with
/// `f`, `g` pulled back from fixed physical fields, over time steps `dts`.
pub fn transport_refinement(grid: &SlabGrid, t0: f64, dts: &[f64]) -> Result<RefinementReport> {
    if dts.len() < 2 {
        return Err(invalid("dts", "need at least two time steps"));
    }
    let amp = 0.1 * (t0.abs() + dts.iter().cloned().fold(0.0, f64::max));
    let cutoff = Cutoff::build(grid.half_height(), amp.min(1.0))?;
    let psi_t = SpectralField::from_modes(grid.torus(), &[Mode::sin(0.1, [1, 0])])?;
    let mut residuals = Vec::with_capacity(dts.len());
    for &dt in dts {
        let mut worst: f64 = 0.0;
        for phase in Phase::BOTH {
            let level = |t: f64| -> Result<TimeLevel> {
                let psi = SpectralField::from_modes(grid.torus(), &[Mode::sin(0.1 * t, [1, 0])])?;
                let geo = Flattening::new(grid, &psi, &cutoff, FlattenOptions::default())?;
                let phi = &geo.phase(phase).phi;
                let x1 = BulkField::from_fn(grid, phase, |x| x[0]);
                let x2 = BulkField::from_fn(grid, phase, |x| x[1]);
                let f = x1.zip_map(phi, |a, p| (a + t).sin() * (-p.abs() / 6.0).exp());
                let g = x2.zip_map(phi, |a, p| (1.0 + 0.5 * (a - 0.3 * t).cos()) * (p / 9.0).cos());
                Ok(TimeLevel { psi, f, g })
            };
            let levels = [level(t0 - dt)?, level(t0)?, level(t0 + dt)?];
            let r = transport_identity_check(grid, &cutoff, &levels, dt, Some(&psi_t))?;
            worst = worst.max(r.residual);
        }
        residuals.push(worst);
    }
    Ok(RefinementReport::new(dts.to_vec(), residuals))
}

/// Largest integration-by-parts residual over both phases and every direction, on the
/// interface `0.1 t0 sin x1`.
pub fn ibp_check(grid: &SlabGrid, t0: f64) -> Result<f64> {
    let psi = SpectralField::from_modes(grid.torus(), &[Mode::sin(0.1 * t0, [1, 0])])?;
    let geo = Flattening::new(grid, &psi, &Cutoff::build(grid.half_height(), psi.max_abs().min(1.0))?, FlattenOptions::default())?;
    let mut worst: f64 = 0.0;
    for phase in Phase::BOTH {
        let f = BulkField::from_fn(grid, phase, |x| x[0].cos() * (x[2] / 7.0).cos() + 0.2 * x[1].sin());
        let g = BulkField::from_fn(grid, phase, |x| (2.0 * x[0]).sin() + x[2] / 20.0);
        for i in 0..grid.dim() {
            worst = worst.max(ibp_residual(&geo, &f, &g, i)?);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn good_unknown_converges_at_second_order() {
        let idx = TangentialIndex { horizontal: [1, 0], weighted: 0 };
        let r = good_unknown_refinement(2, &[16, 32, 64], 48, idx).unwrap();
        assert!(r.order > 1.8, "{:?}", r);
    }

    #[test]
    fn transport_converges_at_second_order() {
        let grid = SlabGrid::new(2, 16, 32, 20.0, 3.0).unwrap();
        let r = transport_refinement(&grid, 1.0, &[0.04, 0.02, 0.01]).unwrap();
        assert!((r.order - 2.0).abs() < 0.1, "{:?}", r);
        assert!(ibp_check(&grid, 1.0).unwrap() < 1e-8);
    }

    #[test]
    fn single_run_is_rejected() {
        let idx = TangentialIndex { horizontal: [1, 0], weighted: 0 };
        assert!(good_unknown_refinement(2, &[16], 24, idx).is_err());
    }
}
