use crate::dtn::{EllipticProblem, KrylovOptions, KrylovStats};
use crate::eos::EquationOfState;
use crate::error::{invalid, Error, Result};
use crate::geometry::Flattening;
use crate::spectral::{BulkField, Phase, SpectralField};

/// Bulk state of one phase at one time level.
#[derive(Clone, Debug)]
pub struct BulkSlice {
    pub geo: Flattening,
    pub psi_t: SpectralField,
    pub v: Vec<BulkField>,
    pub b: Vec<BulkField>,
    /// Total pressure `p + |b|^2 / 2`.
    pub q: BulkField,
    pub s: BulkField,
}

impl BulkSlice {
    pub fn phase(&self) -> Phase {
        self.q.phase()
    }

    fn magnetic_pressure(&self) -> BulkField {
        let mut acc = BulkField::zeros(self.q.grid(), self.phase());
        for b in &self.b {
            acc = &acc + &(b * b);
        }
        acc.scale(0.5)
    }

    fn material(&self, f_t: &BulkField, f: &BulkField) -> Result<BulkField> {
        let phi_t = self.geo.phi_t(self.phase(), &self.psi_t);
        self.geo.material_derivative(f_t, f, &self.v, &phi_t)
    }
}

/// Right side of the `q_w` problem, split by origin.
#[derive(Clone, Debug)]
pub struct WaveSource {
    /// `-F_p D_t^2 q + F_p D_t^2 (|b|^2 / 2)`.
    pub compressible: BulkField,
    /// `(d_i v_j)(d_j v_i)`.
    pub velocity: BulkField,
    /// `(d_i b_j)(d_j b_i)`, entering with a minus sign.
    pub magnetic: BulkField,
    pub total: BulkField,
}

/// Second-order time derivative of a three-level series at level `l`.
fn time_derivative(x: [&BulkField; 3], l: usize, dt: f64) -> BulkField {
    let w = match l {
        0 => [-3.0, 4.0, -1.0],
        1 => [-1.0, 0.0, 1.0],
        _ => [1.0, -4.0, 3.0],
    };
    let mut acc = x[0].scale(w[0] / (2.0 * dt));
    for k in 1..3 {
        if w[k] != 0.0 {
            acc = &acc + &x[k].scale(w[k] / (2.0 * dt));
        }
    }
    acc
}

/// `D_t^2 f` at the middle level from `f` at three levels.
fn second_material(history: &[BulkSlice], f: [&BulkField; 3], dt: f64) -> Result<BulkField> {
    let first: Vec<BulkField> =
        (0..3).map(|l| history[l].material(&time_derivative(f, l, dt), f[l])).collect::<Result<_>>()?;
    let outer_t = time_derivative([&first[0], &first[1], &first[2]], 1, dt);
    history[1].material(&outer_t, &first[1])
}

fn contraction(geo: &Flattening, u: &[BulkField]) -> Result<BulkField> {
    let grads: Vec<Vec<BulkField>> = u.iter().map(|c| geo.covariant_grad(c)).collect::<Result<_>>()?;
    let mut acc = BulkField::zeros(u[0].grid(), u[0].phase());
    for i in 0..u.len() {
        for j in 0..u.len() {
            acc = &acc + &(&grads[j][i] * &grads[i][j]);
        }
    }
    Ok(acc)
}

/// Source of `-Lap^phi q_w` from the states at `t - dt`, `t`, `t + dt`; `eos = None` is the
/// incompressible limit `F_p = 0`.
pub fn wave_source(history: &[BulkSlice], dt: f64, eos: Option<&dyn EquationOfState>) -> Result<WaveSource> {
    if history.len() < 3 {
        return Err(Error::InsufficientHistory { needed: 3, got: history.len() });
    }
    let history = &history[history.len() - 3..];
    if !(dt > 0.0) {
        return Err(invalid("dt", "time step must be positive"));
    }
    let mid = &history[1];
    let phase = mid.phase();
    let dim = mid.geo.grid().dim();
    for h in history {
        if h.phase() != phase || h.v.len() != dim || h.b.len() != dim {
            return Err(Error::GridMismatch("time levels must share a phase and carry full vectors".into()));
        }
    }
    let grid = mid.geo.grid();
    let velocity = contraction(&mid.geo, &mid.v)?;
    let magnetic = contraction(&mid.geo, &mid.b)?;
    let compressible = match eos {
        None => BulkField::zeros(grid, phase),
        Some(eos) => {
            let mag: Vec<BulkField> = history.iter().map(BulkSlice::magnetic_pressure).collect();
            let d2q = second_material(history, [&history[0].q, &mid.q, &history[2].q], dt)?;
            let d2m = second_material(history, [&mag[0], &mag[1], &mag[2]], dt)?;
            let mut fp = vec![0.0; grid.len()];
            for (k, f) in fp.iter_mut().enumerate() {
                let p = mid.q.data()[k] - mag[1].data()[k];
                *f = eos.log_density_dp(p, mid.s.data()[k], 1)?;
            }
            let fp = BulkField::from_data(grid, phase, fp)?;
            &fp * &(&d2m - &d2q)
        }
    };
    let total = &(&compressible + &velocity) - &magnetic;
    Ok(WaveSource { compressible, velocity, magnetic, total })
}

/// `q_w` with its interface flux `N . grad^phi q_w`.
#[derive(Clone, Debug)]
pub struct WaveSourceData {
    pub q_w: BulkField,
    pub normal_flux: SpectralField,
    pub stats: KrylovStats,
}

/// Solves `-Lap^phi q_w = source`, `q_w = 0` on the interface, `d3 q_w = 0` on the wall.
pub fn solve_qw(source: &BulkField, geo: &Flattening, opts: &KrylovOptions) -> Result<WaveSourceData> {
    let phase = source.phase();
    let prob = EllipticProblem::new(geo, phase)?;
    // d_a(E d_b q) = d3phi Lap^phi q
    let g = &(-source) * geo.phase(phase).d3phi();
    let (q_w, stats) = prob.solve(&g, &SpectralField::zeros(geo.grid().torus()), opts)?;
    let normal_flux = prob.conormal_flux(&q_w, 0);
    Ok(WaveSourceData { q_w, normal_flux, stats })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::Polytropic;
    use crate::fit::loglog_slope;
    use crate::geometry::{Cutoff, FlattenOptions};
    use crate::spectral::{Mode, SlabGrid};
    use std::f64::consts::PI;

    fn flat(dim: usize, n: usize, nv: usize) -> Flattening {
        let grid = SlabGrid::new(dim, n, nv, 20.0, 3.0).unwrap();
        let psi = SpectralField::zeros(grid.torus());
        Flattening::new(&grid, &psi, &Cutoff::build(20.0, 1.0).unwrap(), FlattenOptions::default()).unwrap()
    }

    fn slice(geo: &Flattening, t: f64, phase: Phase) -> BulkSlice {
        let g = geo.grid();
        let f = |c: fn([f64; 3], f64) -> f64| BulkField::from_fn(g, phase, move |x| c(x, t));
        BulkSlice {
            geo: geo.clone(),
            psi_t: SpectralField::zeros(g.torus()),
            v: vec![f(|x, _| x[0].sin() * (-x[2].abs() / 5.0).exp()), f(|x, t| 0.1 * t * x[0].cos())],
            b: vec![f(|x, t| 0.5 + 0.1 * (x[0] + t).sin()), f(|x, _| 0.2 * x[0].cos() * (-x[2].abs() / 4.0).exp())],
            q: f(|x, t| 1.0 + 0.3 * (x[0] - t).cos() * (-x[2].abs() / 6.0).exp()),
            s: f(|_, _| 0.1),
        }
    }

    #[test]
    fn constant_state_has_no_source() {
        let geo = flat(2, 16, 16);
        let g = geo.grid();
        let c = |v: f64| BulkField::constant(g, Phase::Upper, v);
        let s = BulkSlice {
            geo: geo.clone(),
            psi_t: SpectralField::zeros(g.torus()),
            v: vec![c(0.4), c(-0.2)],
            b: vec![c(1.0), c(0.3)],
            q: c(2.0),
            s: c(0.0),
        };
        let eos = Polytropic::new(1.4, 1.0, 0.5, 1e-3).unwrap();
        let w = wave_source(&[s.clone(), s.clone(), s], 0.01, Some(&eos)).unwrap();
        assert!(w.total.max_abs() < 1e-12);
    }

    #[test]
    fn incompressible_source_is_velocity_contraction() {
        let geo = flat(2, 32, 24);
        let g = geo.grid();
        let v = vec![
            BulkField::from_fn(g, Phase::Upper, |x| x[0].sin() * (-x[2] / 5.0).exp()),
            BulkField::from_fn(g, Phase::Upper, |x| x[0].cos() * x[2] / 20.0),
        ];
        let zero = BulkField::zeros(g, Phase::Upper);
        let s = BulkSlice {
            geo: geo.clone(),
            psi_t: SpectralField::zeros(g.torus()),
            v,
            b: vec![zero.clone(), zero.clone()],
            q: zero.clone(),
            s: zero,
        };
        let w = wave_source(&[s.clone(), s.clone(), s], 0.1, None).unwrap();
        let exact = BulkField::from_fn(g, Phase::Upper, |x| {
            let e = (-x[2] / 5.0).exp();
            let (d1v1, d3v1) = (x[0].cos() * e, -x[0].sin() * e / 5.0);
            let (d1v3, d3v3) = (-x[0].sin() * x[2] / 20.0, x[0].cos() / 20.0);
            d1v1 * d1v1 + 2.0 * d3v1 * d1v3 + d3v3 * d3v3
        });
        assert!((&w.total - &exact).max_abs() < 1e-9);
    }

    #[test]
    fn compressible_part_scales_with_mach_squared() {
        let geo = flat(2, 16, 20);
        let dt = 1e-3;
        let hist: Vec<BulkSlice> = [-dt, 0.0, dt].iter().map(|&t| slice(&geo, t, Phase::Upper)).collect();
        let base = Polytropic::new(1.4, 1.0, 1.0, 1e-3).unwrap();
        let eps = [0.01, 0.02, 0.04, 0.08];
        let norms: Vec<f64> = eps
            .iter()
            .map(|&e| wave_source(&hist, dt, Some(&base.with_eps(e).unwrap())).unwrap().compressible.l2_norm())
            .collect();
        assert!((loglog_slope(&eps, &norms) - 2.0).abs() < 0.05);
    }

    #[test]
    fn needs_three_levels() {
        let geo = flat(2, 8, 8);
        let s = slice(&geo, 0.0, Phase::Lower);
        assert!(matches!(wave_source(&[s.clone(), s], 0.1, None), Err(Error::InsufficientHistory { needed: 3, got: 2 })));
    }

    #[test]
    fn qw_of_zero_source_vanishes() {
        let geo = flat(2, 16, 16);
        let d = solve_qw(&BulkField::zeros(geo.grid(), Phase::Lower), &geo, &KrylovOptions::default()).unwrap();
        assert_eq!(d.q_w.max_abs(), 0.0);
    }

    #[test]
    fn qw_matches_separable_solution() {
        let geo = flat(2, 16, 40);
        let h = 20.0;
        let kz = PI / (2.0 * h);
        for phase in [Phase::Upper, Phase::Lower] {
            let g = geo.grid();
            let src = BulkField::from_fn(g, phase, |x| x[0].sin() * (kz * x[2].abs()).sin() * (1.0 + kz * kz));
            let d = solve_qw(&src, &geo, &KrylovOptions::default()).unwrap();
            let exact = BulkField::from_fn(g, phase, |x| x[0].sin() * (kz * x[2].abs()).sin());
            assert!((&d.q_w - &exact).max_abs() < 1e-8);
            // N . grad q_w = d3 q_w = +-kz sin(x1) on the flat interface
            let flux = SpectralField::from_modes(g.torus(), &[Mode::sin(phase.sign() * kz, [1, 0])]).unwrap();
            assert!((&d.normal_flux - &flux).max_abs() < 1e-8);
        }
    }

    #[test]
    fn qw_recovers_manufactured_polynomial() {
        let grid = SlabGrid::new(2, 16, 32, 20.0, 3.0).unwrap();
        let psi = SpectralField::from_modes(grid.torus(), &[Mode::sin(0.3, [1, 0])]).unwrap();
        let geo = Flattening::new(&grid, &psi, &Cutoff::build(20.0, 1.0).unwrap(), FlattenOptions::default()).unwrap();
        let q = BulkField::from_fn(&grid, Phase::Upper, |x| x[0].cos() * x[2] * (40.0 - x[2]) / 400.0);
        let prob = EllipticProblem::new(&geo, Phase::Upper).unwrap();
        // -Lap^phi q = -(1/d3phi) d_a(E d_b q)
        let src = prob.divergence_form(&q).zip_map(geo.phase(Phase::Upper).d3phi(), |a, b| -a / b);
        let d = solve_qw(&src, &geo, &KrylovOptions::default()).unwrap();
        assert!((&d.q_w - &q).max_abs() < 1e-7, "{}", (&d.q_w - &q).max_abs());
    }
}
