use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::coefficients::EffectiveCoefficients;
use super::InterfaceState;
use crate::error::{invalid, Error, Result};
use crate::paradiff::{
    para_apply, CurvatureSymbol, GridJets, PLCutoffs, ParaSymbol, Part, RegularitySymbol, SummedDtnSymbol, Symbol,
    SymbolPoint, SymmetrizerM, SymmetrizerN,
};
use crate::spectral::SpectralField;

/// Multiplier of `T_Lambda T_h` at integer frequency `k` on a flat background,
/// including the squared low-frequency cut of the quantization.
pub fn flat_surface_multiplier(k: [i64; 2]) -> f64 {
    let r = (k[0] as f64).hypot(k[1] as f64);
    if r == 0.0 {
        return 0.0;
    }
    let p = SymbolPoint::flat([k[0] as f64, k[1] as f64]).expect("nonzero frequency");
    let phi = PLCutoffs::low_cut(r);
    (SummedDtnSymbol.eval(&p) * CurvatureSymbol.eval(&p)).re * phi * phi
}

/// Time-independent ingredients of the paralinearized interface equation.
#[derive(Clone, Debug)]
pub struct FrozenModel {
    pub coeffs: EffectiveCoefficients,
    /// Interface about which the symbols are frozen.
    pub background: SpectralField,
    pub sigma: f64,
    pub cut: PLCutoffs,
}

impl FrozenModel {
    pub fn new(coeffs: EffectiveCoefficients, background: SpectralField, sigma: f64, cut: PLCutoffs) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(invalid("sigma", "surface tension must be non-negative"));
        }
        if background.torus() != coeffs.torus() {
            return Err(Error::GridMismatch("background and coefficients live on different tori".into()));
        }
        if background.max_abs() >= 10.0 {
            return Err(invalid("background", "interface sup must stay below 10"));
        }
        cut.validate()?;
        Ok(Self { coeffs, background, sigma, cut })
    }

    /// Flat background.
    pub fn flat(coeffs: EffectiveCoefficients, sigma: f64) -> Result<Self> {
        let bg = SpectralField::zeros(coeffs.torus());
        Self::new(coeffs, bg, sigma, PLCutoffs::default())
    }

    fn jets(&self) -> GridJets {
        GridJets::from_psi(&self.background)
    }

    fn chain(&self, chain: &[&dyn Symbol], u: &SpectralField, jets: &GridJets) -> Result<SpectralField> {
        let mut v = u.clone();
        for s in chain.iter().rev() {
            v = para_apply(&ParaSymbol::Symbol { symbol: *s, jets, part: Part::Full }, &v, &self.cut)?;
        }
        Ok(v)
    }

    fn flat_surface(&self, k: [i64; 2]) -> f64 {
        flat_surface_multiplier(k)
    }

    /// Spectral-radius bound of the frozen operator.
    fn max_frequency(&self) -> f64 {
        let c = &self.coeffs;
        let kmax = (c.torus().n() / 2) as f64 * (c.torus().axes() as f64).sqrt();
        let rho_min = c.rho_total.values().iter().fold(f64::INFINITY, |m, v| m.min(*v));
        let sup = |f: &[SpectralField; 2]| f[0].values().iter().zip(f[1].values()).fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)));
        let alfven: f64 = [&c.upper, &c.lower]
            .iter()
            .map(|p| p.rho.values().iter().fold(0.0f64, |m, v| m.max(*v)) * sup(&p.b_scaled).powi(2))
            .sum::<f64>()
            / rho_min;
        let slope2 = self.background.gradient().iter().fold(0.0, |m, g| m + g.max_abs().powi(2));
        let surface = 0.5 * self.sigma * 2.0 * kmax.powi(3) * (1.0 + slope2) / rho_min;
        sup(&c.w) * kmax + (surface + (alfven + sup(&c.u).powi(2)) * kmax * kmax).sqrt()
    }

    /// Largest admissible explicit step.
    pub fn cfl_limit(&self, cfl: f64) -> f64 {
        let dx = 2.0 * PI / self.coeffs.torus().n() as f64;
        let capillary = if self.sigma > 0.0 { dx.powf(1.5) / self.sigma.sqrt() } else { f64::INFINITY };
        let speed = self.coeffs.max_speed();
        let transport = if speed > 0.0 { dx / speed } else { f64::INFINITY };
        let omega = self.max_frequency();
        // RK4 covers |lambda dt| < 2.8 on the imaginary axis
        let radius = if omega > 0.0 { 2.5 / omega } else { f64::INFINITY };
        (cfl * capillary.min(transport)).min(radius)
    }
}

enum Operator {
    /// `psi_tt^ = a psi^ + b psi_t^` per mode.
    Diagonal { a: Vec<Complex64>, b: Vec<Complex64> },
    General { jets: GridJets, second: Vec<Vec<SpectralField>>, conv: Vec<SpectralField> },
}

impl Operator {
    fn build(model: &FrozenModel) -> Self {
        let c = &model.coeffs;
        let torus = c.torus();
        let axes = torus.axes();
        let flat = model.background.max_abs() == 0.0;
        if flat && c.is_uniform() {
            let rho = c.rho_total.values()[0];
            let at = |f: &SpectralField| f.values()[0];
            let mut a = vec![Complex64::new(0.0, 0.0); torus.len()];
            let mut b = a.clone();
            for h in 0..torus.len() {
                if torus.is_nyquist(h) {
                    continue;
                }
                let k = torus.derivative_mode(h);
                let dot = |f: &[SpectralField; 2]| at(&f[0]) * k[0] + at(&f[1]) * k[1];
                let mut restoring = 0.5 * model.sigma * model.flat_surface(torus.mode(h)) - rho * dot(&c.w).powi(2);
                for p in [&c.upper, &c.lower] {
                    restoring += at(&p.rho) * (dot(&p.b_scaled).powi(2) - dot(&c.u).powi(2));
                }
                a[h] = Complex64::new(-restoring / rho, 0.0);
                b[h] = Complex64::new(0.0, -2.0 * dot(&c.w));
            }
            return Operator::Diagonal { a, b };
        }
        // C_ij = -rho w_i w_j + sum rho (b_i b_j - u_i u_j), divided by the total density
        let inv = c.rho_total.map(|r| 1.0 / r);
        let second = (0..axes)
            .map(|i| {
                (0..axes)
                    .map(|j| {
                        let mut cij = -&(&c.rho_total * &(&c.w[i] * &c.w[j]));
                        for p in [&c.upper, &c.lower] {
                            let bb = &p.b_scaled[i] * &p.b_scaled[j];
                            cij = &cij + &(&p.rho * &(&bb - &(&c.u[i] * &c.u[j])));
                        }
                        &cij * &inv
                    })
                    .collect()
            })
            .collect();
        let conv = (0..axes).map(|i| c.w[i].scale(-2.0)).collect();
        Operator::General { jets: model.jets(), second, conv }
    }

    fn accel(&self, model: &FrozenModel, psi: &[Complex64], psi_t: &[Complex64]) -> Result<Vec<Complex64>> {
        match self {
            Operator::Diagonal { a, b } => Ok((0..psi.len()).map(|h| a[h] * psi[h] + b[h] * psi_t[h]).collect()),
            Operator::General { jets, second, conv } => {
                let torus = model.coeffs.torus();
                let u = SpectralField::from_coefficients(torus, psi);
                let ut = SpectralField::from_coefficients(torus, psi_t);
                let inv = model.coeffs.rho_total.map(|r| -0.5 * model.sigma / r);
                let mut acc = if model.sigma > 0.0 {
                    &model.chain(&[&SummedDtnSymbol, &CurvatureSymbol], &u, jets)? * &inv
                } else {
                    SpectralField::zeros(torus)
                };
                let grad = u.gradient();
                let grad_t = ut.gradient();
                for (i, row) in second.iter().enumerate() {
                    for (j, cij) in row.iter().enumerate() {
                        acc = &acc + &(cij * &grad[i].derivative(j));
                    }
                    acc = &acc + &(&conv[i] * &grad_t[i]);
                }
                Ok(acc.coefficients())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepOptions {
    pub dt: f64,
    pub n_steps: usize,
    /// Record every this many steps (the initial state is always recorded).
    pub record_every: usize,
    /// Stop and flag instability once `|psi|` exceeds this multiple of its initial value.
    pub blowup_factor: f64,
    pub cfl: f64,
    /// Tracked Fourier mode.
    pub mode: [i64; 2],
    pub energies: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self { dt: 1e-3, n_steps: 1000, record_every: 10, blowup_factor: 1e6, cfl: 0.5, mode: [1, 0], energies: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub energy: f64,
    pub energy_tilde: f64,
    /// Cosine and sine amplitudes of the tracked mode.
    pub amplitude_re: f64,
    pub amplitude_im: f64,
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub blew_up: bool,
    pub cfl_limit: f64,
    pub final_state: InterfaceState,
}

/// Integrates `(rho+ + rho-) psi_tt = -(sigma/2) T_Lambda T_h psi - (rho+ + rho-) w w : grad grad psi
/// - 2 (rho+ + rho-) w . grad psi_t + sum rho (b b - u u) : grad grad psi` with classical RK4.
pub fn step_linearized(state: &InterfaceState, model: &FrozenModel, opts: &StepOptions) -> Result<Trajectory> {
    state.validate()?;
    let torus = model.coeffs.torus().clone();
    if state.psi.torus() != &torus {
        return Err(Error::GridMismatch("state and coefficients live on different tori".into()));
    }
    if !(opts.dt > 0.0) || opts.record_every == 0 || !(opts.blowup_factor > 1.0) || !(opts.cfl > 0.0) {
        return Err(invalid("step", "need dt > 0, record_every > 0, blowup_factor > 1, cfl > 0"));
    }
    let limit = model.cfl_limit(opts.cfl);
    if opts.dt > limit {
        return Err(Error::CflViolation { dt: opts.dt, limit });
    }
    let mode = torus
        .index_of_mode(opts.mode)
        .ok_or_else(|| invalid("mode", format!("{:?} is not on the grid", opts.mode)))?;
    let op = Operator::build(model);
    let mut psi = state.psi.coefficients();
    let mut psi_t = state.psi_t.coefficients();
    let norm = |c: &[Complex64]| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&psi).max(norm(&psi_t) * opts.dt).max(1e-300);

    let record = |t: f64, psi: &[Complex64], psi_t: &[Complex64]| -> Result<TrajectoryPoint> {
        let st = InterfaceState {
            psi: SpectralField::from_coefficients(&torus, psi),
            psi_t: SpectralField::from_coefficients(&torus, psi_t),
            t,
            sigma: model.sigma,
        };
        let (energy, energy_tilde) = if opts.energies {
            let e = energy_functionals(&st, model)?;
            (e.energy, e.energy_tilde)
        } else {
            (f64::NAN, f64::NAN)
        };
        Ok(TrajectoryPoint {
            t,
            energy,
            energy_tilde,
            amplitude_re: 2.0 * psi[mode].re,
            amplitude_im: -2.0 * psi[mode].im,
            norm: norm(psi),
        })
    };

    let dt = opts.dt;
    let mut t = state.t;
    let mut points = vec![record(t, &psi, &psi_t)?];
    let mut blew_up = false;
    let axpy = |x: &[Complex64], a: f64, y: &[Complex64]| -> Vec<Complex64> { x.iter().zip(y).map(|(p, q)| p + q * a).collect() };
    for step in 1..=opts.n_steps {
        let k1v = op.accel(model, &psi, &psi_t)?;
        let k1x = psi_t.clone();
        let (x2, v2) = (axpy(&psi, 0.5 * dt, &k1x), axpy(&psi_t, 0.5 * dt, &k1v));
        let k2v = op.accel(model, &x2, &v2)?;
        let (x3, v3) = (axpy(&psi, 0.5 * dt, &v2), axpy(&psi_t, 0.5 * dt, &k2v));
        let k3v = op.accel(model, &x3, &v3)?;
        let (x4, v4) = (axpy(&psi, dt, &v3), axpy(&psi_t, dt, &k3v));
        let k4v = op.accel(model, &x4, &v4)?;
        for h in 0..psi.len() {
            psi[h] += (k1x[h] + 2.0 * v2[h] + 2.0 * v3[h] + v4[h]) * (dt / 6.0);
            psi_t[h] += (k1v[h] + 2.0 * k2v[h] + 2.0 * k3v[h] + k4v[h]) * (dt / 6.0);
        }
        t = state.t + step as f64 * dt;
        let n = norm(&psi);
        if !n.is_finite() || n > opts.blowup_factor * n0 {
            blew_up = true;
            if n.is_finite() {
                points.push(record(t, &psi, &psi_t)?);
            }
            break;
        }
        if step % opts.record_every == 0 {
            points.push(record(t, &psi, &psi_t)?);
        }
    }
    let final_state = InterfaceState {
        psi: SpectralField::from_coefficients(&torus, &psi),
        psi_t: SpectralField::from_coefficients(&torus, &psi_t),
        t,
        sigma: model.sigma,
    };
    Ok(Trajectory { points, blew_up, cfl_limit: limit, final_state })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnergyReport {
    pub energy: f64,
    pub energy_tilde: f64,
    /// Smallest eigenvalue over the torus of `rho+ b+ b+ + rho- b- b- - (rho+ + rho-) u u`.
    pub form_infimum: f64,
    /// Minimizing direction of that form where the integrand of `E~` is most negative.
    pub negative_direction: Option<[f64; 2]>,
}

fn min_eigen(m: [[f64; 2]; 2], axes: usize) -> (f64, [f64; 2]) {
    if axes == 1 {
        return (m[0][0], [1.0, 0.0]);
    }
    let eig = SymmetricEigen::new(Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]));
    let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let v = eig.eigenvectors.column(k);
    (eig.eigenvalues[k], [v[0], v[1]])
}

/// `E = 1/2 int rho |(d_t + w.grad) V|^2 + 1/4 int |sqrt(sigma) T_m V|^2` and
/// `E~ = 1/2 int sum rho (|b.grad V|^2 - |u.grad V|^2)` with `V = T_M T_n psi`, `s = 4`.
pub fn energy_functionals(state: &InterfaceState, model: &FrozenModel) -> Result<EnergyReport> {
    let c = &model.coeffs;
    let torus = c.torus();
    let axes = torus.axes();
    let jets = model.jets();
    let reg = RegularitySymbol { s: 4.0 };
    let v = model.chain(&[&reg, &SymmetrizerN], &state.psi, &jets)?;
    let vt = model.chain(&[&reg, &SymmetrizerN], &state.psi_t, &jets)?;
    let grad = v.gradient();
    let along = |f: &[SpectralField; 2]| {
        let mut acc = SpectralField::zeros(torus);
        for (a, g) in grad.iter().enumerate() {
            acc = &acc + &(&f[a] * g);
        }
        acc
    };
    let dv = &vt + &along(&c.w);
    let mut energy = 0.5 * (&c.rho_total * &(&dv * &dv)).integrate();
    if model.sigma > 0.0 {
        let mv = model.chain(&[&SymmetrizerM], &v, &jets)?;
        energy += 0.25 * model.sigma * (&mv * &mv).integrate();
    }
    let ugrad = along(&c.u);
    let uu = &ugrad * &ugrad;
    let mut density = SpectralField::zeros(torus);
    for p in [&c.upper, &c.lower] {
        let bgrad = along(&p.b_scaled);
        density = &density + &(&p.rho * &(&(&bgrad * &bgrad) - &uu)).scale(0.5);
    }
    let energy_tilde = density.integrate();
    let form_infimum = (0..torus.len()).map(|h| min_eigen(c.form_matrix(h), axes).0).fold(f64::INFINITY, f64::min);
    let negative_direction = if energy_tilde < 0.0 {
        let worst = (0..torus.len()).min_by(|&a, &b| density.values()[a].total_cmp(&density.values()[b])).unwrap_or(0);
        Some(min_eigen(c.form_matrix(worst), axes).1)
    } else {
        None
    };
    Ok(EnergyReport { energy, energy_tilde, form_infimum, negative_direction })
}

/// Angular frequency from the upward and downward zero crossings of the tracked cosine amplitude.
pub fn measured_frequency(points: &[TrajectoryPoint]) -> Option<f64> {
    let mut crossings = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (w[0].amplitude_re, w[1].amplitude_re);
        if a != 0.0 && a.signum() != b.signum() {
            crossings.push(w[0].t + (w[1].t - w[0].t) * a / (a - b));
        }
    }
    if crossings.len() < 3 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    Some(PI * (crossings.len() - 1) as f64 / span)
}

/// Least-squares slope of `log |amplitude|` over `t in [t0, t1]`.
pub fn measured_growth_rate(points: &[TrajectoryPoint], t0: f64, t1: f64) -> Option<f64> {
    let (ts, ls): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.t >= t0 && p.t <= t1)
        .map(|p| (p.t, p.amplitude_re.hypot(p.amplitude_im).ln()))
        .unzip();
    if ts.len() < 3 {
        return None;
    }
    let n = ts.len() as f64;
    let (mt, ml) = (ts.iter().sum::<f64>() / n, ls.iter().sum::<f64>() / n);
    let cov: f64 = ts.iter().zip(&ls).map(|(t, l)| (t - mt) * (l - ml)).sum();
    let var: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    Some(cov / var)
}

/// Largest `|d/dt (E + E~)| / (E + E~)` along the trajectory, a discrete Gronwall constant.
pub fn gronwall_constant(points: &[TrajectoryPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| {
            let (e0, e1) = (w[0].energy + w[0].energy_tilde, w[1].energy + w[1].energy_tilde);
            ((e1 - e0) / (w[1].t - w[0].t)).abs() / e0.abs().max(e1.abs()).max(1e-300)
        })
        .fold(0.0, f64::max)
}

/// Trajectory as versioned CSV.
pub fn write_trajectory_csv<W: Write>(points: &[TrajectoryPoint], mut out: W) -> Result<()> {
    writeln!(out, "# cvsheet-trajectory v1")?;
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::effective_coefficients;
    use crate::spectral::{Mode, Torus};
    use crate::stability::{PhaseTrace, TwoPhaseTrace};

    fn model(t: &Torus, up: PhaseTrace, lo: PhaseTrace, sigma: f64) -> FrozenModel {
        let tr = TwoPhaseTrace::single(t.dim(), up, lo).unwrap();
        FrozenModel::flat(effective_coefficients(&tr, t).unwrap(), sigma).unwrap()
    }

    fn ph(rho: f64, v: [f64; 2], b: [f64; 2]) -> PhaseTrace {
        PhaseTrace::uniform(1, rho, v, b, 1.0)
    }

    fn cosine(t: &Torus, k: [i64; 2], a: f64) -> InterfaceState {
        let psi = SpectralField::from_modes(t, &[Mode::cos(a, k)]).unwrap();
        InterfaceState::new(psi, SpectralField::zeros(t), 0.0, 0.0).unwrap()
    }

    #[test]
    fn capillary_wave_frequency() {
        let t = Torus::new(2, 32).unwrap();
        let sigma = 0.2;
        let m = model(&t, ph(1.0, [0.0; 2], [0.0; 2]), ph(1.0, [0.0; 2], [0.0; 2]), sigma);
        let k = 4.0f64;
        let omega = (sigma * k.powi(3) * (20.0 * k).tanh() / 2.0).sqrt();
        let dt = 2.0 * PI / omega / 400.0;
        let opts = StepOptions { dt, n_steps: 4000, record_every: 1, mode: [4, 0], energies: false, ..Default::default() };
        let mut st = cosine(&t, [4, 0], 1e-3);
        st.sigma = sigma;
        let tr = step_linearized(&st, &m, &opts).unwrap();
        let w = measured_frequency(&tr.points).unwrap();
        assert!((w / omega - 1.0).abs() < 1e-4, "{w} vs {omega}");
    }

    #[test]
    fn general_path_agrees_with_spectral_path() {
        let t = Torus::new(2, 32).unwrap();
        let m = model(&t, ph(1.0, [0.3, 0.0], [0.8, 0.0]), ph(2.0, [-0.1, 0.0], [0.5, 0.0]), 0.1);
        // a background too small to matter, but nonzero forces the general path
        let tiny = SpectralField::from_modes(&t, &[Mode::cos(1e-14, [1, 0])]).unwrap();
        let general = FrozenModel::new(m.coeffs.clone(), tiny, m.sigma, m.cut).unwrap();
        let mut st = cosine(&t, [3, 0], 1e-2);
        st.sigma = 0.1;
        let opts = StepOptions { dt: 1e-3, n_steps: 200, record_every: 50, energies: false, ..Default::default() };
        let a = step_linearized(&st, &m, &opts).unwrap().final_state;
        let b = step_linearized(&st, &general, &opts).unwrap().final_state;
        assert!((&a.psi - &b.psi).max_abs() < 1e-10);
    }

    #[test]
    fn rejects_large_steps() {
        let t = Torus::new(2, 64).unwrap();
        let m = model(&t, ph(1.0, [0.0; 2], [0.0; 2]), ph(1.0, [0.0; 2], [0.0; 2]), 1.0);
        let st = cosine(&t, [2, 0], 1e-3);
        let opts = StepOptions { dt: 0.1, ..Default::default() };
        assert!(matches!(step_linearized(&st, &m, &opts), Err(Error::CflViolation { .. })));
    }

    #[test]
    fn kelvin_helmholtz_blows_up() {
        let t = Torus::new(2, 32).unwrap();
        let m = model(&t, ph(1.0, [1.0, 0.0], [0.0; 2]), ph(1.0, [-1.0, 0.0], [0.0; 2]), 0.0);
        let st = cosine(&t, [5, 0], 1e-6);
        let opts = StepOptions { dt: 1e-3, n_steps: 20000, blowup_factor: 1e3, energies: false, mode: [5, 0], ..Default::default() };
        let tr = step_linearized(&st, &m, &opts).unwrap();
        assert!(tr.blew_up);
    }

    #[test]
    fn zero_state_has_zero_energy() {
        let t = Torus::new(3, 16).unwrap();
        let m = model(&t, ph(1.0, [0.2, 0.1], [1.0, 0.0]), ph(1.5, [0.0, 0.3], [0.0, 1.0]), 0.3);
        let z = SpectralField::zeros(&t);
        let e = energy_functionals(&InterfaceState::new(z.clone(), z, 0.0, 0.3).unwrap(), &m).unwrap();
        assert_eq!(e.energy, 0.0);
        assert_eq!(e.energy_tilde, 0.0);
    }

    #[test]
    fn energy_tilde_is_sum_of_squares_without_shear() {
        let t = Torus::new(3, 16).unwrap();
        let m = model(&t, ph(1.0, [0.2, 0.1], [1.0, 0.0]), ph(1.5, [0.2, 0.1], [0.3, -1.0]), 0.0);
        let psi = SpectralField::from_modes(&t, &[Mode::cos(0.01, [2, 1]), Mode::sin(0.02, [0, 3])]).unwrap();
        let st = InterfaceState::new(psi, SpectralField::zeros(&t), 0.0, 0.0).unwrap();
        let e = energy_functionals(&st, &m).unwrap();
        assert!(e.energy_tilde > 0.0 && e.negative_direction.is_none());
    }

    #[test]
    fn frozen_energy_is_conserved() {
        let t = Torus::new(2, 32).unwrap();
        let m = model(&t, ph(1.0, [0.3, 0.0], [1.0, 0.0]), ph(2.0, [0.1, 0.0], [0.7, 0.0]), 0.05);
        let psi = SpectralField::from_modes(&t, &[Mode::cos(1e-3, [3, 0]), Mode::sin(5e-4, [5, 0])]).unwrap();
        let st = InterfaceState::new(psi, SpectralField::zeros(&t), 0.0, 0.05).unwrap();
        let opts = StepOptions { dt: 2e-3, n_steps: 2000, record_every: 100, ..Default::default() };
        let tr = step_linearized(&st, &m, &opts).unwrap();
        let e0 = tr.points[0].energy + tr.points[0].energy_tilde;
        for p in &tr.points {
            assert!(((p.energy + p.energy_tilde) / e0 - 1.0).abs() < 1e-6);
        }
        assert!(gronwall_constant(&tr.points) < 1e-4);
    }
}
