use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::anisotropic::{difference_weights, sobolev_norm, star_derivative, time_derivative, AnisotropicWeight, TangentialMultiIndex};
use crate::eos::EquationOfState;
use crate::error::{invalid, Error, Result};
use crate::spectral::{BulkField, Phase, SlabGrid, SpectralField};

/// Bulk unknowns of one phase at one time level.
#[derive(Clone, Debug)]
pub struct PhaseState {
    pub v: Vec<BulkField>,
    pub b: Vec<BulkField>,
    pub s: BulkField,
    pub p: BulkField,
}

/// Equally spaced levels of both phases and the interface.
#[derive(Clone, Debug)]
pub struct EnergyHistory {
    pub dt: f64,
    pub upper: Vec<PhaseState>,
    pub lower: Vec<PhaseState>,
    pub psi: Vec<SpectralField>,
}

impl EnergyHistory {
    pub fn levels(&self) -> usize {
        self.psi.len()
    }

    /// Travelling sine waves in every unknown, centred on `t = 0`, with amplitudes
    /// `(v, b, s, p)` and interface `psi_amp cos(x1 - t)`.
    pub fn travelling_wave(grid: &SlabGrid, amp: [f64; 4], levels: usize, dt: f64, psi_amp: f64) -> Self {
        let h = grid.half_height();
        let mk = |phase: Phase, t: f64| {
            let sgn = phase.sign();
            let f = |a: f64, k: f64| {
                BulkField::from_fn(grid, phase, move |x| a * (k * x[0] - t).sin() * (1.0 + 0.1 * sgn * x[2] / h) * (0.5 * x[2] / h).cos())
            };
            PhaseState { v: vec![f(amp[0], 1.0), f(0.5 * amp[0], 2.0)], b: vec![f(amp[1], 1.0), f(amp[1], 3.0)], s: f(amp[2], 2.0), p: f(amp[3], 1.0) }
        };
        let c = levels.saturating_sub(1) / 2;
        let times: Vec<f64> = (0..levels).map(|i| (i as f64 - c as f64) * dt).collect();
        Self {
            dt,
            upper: times.iter().map(|&t| mk(Phase::Upper, t)).collect(),
            lower: times.iter().map(|&t| mk(Phase::Lower, t)).collect(),
            psi: times.iter().map(|&t| SpectralField::from_fn(grid.torus(), |x| psi_amp * (x[0] - t).cos())).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(invalid("dt", format!("time step must be positive, got {}", self.dt)));
        }
        let n = self.psi.len();
        if self.upper.len() != n || self.lower.len() != n {
            return Err(Error::GridMismatch(format!(
                "history lengths differ: psi {n}, upper {}, lower {}",
                self.upper.len(),
                self.lower.len()
            )));
        }
        Ok(())
    }

    fn phase(&self, phase: Phase) -> &[PhaseState] {
        match phase {
            Phase::Upper => &self.upper,
            Phase::Lower => &self.lower,
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergySettings {
    /// Mach-number parameter in the layer weights.
    pub eps: f64,
    pub sigma: f64,
    /// Number of layers minus one; the full-scale functional uses 4.
    pub base_order: usize,
}

impl Default for EnergySettings {
    fn default() -> Self {
        Self { eps: 1.0, sigma: 0.0, base_order: 2 }
    }
}

/// One interior summand `|| eps^{2l} T^alpha d_t^k (v, b, S, F_p^{e} p) ||_{sobolev}^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct InteriorTerm {
    pub l: usize,
    pub k: usize,
    pub alpha: TangentialMultiIndex,
    pub sobolev: usize,
    /// Power of `eps` inside the norm.
    pub eps_power: usize,
    /// Twice the exponent `e` of `F_p` on the pressure.
    pub pressure_exponent_x2: usize,
}

impl InteriorTerm {
    pub fn pressure_exponent(&self) -> f64 {
        self.pressure_exponent_x2 as f64 / 2.0
    }

    pub fn time_order(&self) -> usize {
        self.k + self.alpha.time as usize
    }
}

/// One boundary summand `| sqrt(sigma) eps^{2l} d_t^k psi |_{sobolev}^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundaryTerm {
    pub l: usize,
    pub k: usize,
    pub sobolev: f64,
    pub eps_power: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyPattern {
    pub base_order: usize,
    pub l: usize,
    pub interior: Vec<InteriorTerm>,
    pub boundary: Vec<BoundaryTerm>,
}

/// The summands of layer `l` for base order `n`: tangential `alpha` of length `2l`
/// without plain normal derivatives, `k <= n - l` extra time derivatives measured in
/// `H^{n-k-l}`, and `F_p` raised to `(k + alpha_0 - l - (n - 1))_+ / 2`.
pub fn energy_pattern(base_order: usize, l: usize, axes: usize) -> EnergyPattern {
    let n = base_order as i64;
    let mut interior = Vec::new();
    if l <= base_order {
        for alpha in TangentialMultiIndex::tangential(2 * l, axes) {
            for k in 0..=base_order - l {
                let e = (k as i64 + alpha.time as i64 - l as i64 - (n - 1)).max(0) as usize;
                interior.push(InteriorTerm {
                    l,
                    k,
                    alpha,
                    sobolev: base_order - k - l,
                    eps_power: 2 * l,
                    pressure_exponent_x2: e,
                });
            }
        }
    }
    let boundary = (0..=base_order + l)
        .map(|k| BoundaryTerm { l, k, sobolev: (base_order + 1 + l - k) as f64, eps_power: 2 * l })
        .collect();
    EnergyPattern { base_order, l, interior, boundary }
}

#[derive(Clone, Debug, Serialize)]
pub struct TermValue<T> {
    pub term: T,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyLayer {
    pub l: usize,
    pub interior: f64,
    pub boundary: f64,
    pub total: f64,
    pub interior_terms: Vec<TermValue<InteriorTerm>>,
    pub boundary_terms: Vec<TermValue<BoundaryTerm>>,
}

fn spectral_time_derivative(levels: &[SpectralField], dt: f64, order: usize) -> Result<SpectralField> {
    let n = levels.len();
    if n < order + 1 {
        return Err(Error::InsufficientHistory { needed: order + 1, got: n });
    }
    let c = (n - 1) / 2;
    if order == 0 {
        return Ok(levels[c].clone());
    }
    let nodes: Vec<f64> = (0..n).map(|i| (i as f64 - c as f64) * dt).collect();
    let w = difference_weights(&nodes, 0.0, order);
    let mut acc = levels[0].scale(w[0]);
    for (f, wi) in levels.iter().zip(&w).skip(1) {
        acc = &acc + &f.scale(*wi);
    }
    Ok(acc)
}

/// Per-phase series of every component, with pressure weighted lazily by `F_p^e`.
struct PhaseSeries {
    plain: Vec<Vec<BulkField>>,
    p: Vec<BulkField>,
    fp: Vec<BulkField>,
    dt: f64,
    weight: AnisotropicWeight,
    cache: HashMap<(usize, usize, usize), BulkField>,
}

impl PhaseSeries {
    fn new(states: &[PhaseState], eos: Option<&dyn EquationOfState>, dt: f64, with_entropy: bool) -> Result<Self> {
        let first = &states[0];
        let comps = first.v.len() + first.b.len() + usize::from(with_entropy);
        let plain = (0..comps)
            .map(|c| {
                states
                    .iter()
                    .map(|st| {
                        let nv = st.v.len();
                        if c < nv {
                            st.v[c].clone()
                        } else if c < nv + st.b.len() {
                            st.b[c - nv].clone()
                        } else {
                            st.s.clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let fp = states
            .iter()
            .map(|st| -> Result<BulkField> {
                let data = match eos {
                    None => vec![0.0; st.p.data().len()],
                    Some(e) => st.p.data().iter().zip(st.s.data()).map(|(p, s)| e.log_density_dp(*p, *s, 1)).collect::<Result<_>>()?,
                };
                BulkField::from_data(st.p.grid(), st.p.phase(), data)
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            plain,
            p: states.iter().map(|s| s.p.clone()).collect(),
            fp,
            dt,
            weight: AnisotropicWeight::tabulate(first.p.grid().column(), first.p.phase()),
            cache: HashMap::new(),
        })
    }

    /// `d_t^order` of pressure times `F_p^{e2 / 2}`.
    fn pressure(&mut self, order: usize, e2: usize) -> Result<BulkField> {
        let key = (usize::MAX, order, e2);
        if let Some(f) = self.cache.get(&key) {
            return Ok(f.clone());
        }
        let levels: Vec<BulkField> =
            self.p.iter().zip(&self.fp).map(|(p, fp)| p.zip_map(fp, |p, f| f.powf(e2 as f64 / 2.0) * p)).collect();
        let d = time_derivative(&levels, self.dt, order)?;
        self.cache.insert(key, d.clone());
        Ok(d)
    }

    fn component(&mut self, c: usize, order: usize) -> Result<BulkField> {
        let key = (c, order, 0);
        if let Some(f) = self.cache.get(&key) {
            return Ok(f.clone());
        }
        let d = time_derivative(&self.plain[c], self.dt, order)?;
        self.cache.insert(key, d.clone());
        Ok(d)
    }

    /// `sum_c || T^alpha_x f_c ||_s^2` over the plain components and the weighted pressure
    /// (scaled by `pressure_scale`).
    fn squared(&mut self, alpha: TangentialMultiIndex, order: usize, e2: usize, sobolev: usize, pressure_scale: f64) -> Result<f64> {
        let mut sum = 0.0;
        for c in 0..self.plain.len() {
            let f = self.component(c, order)?;
            sum += sobolev_norm(&star_derivative(&f, alpha.spatial(), &self.weight), sobolev).powi(2);
        }
        let p = self.pressure(order, e2)?;
        sum += pressure_scale.powi(2) * sobolev_norm(&star_derivative(&p, alpha.spatial(), &self.weight), sobolev).powi(2);
        Ok(sum)
    }
}

fn check_levels(history: &EnergyHistory, needed: usize) -> Result<()> {
    history.validate()?;
    if history.levels() < needed {
        return Err(Error::InsufficientHistory { needed, got: history.levels() });
    }
    Ok(())
}

/// Layer `l` of the layered energy at the centre level of `history`.
pub fn energy_layer(
    history: &EnergyHistory,
    eos: Option<&dyn EquationOfState>,
    settings: &EnergySettings,
    l: usize,
) -> Result<EnergyLayer> {
    if l > settings.base_order {
        return Err(invalid("l", format!("layer {l} exceeds base order {}", settings.base_order)));
    }
    if !(settings.sigma >= 0.0) {
        return Err(invalid("sigma", "surface tension must be non-negative"));
    }
    let axes = history.psi.first().map(|p| p.torus().axes()).unwrap_or(1);
    let pattern = energy_pattern(settings.base_order, l, axes);
    let needed = pattern
        .interior
        .iter()
        .map(InteriorTerm::time_order)
        .chain(pattern.boundary.iter().map(|b| b.k))
        .max()
        .unwrap_or(0)
        + 1;
    check_levels(history, needed)?;

    let mut series = [Phase::Upper, Phase::Lower]
        .map(|ph| PhaseSeries::new(history.phase(ph), eos, history.dt, true))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut interior_terms = Vec::with_capacity(pattern.interior.len());
    for term in &pattern.interior {
        let w = settings.eps.powi(2 * term.eps_power as i32);
        let mut value = 0.0;
        for s in series.iter_mut() {
            value += s.squared(term.alpha, term.time_order(), term.pressure_exponent_x2, term.sobolev, 1.0)?;
        }
        interior_terms.push(TermValue { term: *term, value: w * value });
    }
    let mut boundary_terms = Vec::with_capacity(pattern.boundary.len());
    for term in &pattern.boundary {
        let w = settings.sigma * settings.eps.powi(2 * term.eps_power as i32);
        let value = if w == 0.0 {
            0.0
        } else {
            w * spectral_time_derivative(&history.psi, history.dt, term.k)?.sobolev_norm(term.sobolev).powi(2)
        };
        boundary_terms.push(TermValue { term: *term, value });
    }
    let interior: f64 = interior_terms.iter().map(|t| t.value).sum();
    let boundary: f64 = boundary_terms.iter().map(|t| t.value).sum();
    Ok(EnergyLayer { l, interior, boundary, total: interior + boundary, interior_terms, boundary_terms })
}

/// Every layer `0..=base_order`.
pub fn layered_energy(
    history: &EnergyHistory,
    eos: Option<&dyn EquationOfState>,
    settings: &EnergySettings,
) -> Result<Vec<EnergyLayer>> {
    (0..=settings.base_order).map(|l| energy_layer(history, eos, settings, l)).collect()
}

/// Bottom layer with weakened time weights for well-prepared data, and its extension by
/// unweighted interface norms half an order lower.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeakEnergy {
    pub base: f64,
    pub extended: f64,
}

/// First time derivative that carries an `eps` weight in the weak functionals.
fn weak_eps_from(base_order: usize) -> usize {
    2.max(base_order.saturating_sub(1))
}

pub fn weak_energy(
    history: &EnergyHistory,
    eos: Option<&dyn EquationOfState>,
    settings: &EnergySettings,
) -> Result<WeakEnergy> {
    let n = settings.base_order;
    check_levels(history, n + 1)?;
    let eps = settings.eps;
    let mut series = [Phase::Upper, Phase::Lower]
        .map(|ph| PhaseSeries::new(history.phase(ph), eos, history.dt, false))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut base = 0.0;
    for s in series.iter_mut() {
        let a = TangentialMultiIndex::ZERO;
        base += s.squared(a, 0, 0, n, 1.0)?;
        if n >= 1 {
            base += s.squared(a, 1, 0, n - 1, eps)?;
        }
        for k in 2..=n {
            let e2 = (k as i64 - (n as i64 - 1)).max(0) as usize;
            base += eps * eps * s.squared(a, k, e2, n - k, 1.0)?;
        }
    }
    let psi = |k: usize| spectral_time_derivative(&history.psi, history.dt, k);
    if settings.sigma > 0.0 {
        for k in 0..=n {
            let w = if k >= 2 { eps * eps } else { 1.0 };
            base += settings.sigma * w * psi(k)?.sobolev_norm((n + 1 - k) as f64).powi(2);
        }
    }
    let mut extended = base;
    for k in 0..=n {
        let w = if k >= weak_eps_from(n) { eps * eps } else { 1.0 };
        extended += w * psi(k)?.sobolev_norm(n as f64 + 0.5 - k as f64).powi(2);
    }
    Ok(WeakEnergy { base, extended })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::Polytropic;
    use crate::fit::loglog_slope;
    use std::f64::consts::PI;

    const H: f64 = 4.0;

    fn history(grid: &SlabGrid, amp: [f64; 4], levels: usize, dt: f64) -> EnergyHistory {
        EnergyHistory::travelling_wave(grid, amp, levels, dt, 0.1)
    }

    fn grid() -> SlabGrid {
        SlabGrid::new(2, 16, 12, H, 0.0).unwrap()
    }

    #[test]
    fn pattern_reproduces_full_scale_exponents() {
        for l in 0..=4 {
            let pat = energy_pattern(4, l, 2);
            let mut triples = std::collections::BTreeSet::new();
            for t in &pat.interior {
                assert_eq!(t.alpha.weight(), 2 * l);
                assert_eq!(t.alpha.normal, 0);
                assert!(t.k <= 4 - l);
                assert_eq!(t.sobolev, 4 - t.k - l);
                assert_eq!(t.eps_power, 2 * l);
                let want = (t.k as i64 + t.alpha.time as i64 - l as i64 - 3).max(0) as f64 / 2.0;
                assert_eq!(t.pressure_exponent(), want);
                triples.insert((t.k, t.alpha.time, l));
            }
            // every (k, alpha_0) pair is present
            assert_eq!(triples.len(), (4 - l + 1) * (2 * l + 1));
            assert_eq!(pat.boundary.len(), 5 + l);
            for b in &pat.boundary {
                assert_eq!(b.sobolev, (5 + l - b.k) as f64);
                assert_eq!(b.eps_power, 2 * l);
            }
        }
        // top layer: k = 0 and alpha_0 = 8 gives (8 - 4 - 3) / 2
        let top = energy_pattern(4, 4, 2);
        assert_eq!(top.interior.iter().map(|t| t.pressure_exponent_x2).max(), Some(1));
    }

    #[test]
    fn zero_fields_have_zero_energy() {
        let g = grid();
        let mut h = history(&g, [0.0; 4], 5, 0.05);
        h.psi.iter_mut().for_each(|p| *p = SpectralField::zeros(g.torus()));
        let eos = Polytropic::new(1.4, 1.0, 0.3, 1e-6).unwrap();
        let s = EnergySettings { sigma: 1.0, ..Default::default() };
        for layer in layered_energy(&h, Some(&eos), &s).unwrap() {
            assert_eq!(layer.total, 0.0);
        }
    }

    #[test]
    fn bottom_layer_of_stationary_sine() {
        let g = grid();
        let st = PhaseState {
            v: vec![BulkField::from_fn(&g, Phase::Upper, |x| x[0].sin()), BulkField::zeros(&g, Phase::Upper)],
            b: vec![BulkField::zeros(&g, Phase::Upper); 2],
            s: BulkField::zeros(&g, Phase::Upper),
            p: BulkField::zeros(&g, Phase::Upper),
        };
        let lo = PhaseState {
            v: vec![BulkField::zeros(&g, Phase::Lower); 2],
            b: vec![BulkField::zeros(&g, Phase::Lower); 2],
            s: BulkField::zeros(&g, Phase::Lower),
            p: BulkField::zeros(&g, Phase::Lower),
        };
        let h = EnergyHistory { dt: 0.1, upper: vec![st; 5], lower: vec![lo; 5], psi: vec![SpectralField::zeros(g.torus()); 5] };
        let layer = energy_layer(&h, None, &EnergySettings::default(), 0).unwrap();
        // ||sin x1||_{H^2}^2 over one phase: (1 + 1 + 1) pi H
        let want = 3.0 * PI * H;
        assert!((layer.interior - want).abs() < 1e-9 * want, "{}", layer.interior);
    }

    #[test]
    fn eps_sweep_scales_each_layer() {
        let g = grid();
        let h = history(&g, [1.0, 0.5, 0.2, 0.3], 5, 0.05);
        let eos = Polytropic::new(1.4, 1.0, 0.5, 1e-6).unwrap();
        let eps = [0.1, 0.2, 0.4];
        for l in 0..=2 {
            let vals: Vec<f64> = eps
                .iter()
                .map(|&e| energy_layer(&h, Some(&eos), &EnergySettings { eps: e, sigma: 0.5, base_order: 2 }, l).unwrap().interior)
                .collect();
            let slope = loglog_slope(&eps, &vals);
            assert!((slope - 4.0 * l as f64).abs() < 0.1, "l={l} slope {slope}");
        }
    }

    #[test]
    fn surface_terms_vanish_continuously() {
        let g = grid();
        let h = history(&g, [1.0, 0.5, 0.2, 0.3], 5, 0.05);
        let at = |sigma: f64| {
            energy_layer(&h, None, &EnergySettings { eps: 0.5, sigma, base_order: 2 }, 1).unwrap()
        };
        let zero = at(0.0);
        assert_eq!(zero.boundary, 0.0);
        let small = at(1e-8);
        assert!(small.boundary > 0.0 && (small.total - zero.total).abs() < 1e-6 * zero.total);
    }

    #[test]
    fn monotone_in_each_field() {
        let g = grid();
        let eos = Polytropic::new(1.4, 1.0, 0.5, 1e-6).unwrap();
        let s = EnergySettings { eps: 0.7, sigma: 0.2, base_order: 2 };
        let base = history(&g, [1.0, 0.5, 0.2, 0.3], 5, 0.05);
        let e0 = layered_energy(&base, Some(&eos), &s).unwrap();
        for i in 0..4 {
            let mut amp = [1.0, 0.5, 0.2, 0.3];
            amp[i] *= 1.5;
            let e1 = layered_energy(&history(&g, amp, 5, 0.05), Some(&eos), &s).unwrap();
            for (a, b) in e0.iter().zip(&e1) {
                assert!(b.total > a.total, "field {i} layer {}", a.l);
            }
        }
    }

    #[test]
    fn short_history_is_rejected() {
        let g = grid();
        let h = history(&g, [1.0; 4], 3, 0.05);
        let r = energy_layer(&h, None, &EnergySettings::default(), 2);
        assert!(matches!(r, Err(Error::InsufficientHistory { needed: 5, got: 3 })));
        assert!(energy_layer(&h, None, &EnergySettings::default(), 0).is_ok());
    }

    #[test]
    fn weak_energy_is_extended_by_interface_terms() {
        let g = grid();
        let h = history(&g, [1.0, 0.5, 0.2, 0.3], 5, 0.05);
        let eos = Polytropic::new(1.4, 1.0, 0.5, 1e-6).unwrap();
        let with = weak_energy(&h, Some(&eos), &EnergySettings { eps: 0.5, sigma: 1.0, base_order: 2 }).unwrap();
        let without = weak_energy(&h, Some(&eos), &EnergySettings { eps: 0.5, sigma: 0.0, base_order: 2 }).unwrap();
        assert!(with.extended > with.base && with.base > without.base);
        // the interface extension does not depend on sigma
        assert!(((with.extended - with.base) - (without.extended - without.base)).abs() < 1e-12 * with.extended);
    }
}
