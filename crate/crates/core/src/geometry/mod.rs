//! Graph flattening `x -> (x', x3 + chi(x3) psi(x'))` and covariant derivatives.

mod identities;
mod refinement;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::spectral::{BulkField, Phase, SlabGrid, SpectralField};

pub use identities::{
    good_unknown_residual, ibp_residual, omega, transport_identity_check, GoodUnknownReport, TangentialIndex, TimeLevel,
    TransportReport,
};
pub use refinement::{good_unknown_refinement, ibp_check, transport_refinement, RefinementReport};

/// `C^inf` step: 0 for `t <= 0`, 1 for `t >= 1`, with `T(t) + T(1 - t) = 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_slope(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    // T = 1 / (1 + e^{1/t - 1/(1-t)})
    let z = 1.0 / t - 1.0 / (1.0 - t);
    let dz = -1.0 / (t * t) - 1.0 / ((1.0 - t) * (1.0 - t));
    if z.abs() > 700.0 {
        return 0.0;
    }
    let e = z.exp();
    -e * dz / ((1.0 + e) * (1.0 + e))
}

/// Even vertical cutoff: `chi = 1` on `[-1, 1]`, smooth descent to 0 at `|x3| = H`.
#[derive(Clone, Debug, Serialize)]
pub struct Cutoff {
    half_height: f64,
    psi0_sup: f64,
    max_slope: f64,
    derivative_sups: [f64; 8],
}

impl Cutoff {
    pub fn build(half_height: f64, psi0_sup: f64) -> Result<Self> {
        if !(half_height > 10.0) {
            return Err(invalid("half_height", format!("slab must satisfy H > 10, got {half_height}")));
        }
        if !(0.0..=1.0).contains(&psi0_sup) {
            return Err(invalid("psi0_sup", format!("initial interface sup must lie in [0, 1], got {psi0_sup}")));
        }
        let mut c = Self { half_height, psi0_sup, max_slope: 0.0, derivative_sups: [0.0; 8] };
        let len = half_height - 1.0;
        // dense scan of the transition layer
        let samples = 20_000;
        c.max_slope = (0..=samples).map(|k| c.slope(1.0 + len * k as f64 / samples as f64).abs()).fold(0.0, f64::max);
        let h = len / 200.0;
        for order in 1..=8 {
            let mut sup: f64 = 0.0;
            for k in 0..=2000 {
                let x = 1.0 + len * k as f64 / 2000.0;
                sup = sup.max(c.finite_derivative(x, order, h).abs());
            }
            c.derivative_sups[order - 1] = sup;
        }
        c.derivative_sups[0] = c.max_slope;
        Ok(c)
    }

    fn transition(&self, x3: f64) -> f64 {
        (x3.abs() - 1.0) / (self.half_height - 1.0)
    }

    pub fn value(&self, x3: f64) -> f64 {
        1.0 - smooth_step(self.transition(x3))
    }

    /// `chi'(x3)`.
    pub fn slope(&self, x3: f64) -> f64 {
        -x3.signum() * smooth_step_slope(self.transition(x3)) / (self.half_height - 1.0)
    }

    fn finite_derivative(&self, x: f64, order: usize, h: f64) -> f64 {
        // central difference of order `order` built from binomial weights
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..=order {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * binom * self.value(x + (order as f64 / 2.0 - k as f64) * h);
            binom = binom * (order - k) as f64 / (k + 1) as f64;
        }
        acc / h.powi(order as i32)
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    pub fn max_slope(&self) -> f64 {
        self.max_slope
    }

    /// The target `1 / (|psi0|_inf + 20)`.
    pub fn slope_bound(&self) -> f64 {
        1.0 / (self.psi0_sup + 20.0)
    }

    /// Whether `|chi'|_inf` meets [`Cutoff::slope_bound`]. Any cutoff dropping from 1 to 0
    /// over `[1, H]` has slope at least `1 / (H - 1)`, so this needs `H > 21 + |psi0|`.
    pub fn slope_bound_satisfied(&self) -> bool {
        self.max_slope <= self.slope_bound()
    }

    /// Estimated `sup |chi^(j)|` for `j = 1..=8`.
    pub fn derivative_sups(&self) -> [f64; 8] {
        self.derivative_sups
    }
}

#[derive(Clone, Copy, Debug, Serialize, serde::Deserialize)]
pub struct FlattenOptions {
    /// Multiplies the Jacobian threshold `d3phi >= 1/2`.
    pub safety: f64,
}

impl Default for FlattenOptions {
    fn default() -> Self {
        Self { safety: 1.0 }
    }
}

/// `phi` and its gradient on one phase, computed with the same discrete derivatives
/// that [`Flattening::covariant_grad`] uses.
#[derive(Clone, Debug)]
pub struct PhaseGeometry {
    pub phi: BulkField,
    /// `(d1 phi, [d2 phi,] d3 phi)`.
    pub grad_phi: Vec<BulkField>,
    /// `chi(x3)` at each vertical node.
    pub chi: Vec<f64>,
}

impl PhaseGeometry {
    pub fn d3phi(&self) -> &BulkField {
        self.grad_phi.last().expect("gradient has a vertical component")
    }

    /// Component `i` of `N = (-d1 phi, [-d2 phi,] 1)`.
    pub fn big_n(&self, i: usize) -> BulkField {
        if i + 1 == self.grad_phi.len() {
            BulkField::constant(self.phi.grid(), self.phi.phase(), 1.0)
        } else {
            -&self.grad_phi[i]
        }
    }
}

/// Flattened geometry for both phases.
#[derive(Clone, Debug)]
pub struct Flattening {
    grid: SlabGrid,
    psi: SpectralField,
    cutoff: Cutoff,
    upper: PhaseGeometry,
    lower: PhaseGeometry,
    threshold: f64,
}

impl Flattening {
    pub fn new(grid: &SlabGrid, psi: &SpectralField, cutoff: &Cutoff, opts: FlattenOptions) -> Result<Self> {
        if psi.torus() != grid.torus() {
            return Err(Error::GridMismatch("interface profile lives on a different torus".into()));
        }
        if (cutoff.half_height() - grid.half_height()).abs() > 1e-12 {
            return Err(Error::GridMismatch("cutoff and grid disagree on H".into()));
        }
        let sup = psi.max_abs();
        if sup >= 10.0 {
            return Err(invalid("psi", format!("interface sup {sup} must stay below 10")));
        }
        let build = |phase: Phase| -> PhaseGeometry {
            let col = grid.column();
            let chi: Vec<f64> = (0..grid.nv()).map(|j| cutoff.value(col.x3(phase, j))).collect();
            let mut phi = BulkField::from_profile(grid, phase, &chi, psi);
            let nh = grid.nh();
            for j in 0..grid.nv() {
                let x3 = col.x3(phase, j);
                phi.data_mut()[j * nh..(j + 1) * nh].iter_mut().for_each(|v| *v += x3);
            }
            let mut grad_phi: Vec<BulkField> = (0..grid.torus().axes()).map(|a| phi.dh(a)).collect();
            grad_phi.push(phi.d3());
            PhaseGeometry { phi, grad_phi, chi }
        };
        let threshold = 0.5 * opts.safety;
        let upper = build(Phase::Upper);
        let lower = build(Phase::Lower);
        let min = upper.d3phi().min().min(lower.d3phi().min());
        if min < threshold {
            return Err(Error::DegenerateJacobian { min_d3phi: min, threshold });
        }
        Ok(Self { grid: grid.clone(), psi: psi.clone(), cutoff: cutoff.clone(), upper, lower, threshold })
    }

    pub fn grid(&self) -> &SlabGrid {
        &self.grid
    }

    pub fn psi(&self) -> &SpectralField {
        &self.psi
    }

    pub fn cutoff(&self) -> &Cutoff {
        &self.cutoff
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn phase(&self, phase: Phase) -> &PhaseGeometry {
        match phase {
            Phase::Upper => &self.upper,
            Phase::Lower => &self.lower,
        }
    }

    pub fn min_d3phi(&self) -> f64 {
        self.upper.d3phi().min().min(self.lower.d3phi().min())
    }

    /// Interface normal `N = (-grad psi, 1)`, one entry per coordinate.
    pub fn interface_normal(&self) -> Vec<SpectralField> {
        let mut n: Vec<SpectralField> = self.psi.gradient().iter().map(|g| -g).collect();
        n.push(SpectralField::constant(self.psi.torus(), 1.0));
        n
    }

    /// `phi_t = chi(x3) psi_t`.
    pub fn phi_t(&self, phase: Phase, psi_t: &SpectralField) -> BulkField {
        BulkField::from_profile(&self.grid, phase, &self.phase(phase).chi, psi_t)
    }

    fn check(&self, f: &BulkField) -> Result<()> {
        if !f.grid().same_as(&self.grid) {
            return Err(Error::GridMismatch("field and geometry grids differ".into()));
        }
        Ok(())
    }

    /// `d^phi_i f`; the last index is vertical.
    pub fn covariant_partial(&self, f: &BulkField, i: usize) -> Result<BulkField> {
        self.check(f)?;
        let geo = self.phase(f.phase());
        let d3 = f.d3();
        Ok(self.covariant_from(f, &d3, geo, i))
    }

    fn covariant_from(&self, f: &BulkField, d3f: &BulkField, geo: &PhaseGeometry, i: usize) -> BulkField {
        let j = geo.d3phi();
        if i + 1 == self.grid.dim() {
            d3f.zip_map(j, |a, b| a / b)
        } else {
            let dh = f.dh(i);
            let mut out = dh;
            let gi = &geo.grad_phi[i];
            for (k, o) in out.data_mut().iter_mut().enumerate() {
                *o -= gi.data()[k] / j.data()[k] * d3f.data()[k];
            }
            out
        }
    }

    /// `(d^phi_1 f, ..., d^phi_d f)`.
    pub fn covariant_grad(&self, f: &BulkField) -> Result<Vec<BulkField>> {
        self.check(f)?;
        let geo = self.phase(f.phase());
        let d3 = f.d3();
        Ok((0..self.grid.dim()).map(|i| self.covariant_from(f, &d3, geo, i)).collect())
    }

    /// `div^phi v = sum_i d^phi_i v_i`.
    pub fn covariant_div(&self, v: &[BulkField]) -> Result<BulkField> {
        if v.len() != self.grid.dim() {
            return Err(Error::GridMismatch(format!("vector has {} components, need {}", v.len(), self.grid.dim())));
        }
        let mut acc = self.covariant_partial(&v[0], 0)?;
        for (i, vi) in v.iter().enumerate().skip(1) {
            acc = &acc + &self.covariant_partial(vi, i)?;
        }
        Ok(acc)
    }

    /// `d_t f + vbar . grad f + (v . N - phi_t) d3 f / d3 phi`.
    pub fn material_derivative(&self, f_t: &BulkField, f: &BulkField, v: &[BulkField], phi_t: &BulkField) -> Result<BulkField> {
        self.check(f)?;
        let d = self.grid.dim();
        if v.len() != d {
            return Err(Error::GridMismatch(format!("velocity has {} components, need {d}", v.len())));
        }
        for x in v.iter().chain([f_t, phi_t]) {
            if !x.grid().same_as(&self.grid) || x.phase() != f.phase() {
                return Err(Error::GridMismatch("material derivative inputs differ in grid or phase".into()));
            }
        }
        let geo = self.phase(f.phase());
        let d3f = f.d3();
        let mut out = f_t.clone();
        // v . N - phi_t
        let mut vn = &v[d - 1] - phi_t;
        for a in 0..d - 1 {
            let da = f.dh(a);
            out = &out + &(&v[a] * &da);
            vn = &vn - &(&v[a] * &geo.grad_phi[a]);
        }
        let conv = vn.zip_map(geo.d3phi(), |a, b| a / b);
        Ok(&out + &(&conv * &d3f))
    }
}
