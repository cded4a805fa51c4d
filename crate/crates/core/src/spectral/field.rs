use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrixView;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::column::{Column, Phase};
use super::torus::Torus;
use crate::error::{Error, Result};

/// Horizontal torus times a vertical column, shared by both phases.
#[derive(Clone, Debug)]
pub struct SlabGrid {
    torus: Torus,
    column: Arc<Column>,
}

impl SlabGrid {
    pub fn new(dim: usize, nh: usize, nv: usize, half_height: f64, stretch: f64) -> Result<Self> {
        Ok(Self { torus: Torus::new(dim, nh)?, column: Arc::new(Column::new(nv, half_height, stretch)?) })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn column(&self) -> &Column {
        &self.column
    }

    pub fn dim(&self) -> usize {
        self.torus.dim()
    }

    pub fn nv(&self) -> usize {
        self.column.nv()
    }

    pub fn nh(&self) -> usize {
        self.torus.len()
    }

    pub fn half_height(&self) -> f64 {
        self.column.half_height()
    }

    pub fn len(&self) -> usize {
        self.nh() * self.nv()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn same_as(&self, other: &SlabGrid) -> bool {
        self.torus == other.torus
            && (Arc::ptr_eq(&self.column, &other.column)
                || (self.column.nv() == other.column.nv()
                    && self.column.half_height() == other.column.half_height()
                    && self.column.stretch() == other.column.stretch()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

/// One real Fourier mode `amplitude * cos|sin(k . x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude: f64,
    pub k: [i64; 2],
    #[serde(default = "default_trig")]
    pub trig: Trig,
}

fn default_trig() -> Trig {
    Trig::Cos
}

impl Mode {
    pub fn cos(amplitude: f64, k: [i64; 2]) -> Self {
        Self { amplitude, k, trig: Trig::Cos }
    }

    pub fn sin(amplitude: f64, k: [i64; 2]) -> Self {
        Self { amplitude, k, trig: Trig::Sin }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let arg = self.k[0] as f64 * x[0] + self.k[1] as f64 * x[1];
        self.amplitude
            * match self.trig {
                Trig::Cos => arg.cos(),
                Trig::Sin => arg.sin(),
            }
    }
}

/// Real field on the horizontal torus (interface functions).
#[derive(Clone, Debug)]
pub struct SpectralField {
    torus: Torus,
    values: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(torus: &Torus) -> Self {
        Self { torus: torus.clone(), values: vec![0.0; torus.len()] }
    }

    pub fn constant(torus: &Torus, c: f64) -> Self {
        Self { torus: torus.clone(), values: vec![c; torus.len()] }
    }

    pub fn from_fn(torus: &Torus, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self { torus: torus.clone(), values: (0..torus.len()).map(|h| f(torus.point(h))).collect() }
    }

    pub fn from_values(torus: &Torus, values: Vec<f64>) -> Result<Self> {
        if values.len() != torus.len() {
            return Err(Error::GridMismatch(format!("expected {} values, got {}", torus.len(), values.len())));
        }
        Ok(Self { torus: torus.clone(), values })
    }

    pub fn from_modes(torus: &Torus, modes: &[Mode]) -> Result<Self> {
        let half = (torus.n() / 2) as i64;
        for m in modes {
            if m.k[0].abs() >= half || m.k[1].abs() >= half || (torus.axes() == 1 && m.k[1] != 0) {
                return Err(Error::Aliasing(format!("mode {:?} not representable on n = {}", m.k, torus.n())));
            }
        }
        Ok(Self::from_fn(torus, |x| modes.iter().map(|m| m.eval(x)).sum()))
    }

    pub fn from_coefficients(torus: &Torus, coeffs: &[Complex64]) -> Self {
        Self { torus: torus.clone(), values: torus.inverse(coeffs) }
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        self.torus.forward(&self.values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { torus: self.torus.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert!(self.torus == other.torus);
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { torus: self.torus.clone(), values }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Real Fourier multiplier `m(k)`; `m` should be even in `k`.
    pub fn apply_multiplier(&self, m: impl Fn([f64; 2]) -> f64) -> Self {
        let mut c = self.coefficients();
        for (h, ch) in c.iter_mut().enumerate() {
            let k = self.torus.mode(h);
            *ch *= m([k[0] as f64, k[1] as f64]);
        }
        Self::from_coefficients(&self.torus, &c)
    }

    pub fn derivative(&self, axis: usize) -> Self {
        let mut c = self.coefficients();
        for (h, ch) in c.iter_mut().enumerate() {
            let k = self.torus.derivative_mode(h)[axis];
            *ch *= Complex64::new(0.0, k);
        }
        Self::from_coefficients(&self.torus, &c)
    }

    /// Horizontal gradient, one entry per torus axis.
    pub fn gradient(&self) -> Vec<Self> {
        (0..self.torus.axes()).map(|a| self.derivative(a)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn zero_mean(&self) -> Self {
        let m = self.mean();
        self.map(|v| v - m)
    }

    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.torus.cell_area()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * self.torus.cell_area()
    }

    pub fn l2_norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `|f|_s` with weight `(1 + |k|^2)^s`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let c = self.coefficients();
        let sum: f64 = c
            .iter()
            .enumerate()
            .map(|(h, ch)| {
                let k = self.torus.mode(h);
                let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
                (1.0 + k2).powf(s) * ch.norm_sqr()
            })
            .sum();
        (self.torus.measure() * sum).sqrt()
    }

    /// Fraction of spectral energy in modes with `max |k_a| > n / 3`.
    pub fn tail_fraction(&self) -> f64 {
        let c = self.coefficients();
        let cut = (self.torus.n() / 3) as i64;
        let (mut tail, mut total) = (0.0, 0.0);
        for (h, ch) in c.iter().enumerate() {
            let k = self.torus.mode(h);
            let e = ch.norm_sqr();
            total += e;
            if k[0].abs() > cut || k[1].abs() > cut {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }

    /// Spectral interpolation (or truncation) onto `n_new` points per axis.
    pub fn resample(&self, n_new: usize) -> Result<Self> {
        let target = Torus::new(self.torus.dim(), n_new)?;
        let c = self.coefficients();
        let mut out = vec![Complex64::new(0.0, 0.0); target.len()];
        for (h, ch) in c.iter().enumerate() {
            if self.torus.is_nyquist(h) {
                continue;
            }
            if let Some(t) = target.index_of_mode(self.torus.mode(h)) {
                out[t] = *ch;
            }
        }
        Ok(Self::from_coefficients(&target, &out))
    }

    /// Value, gradient and Hessian at an arbitrary point, by direct Fourier sums.
    pub fn jet_at(&self, x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        self.jet_from_coefficients(&self.coefficients(), x)
    }

    pub fn jet_from_coefficients(&self, c: &[Complex64], x: [f64; 2]) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let mut v = 0.0;
        let mut g = [0.0; 2];
        let mut hs = [[0.0; 2]; 2];
        for (h, ch) in c.iter().enumerate() {
            if ch.norm_sqr() < 1e-34 || self.torus.is_nyquist(h) {
                continue;
            }
            let k = self.torus.mode(h);
            let k = [k[0] as f64, k[1] as f64];
            let e = *ch * Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1]);
            v += e.re;
            for a in 0..2 {
                g[a] -= k[a] * e.im;
                for b in 0..2 {
                    hs[a][b] -= k[a] * k[b] * e.re;
                }
            }
        }
        (v, g, hs)
    }
}

macro_rules! field_binop {
    ($ty:ident, $tr:ident, $f:ident, $op:tt) => {
        impl $tr<&$ty> for &$ty {
            type Output = $ty;
            fn $f(self, rhs: &$ty) -> $ty {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $tr<f64> for &$ty {
            type Output = $ty;
            fn $f(self, rhs: f64) -> $ty {
                self.map(|a| a $op rhs)
            }
        }
    };
}

field_binop!(SpectralField, Add, add, +);
field_binop!(SpectralField, Sub, sub, -);
field_binop!(SpectralField, Mul, mul, *);

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.map(|v| -v)
    }
}

/// Real field on one phase of the slab; `data[j * nh + h]`, `j = 0` on the interface.
#[derive(Clone, Debug)]
pub struct BulkField {
    grid: SlabGrid,
    phase: Phase,
    data: Vec<f64>,
}

impl BulkField {
    pub fn zeros(grid: &SlabGrid, phase: Phase) -> Self {
        Self { grid: grid.clone(), phase, data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &SlabGrid, phase: Phase, c: f64) -> Self {
        Self { grid: grid.clone(), phase, data: vec![c; grid.len()] }
    }

    /// Sample `f([x1, x2, x3])`; `x2 = 0` when `d = 2`.
    pub fn from_fn(grid: &SlabGrid, phase: Phase, f: impl Fn([f64; 3]) -> f64) -> Self {
        let nh = grid.nh();
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.nv() {
            let x3 = grid.column().x3(phase, j);
            for h in 0..nh {
                let p = grid.torus().point(h);
                data.push(f([p[0], p[1], x3]));
            }
        }
        Self { grid: grid.clone(), phase, data }
    }

    pub fn from_data(grid: &SlabGrid, phase: Phase, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!("expected {} values, got {}", grid.len(), data.len())));
        }
        Ok(Self { grid: grid.clone(), phase, data })
    }

    /// Value `column(x3) * interface(x')` at every node.
    pub fn from_profile(grid: &SlabGrid, phase: Phase, column: &[f64], interface: &SpectralField) -> Self {
        let nh = grid.nh();
        let mut data = Vec::with_capacity(grid.len());
        for &cj in column.iter().take(grid.nv()) {
            data.extend(interface.values().iter().map(|v| cj * v));
        }
        debug_assert_eq!(data.len(), nh * grid.nv());
        Self { grid: grid.clone(), phase, data }
    }

    pub fn grid(&self) -> &SlabGrid {
        &self.grid
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn level(&self, j: usize) -> &[f64] {
        let nh = self.grid.nh();
        &self.data[j * nh..(j + 1) * nh]
    }

    pub fn level_field(&self, j: usize) -> SpectralField {
        SpectralField { torus: self.grid.torus().clone(), values: self.level(j).to_vec() }
    }

    /// Restriction to the interface `x3 = 0`.
    pub fn trace(&self) -> SpectralField {
        self.level_field(0)
    }

    pub fn wall_trace(&self) -> SpectralField {
        self.level_field(self.grid.nv() - 1)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid.clone(), phase: self.phase, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.data.len(), other.data.len());
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), phase: self.phase, data }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Horizontal spectral derivative along torus axis `axis`.
    pub fn dh(&self, axis: usize) -> Self {
        let torus = self.grid.torus();
        let nh = torus.len();
        let mut data = vec![0.0; self.data.len()];
        let mut buf = vec![Complex64::new(0.0, 0.0); nh];
        let ks: Vec<f64> = (0..nh).map(|h| torus.derivative_mode(h)[axis]).collect();
        for j in 0..self.grid.nv() {
            for (b, &v) in buf.iter_mut().zip(self.level(j)) {
                *b = Complex64::new(v, 0.0);
            }
            torus.forward_complex(&mut buf);
            for (b, &k) in buf.iter_mut().zip(&ks) {
                *b *= Complex64::new(0.0, k);
            }
            torus.inverse_complex(&mut buf);
            for (d, b) in data[j * nh..(j + 1) * nh].iter_mut().zip(&buf) {
                *d = b.re;
            }
        }
        Self { grid: self.grid.clone(), phase: self.phase, data }
    }

    /// Vertical Chebyshev derivative `d/dx3`.
    pub fn d3(&self) -> Self {
        let nh = self.grid.nh();
        let nv = self.grid.nv();
        let g = DMatrixView::from_slice(&self.data, nh, nv);
        let out = g * self.grid.column().diff_upper().transpose();
        let mut data: Vec<f64> = out.as_slice().to_vec();
        if self.phase == Phase::Lower {
            data.iter_mut().for_each(|v| *v = -*v);
        }
        Self { grid: self.grid.clone(), phase: self.phase, data }
    }

    /// Derivative along coordinate `i` of `(x1, [x2,] x3)`; the last index is vertical.
    pub fn partial(&self, i: usize) -> Self {
        if i + 1 == self.grid.dim() {
            self.d3()
        } else {
            self.dh(i)
        }
    }

    pub fn integrate(&self) -> f64 {
        let nh = self.grid.nh();
        let w = self.grid.column().weights();
        let area = self.grid.torus().cell_area();
        (0..self.grid.nv()).map(|j| w[j] * self.data[j * nh..(j + 1) * nh].iter().sum::<f64>()).sum::<f64>() * area
    }

    pub fn l2_norm(&self) -> f64 {
        (self * self).integrate().max(0.0).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

field_binop!(BulkField, Add, add, +);
field_binop!(BulkField, Sub, sub, -);
field_binop!(BulkField, Mul, mul, *);

impl Neg for &BulkField {
    type Output = BulkField;
    fn neg(self) -> BulkField {
        self.map(|v| -v)
    }
}
