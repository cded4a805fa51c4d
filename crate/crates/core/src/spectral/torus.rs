use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};

/// Periodic horizontal grid on `[0, 2pi)^(d-1)`, `n` points per axis.
///
/// Flat storage is row-major with `x1` as the slow axis: `h = i1 * n + i2`.
/// For `d = 2` there is a single horizontal axis and `h = i1`.
#[derive(Clone)]
pub struct Torus {
    dim: usize,
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Torus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Torus").field("dim", &self.dim).field("n", &self.n).finish()
    }
}

impl PartialEq for Torus {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}

impl Torus {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(invalid("dim", format!("spatial dimension must be 2 or 3, got {dim}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(invalid("n", format!("horizontal resolution must be even and >= 4, got {n}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self { dim, n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) })
    }

    /// Spatial dimension `d` of the slab (the torus has `d - 1` axes).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn axes(&self) -> usize {
        self.dim - 1
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing().powi(self.axes() as i32)
    }

    /// Measure of the torus, `(2pi)^(d-1)`.
    pub fn measure(&self) -> f64 {
        (2.0 * PI).powi(self.axes() as i32)
    }

    pub fn point(&self, h: usize) -> [f64; 2] {
        let dx = self.spacing();
        if self.axes() == 1 {
            [h as f64 * dx, 0.0]
        } else {
            [(h / self.n) as f64 * dx, (h % self.n) as f64 * dx]
        }
    }

    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Integer wave vector of flat index `h` (second entry 0 for `d = 2`).
    pub fn mode(&self, h: usize) -> [i64; 2] {
        if self.axes() == 1 {
            [self.wavenumber(h), 0]
        } else {
            [self.wavenumber(h / self.n), self.wavenumber(h % self.n)]
        }
    }

    pub fn is_nyquist(&self, h: usize) -> bool {
        let half = -(self.n as i64) / 2;
        let k = self.mode(h);
        k[0] == half || (self.axes() == 2 && k[1] == half)
    }

    /// Wave vector used by first derivatives: the Nyquist component is zeroed.
    pub fn derivative_mode(&self, h: usize) -> [f64; 2] {
        let half = -(self.n as i64) / 2;
        let k = self.mode(h);
        let f = |v: i64| if v == half { 0.0 } else { v as f64 };
        [f(k[0]), f(k[1])]
    }

    pub fn index_of_mode(&self, k: [i64; 2]) -> Option<usize> {
        let n = self.n as i64;
        let idx = |v: i64| -> Option<usize> {
            if v >= -n / 2 && v < n / 2 {
                Some(v.rem_euclid(n) as usize)
            } else {
                None
            }
        };
        if self.axes() == 1 {
            if k[1] != 0 {
                return None;
            }
            idx(k[0])
        } else {
            Some(idx(k[0])? * self.n + idx(k[1])?)
        }
    }

    /// Fourier coefficients `c_k` with `f(x) = sum_k c_k exp(i k.x)`.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_complex(&mut buf);
        buf
    }

    pub fn forward_complex(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        self.transform(buf, false);
        let scale = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    pub fn inverse_complex(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        self.transform(buf, true);
    }

    /// Real part of the synthesis `sum_k c_k exp(i k.x)`.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse_complex(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse { &self.inv } else { &self.fwd };
        let n = self.n;
        if self.axes() == 1 {
            plan.process(buf);
            return;
        }
        // rows: contiguous x2 axis
        plan.process(buf);
        // columns: strided x1 axis
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for i2 in 0..n {
            for i1 in 0..n {
                col[i1] = buf[i1 * n + i2];
            }
            plan.process(&mut col);
            for i1 in 0..n {
                buf[i1 * n + i2] = col[i1];
            }
        }
    }
}
