//! Equation of state in Mach-scaled form and the log-density variable `F = log rho`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Thermodynamic closure `p = p(rho, S)` plus derived quantities.
///
/// Implementors supply `pressure` and `density`; the derivatives of
/// `F(p, S) = log rho(p, S)` default to centered finite differences.
pub trait EquationOfState: Send + Sync {
    fn pressure(&self, rho: f64, s: f64) -> Result<f64>;

    fn density(&self, p: f64, s: f64) -> Result<f64>;

    fn density_floor(&self) -> f64;

    fn log_density(&self, p: f64, s: f64) -> Result<f64> {
        Ok(self.density(p, s)?.ln())
    }

    /// `d^k F / dp^k` for `1 <= k <= 4`.
    fn log_density_dp(&self, p: f64, s: f64, k: usize) -> Result<f64> {
        let f = |x: f64| self.log_density(x, s);
        central_difference(f, p, k, 1e-3 * (1.0 + p.abs()))
    }

    /// `d^k F / dS^k` for `1 <= k <= 4`.
    fn log_density_ds(&self, p: f64, s: f64, k: usize) -> Result<f64> {
        let f = |x: f64| self.log_density(p, x);
        central_difference(f, s, k, 1e-3 * (1.0 + s.abs()))
    }

    /// `c_s^2 = dp/drho` at fixed entropy.
    fn sound_speed_sq(&self, rho: f64, s: f64) -> Result<f64> {
        let h = 1e-5 * rho;
        Ok((self.pressure(rho + h, s)? - self.pressure(rho - h, s)?) / (2.0 * h))
    }

    fn state(&self, p: f64, s: f64) -> Result<ThermoState> {
        let rho = self.density(p, s)?;
        Ok(ThermoState {
            rho,
            p,
            s,
            log_rho: rho.ln(),
            compressibility: self.log_density_dp(p, s, 1)?,
            sound_speed: self.sound_speed_sq(rho, s)?.sqrt(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThermoState {
    pub rho: f64,
    pub p: f64,
    pub s: f64,
    pub log_rho: f64,
    /// `F_p = dF/dp = 1 / (rho c_s^2)`.
    pub compressibility: f64,
    pub sound_speed: f64,
}

/// `p = (rho^gamma exp(S / C_V) - 1) / eps^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polytropic {
    pub gamma: f64,
    pub cv: f64,
    pub eps: f64,
    #[serde(default = "default_floor")]
    pub rho_floor: f64,
}

fn default_floor() -> f64 {
    1e-3
}

impl Polytropic {
    pub fn new(gamma: f64, cv: f64, eps: f64, rho_floor: f64) -> Result<Self> {
        let eos = Self { gamma, cv, eps, rho_floor };
        eos.validate()?;
        Ok(eos)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) {
            return Err(invalid("gamma", format!("adiabatic exponent must exceed 1, got {}", self.gamma)));
        }
        if !(self.cv > 0.0) {
            return Err(invalid("cv", format!("heat capacity must be positive, got {}", self.cv)));
        }
        if !(self.eps > 0.0) {
            return Err(invalid("eps", format!("Mach parameter must be positive, got {}", self.eps)));
        }
        if !(self.rho_floor > 0.0) {
            return Err(invalid("rho_floor", format!("density floor must be positive, got {}", self.rho_floor)));
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Self::new(self.gamma, self.cv, eps, self.rho_floor)
    }

    fn one_plus(&self, p: f64) -> Result<f64> {
        let q = 1.0 + self.eps * self.eps * p;
        if q <= 0.0 {
            return Err(Error::Unphysical(format!("pressure {p} is below -1/eps^2")));
        }
        Ok(q)
    }
}

impl EquationOfState for Polytropic {
    fn pressure(&self, rho: f64, s: f64) -> Result<f64> {
        if !(rho >= self.rho_floor) {
            return Err(Error::Unphysical(format!("density {rho} below floor {}", self.rho_floor)));
        }
        Ok((rho.powf(self.gamma) * (s / self.cv).exp() - 1.0) / (self.eps * self.eps))
    }

    fn density(&self, p: f64, s: f64) -> Result<f64> {
        let rho = (self.one_plus(p)? * (-s / self.cv).exp()).powf(1.0 / self.gamma);
        if rho < self.rho_floor {
            return Err(Error::Unphysical(format!("density {rho} below floor {}", self.rho_floor)));
        }
        Ok(rho)
    }

    fn density_floor(&self) -> f64 {
        self.rho_floor
    }

    fn log_density(&self, p: f64, s: f64) -> Result<f64> {
        Ok((self.one_plus(p)?.ln() - s / self.cv) / self.gamma)
    }

    fn log_density_dp(&self, p: f64, _s: f64, k: usize) -> Result<f64> {
        if k == 0 || k > 4 {
            return Err(invalid("k", format!("derivative order must be 1..=4, got {k}")));
        }
        let e2 = self.eps * self.eps;
        let q = self.one_plus(p)?;
        let fact: f64 = (1..k).map(|i| i as f64).product();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        Ok(sign * fact * e2.powi(k as i32) / (self.gamma * q.powi(k as i32)))
    }

    fn log_density_ds(&self, _p: f64, _s: f64, k: usize) -> Result<f64> {
        match k {
            1 => Ok(-1.0 / (self.gamma * self.cv)),
            2..=4 => Ok(0.0),
            _ => Err(invalid("k", format!("derivative order must be 1..=4, got {k}"))),
        }
    }

    fn sound_speed_sq(&self, rho: f64, s: f64) -> Result<f64> {
        if !(rho >= self.rho_floor) {
            return Err(Error::Unphysical(format!("density {rho} below floor {}", self.rho_floor)));
        }
        Ok(self.gamma * rho.powf(self.gamma - 1.0) * (s / self.cv).exp() / (self.eps * self.eps))
    }
}

/// User-supplied pressure law; density is recovered by safeguarded Newton iteration.
pub struct CustomEos<F: Fn(f64, f64) -> f64 + Send + Sync> {
    pub law: F,
    pub rho_floor: f64,
    pub rho_ceiling: f64,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> EquationOfState for CustomEos<F> {
    fn pressure(&self, rho: f64, s: f64) -> Result<f64> {
        if !(rho >= self.rho_floor) {
            return Err(Error::Unphysical(format!("density {rho} below floor {}", self.rho_floor)));
        }
        Ok((self.law)(rho, s))
    }

    fn density(&self, p: f64, s: f64) -> Result<f64> {
        let (mut lo, mut hi) = (self.rho_floor, self.rho_ceiling);
        let g = |r: f64| (self.law)(r, s) - p;
        if g(lo) > 0.0 || g(hi) < 0.0 {
            return Err(Error::Unphysical(format!("pressure {p} outside the law's range on [{lo}, {hi}]")));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn density_floor(&self) -> f64 {
        self.rho_floor
    }
}

fn central_difference(f: impl Fn(f64) -> Result<f64>, x: f64, k: usize, h: f64) -> Result<f64> {
    // fourth-order stencils
    let v = |m: f64| f(x + m * h);
    Ok(match k {
        1 => (-v(2.0)? + 8.0 * v(1.0)? - 8.0 * v(-1.0)? + v(-2.0)?) / (12.0 * h),
        2 => (-v(2.0)? + 16.0 * v(1.0)? - 30.0 * v(0.0)? + 16.0 * v(-1.0)? - v(-2.0)?) / (12.0 * h * h),
        3 => (-v(3.0)? + 8.0 * v(2.0)? - 13.0 * v(1.0)? + 13.0 * v(-1.0)? - 8.0 * v(-2.0)? + v(-3.0)?) / (8.0 * h.powi(3)),
        4 => {
            (-v(3.0)? + 12.0 * v(2.0)? - 39.0 * v(1.0)? + 56.0 * v(0.0)? - 39.0 * v(-1.0)? + 12.0 * v(-2.0)? - v(-3.0)?)
                / (6.0 * h.powi(4))
        }
        _ => return Err(invalid("k", format!("derivative order must be 1..=4, got {k}"))),
    })
}

/// Rectangular sample box in `(rho, S)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SampleBox {
    pub rho: [f64; 2],
    pub s: [f64; 2],
    pub points: usize,
}

impl Default for SampleBox {
    fn default() -> Self {
        Self { rho: [0.5, 2.0], s: [-1.0, 1.0], points: 9 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsRow {
    pub eps: f64,
    /// `max |d_p^k F| / eps^{2k}` for `k = 1..=4`.
    pub scaled_dp: [f64; 4],
    /// `max |d_S^k F|` for `k = 1..=4`.
    pub ds: [f64; 4],
    pub min_compressibility: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub rows: Vec<BoundsRow>,
    /// Fitted constant: the largest scaled ratio seen across the sweep.
    pub fitted_a: f64,
    /// Relative spread `(max - min) / max` of each scaled ratio across the sweep.
    pub spread: [f64; 4],
}

/// Sweep `eps` over the box and collect the scaled derivative ratios.
pub fn derivative_bounds_check(base: &Polytropic, eps_sweep: &[f64], samples: SampleBox) -> Result<BoundsReport> {
    let mut rows = Vec::new();
    let n = samples.points.max(2);
    for &eps in eps_sweep {
        let eos = base.with_eps(eps)?;
        let mut row = BoundsRow { eps, scaled_dp: [0.0; 4], ds: [0.0; 4], min_compressibility: f64::INFINITY };
        for a in 0..n {
            let rho = samples.rho[0] + (samples.rho[1] - samples.rho[0]) * a as f64 / (n - 1) as f64;
            for b in 0..n {
                let s = samples.s[0] + (samples.s[1] - samples.s[0]) * b as f64 / (n - 1) as f64;
                let p = eos.pressure(rho, s)?;
                for k in 1..=4 {
                    let d = eos.log_density_dp(p, s, k)?.abs() / eps.powi(2 * k as i32);
                    row.scaled_dp[k - 1] = row.scaled_dp[k - 1].max(d);
                    row.ds[k - 1] = row.ds[k - 1].max(eos.log_density_ds(p, s, k)?.abs());
                }
                row.min_compressibility = row.min_compressibility.min(eos.log_density_dp(p, s, 1)?);
            }
        }
        rows.push(row);
    }
    let mut spread = [0.0; 4];
    let mut fitted_a: f64 = 0.0;
    for k in 0..4 {
        let hi = rows.iter().map(|r| r.scaled_dp[k]).fold(0.0, f64::max);
        let lo = rows.iter().map(|r| r.scaled_dp[k]).fold(f64::INFINITY, f64::min);
        spread[k] = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
        fitted_a = fitted_a.max(hi);
    }
    Ok(BoundsReport { rows, fitted_a, spread })
}
