use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::{Phase, SpectralField, Torus};
use crate::stability::TwoPhaseTrace;

/// Interface traces of one phase as fields on the torus.
#[derive(Clone, Debug)]
pub struct PhaseCoefficients {
    pub rho: SpectralField,
    pub v: [SpectralField; 2],
    pub b: [SpectralField; 2],
    /// `b / sqrt(rho)`.
    pub b_scaled: [SpectralField; 2],
}

/// Density-weighted velocities and Alfven vectors entering the interface equation.
#[derive(Clone, Debug)]
pub struct EffectiveCoefficients {
    pub dim: usize,
    pub upper: PhaseCoefficients,
    pub lower: PhaseCoefficients,
    /// `(rho+ v+ + rho- v-) / (rho+ + rho-)`.
    pub w: [SpectralField; 2],
    /// `sqrt(rho+ rho-) / (rho+ + rho-) [v]`.
    pub u: [SpectralField; 2],
    pub rho_total: SpectralField,
}

fn column(torus: &Torus, n: usize, get: impl Fn(usize) -> f64) -> SpectralField {
    if n == 1 {
        SpectralField::constant(torus, get(0))
    } else {
        SpectralField::from_values(torus, (0..n).map(get).collect()).expect("sized by torus")
    }
}

/// Builds the coefficients on `torus`. The trace holds either one point (uniform
/// background) or one point per torus node, in node order.
pub fn effective_coefficients(trace: &TwoPhaseTrace, torus: &Torus) -> Result<EffectiveCoefficients> {
    trace.validate(0.0)?;
    let n = trace.len();
    if n != 1 && n != torus.len() {
        return Err(Error::GridMismatch(format!("trace has {n} points, torus has {}", torus.len())));
    }
    if n > 1 {
        for (h, p) in trace.points.iter().enumerate() {
            let x = torus.point(h);
            if (p[0] - x[0]).abs() > 1e-9 || (torus.axes() == 2 && (p[1] - x[1]).abs() > 1e-9) {
                return Err(Error::GridMismatch(format!("trace point {h} is not torus node {x:?}")));
            }
        }
    }
    let axes = if trace.dim == 2 { 1 } else { 2 };
    let keep = |v: [f64; 2], a: usize| if a < axes { v[a] } else { 0.0 };
    let phase = |p: Phase| {
        let t = trace.phase(p);
        PhaseCoefficients {
            rho: column(torus, n, |i| t.rho[i]),
            v: [0, 1].map(|a| column(torus, n, |i| keep(t.v[i], a))),
            b: [0, 1].map(|a| column(torus, n, |i| keep(t.b[i], a))),
            b_scaled: [0, 1].map(|a| column(torus, n, |i| keep(t.b[i], a) / t.rho[i].sqrt())),
        }
    };
    let (up, lo) = (&trace.upper, &trace.lower);
    let w = [0, 1].map(|a| {
        column(torus, n, |i| (up.rho[i] * keep(up.v[i], a) + lo.rho[i] * keep(lo.v[i], a)) / (up.rho[i] + lo.rho[i]))
    });
    let u = [0, 1].map(|a| {
        column(torus, n, |i| (up.rho[i] * lo.rho[i]).sqrt() / (up.rho[i] + lo.rho[i]) * keep(trace.jump_v(i), a))
    });
    Ok(EffectiveCoefficients {
        dim: trace.dim,
        upper: phase(Phase::Upper),
        lower: phase(Phase::Lower),
        w,
        u,
        rho_total: column(torus, n, |i| up.rho[i] + lo.rho[i]),
    })
}

impl EffectiveCoefficients {
    pub fn torus(&self) -> &Torus {
        self.rho_total.torus()
    }

    pub fn phase(&self, phase: Phase) -> &PhaseCoefficients {
        match phase {
            Phase::Upper => &self.upper,
            Phase::Lower => &self.lower,
        }
    }

    /// Every field is constant over the torus.
    pub fn is_uniform(&self) -> bool {
        let flat = |f: &SpectralField| {
            let v0 = f.values()[0];
            f.values().iter().all(|v| *v == v0)
        };
        let all = [&self.rho_total, &self.w[0], &self.w[1], &self.u[0], &self.u[1]].into_iter().chain(
            [&self.upper, &self.lower].into_iter().flat_map(|p| [&p.rho, &p.v[0], &p.v[1], &p.b_scaled[0], &p.b_scaled[1]]),
        );
        all.into_iter().all(flat)
    }

    /// `rho+ (b+ x b+) + rho- (b- x b-) - (rho+ + rho-) (u x u)` at node `h`.
    pub fn form_matrix(&self, h: usize) -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for a in 0..2 {
            for c in 0..2 {
                for p in [&self.upper, &self.lower] {
                    m[a][c] += p.rho.values()[h] * p.b_scaled[a].values()[h] * p.b_scaled[c].values()[h];
                }
                m[a][c] -= self.rho_total.values()[h] * self.u[a].values()[h] * self.u[c].values()[h];
            }
        }
        m
    }

    /// Largest speed among `w`, `u` and the scaled Alfven vectors.
    pub fn max_speed(&self) -> f64 {
        let speed = |f: &[SpectralField; 2]| {
            f[0].values().iter().zip(f[1].values()).fold(0.0f64, |m, (a, b)| m.max(a.hypot(*b)))
        };
        [&self.w, &self.u, &self.upper.b_scaled, &self.lower.b_scaled].into_iter().map(speed).fold(0.0, f64::max)
    }
}

/// Constant-coefficient normal mode `psi ~ exp(i k.x + lambda t)` of the frozen interface equation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormalMode {
    /// Restoring coefficient `Omega^2`; negative means exponential growth.
    pub omega_sq: f64,
    /// `w . k`, the Doppler shift.
    pub doppler: f64,
    pub frequency: f64,
    pub growth_rate: f64,
}

/// Normal mode at node `h` with surface-tension symbol value `surface` (the multiplier of
/// `(sigma / 2) T_Lambda T_h` at `k`).
pub fn normal_mode(coeffs: &EffectiveCoefficients, h: usize, k: [f64; 2], sigma: f64, surface: f64) -> NormalMode {
    let dot = |f: &[SpectralField; 2]| f[0].values()[h] * k[0] + f[1].values()[h] * k[1];
    let rho = coeffs.rho_total.values()[h];
    let mut restoring = 0.5 * sigma * surface;
    for p in [&coeffs.upper, &coeffs.lower] {
        restoring += p.rho.values()[h] * dot(&p.b_scaled).powi(2);
    }
    let omega_sq = restoring / rho - dot(&coeffs.u).powi(2);
    NormalMode {
        omega_sq,
        doppler: dot(&coeffs.w),
        frequency: omega_sq.max(0.0).sqrt(),
        growth_rate: (-omega_sq).max(0.0).sqrt(),
    }
}
