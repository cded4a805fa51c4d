use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};

/// Which side of the interface a bulk quantity lives on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Phase {
    Upper,
    Lower,
}

impl Phase {
    pub fn sign(self) -> f64 {
        match self {
            Phase::Upper => 1.0,
            Phase::Lower => -1.0,
        }
    }

    pub const BOTH: [Phase; 2] = [Phase::Upper, Phase::Lower];
}

/// Vertical Chebyshev-Lobatto column over `[0, H]` (upper) or `[-H, 0]` (lower).
///
/// Node `j = 0` sits on the interface and `j = nv - 1` on the wall. Nodes are
/// pulled toward the interface by `|x3| = H (e^{beta s} - 1) / (e^beta - 1)`,
/// `s = (1 - cos(pi j / N)) / 2`; `beta = 0` gives the plain Lobatto map.
#[derive(Clone, Debug)]
pub struct Column {
    nv: usize,
    half_height: f64,
    stretch: f64,
    depth: Vec<f64>,
    diff: DMatrix<f64>,
    weights: Vec<f64>,
}

impl Column {
    pub fn new(nv: usize, half_height: f64, stretch: f64) -> Result<Self> {
        if nv < 4 {
            return Err(invalid("nv", format!("need at least 4 vertical nodes, got {nv}")));
        }
        if !(half_height > 0.0) || !half_height.is_finite() {
            return Err(invalid("half_height", format!("must be positive, got {half_height}")));
        }
        if !(stretch >= 0.0) || stretch > 12.0 {
            return Err(invalid("stretch", format!("must lie in [0, 12], got {stretch}")));
        }
        let n = nv - 1;
        let t: Vec<f64> = (0..nv).map(|j| (PI * j as f64 / n as f64).cos()).collect();
        let s: Vec<f64> = t.iter().map(|&tj| 0.5 * (1.0 - tj)).collect();
        let (g, dg): (Vec<f64>, Vec<f64>) = s.iter().map(|&sj| stretch_map(stretch, sj)).unzip();

        let dt = cheb_matrix(&t);
        // d/dx3 = (1 / (H g'(s))) * (ds/dt)^{-1} d/dt, ds/dt = -1/2
        let mut diff = DMatrix::zeros(nv, nv);
        for j in 0..nv {
            let scale = -2.0 / (half_height * dg[j]);
            for m in 0..nv {
                diff[(j, m)] = scale * dt[(j, m)];
            }
        }
        let cc = clenshaw_curtis(n);
        let weights = (0..nv).map(|j| cc[j] * 0.5 * half_height * dg[j]).collect();
        let depth = g.iter().map(|&gj| half_height * gj).collect();
        Ok(Self { nv, half_height, stretch, depth, diff, weights })
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    /// Distance `|x3|` of node `j` from the interface.
    pub fn depth(&self, j: usize) -> f64 {
        self.depth[j]
    }

    pub fn x3(&self, phase: Phase, j: usize) -> f64 {
        phase.sign() * self.depth[j]
    }

    /// Differentiation matrix in `x3` for the upper phase; negate for the lower.
    pub fn diff_upper(&self) -> &DMatrix<f64> {
        &self.diff
    }

    pub fn diff(&self, phase: Phase) -> DMatrix<f64> {
        match phase {
            Phase::Upper => self.diff.clone(),
            Phase::Lower => -&self.diff,
        }
    }

    /// Quadrature weights for `int dx3` over one phase.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Stretch map `g(s)` and `g'(s)` on `[0, 1]`.
fn stretch_map(beta: f64, s: f64) -> (f64, f64) {
    if beta < 1e-8 {
        return (s, 1.0);
    }
    let den = beta.exp_m1();
    ((beta * s).exp_m1() / den, beta * (beta * s).exp() / den)
}

/// Chebyshev differentiation matrix on `t_j = cos(pi j / N)`.
fn cheb_matrix(t: &[f64]) -> DMatrix<f64> {
    let nv = t.len();
    let n = nv - 1;
    let c: Vec<f64> = (0..nv)
        .map(|j| {
            let base = if j == 0 || j == n { 2.0 } else { 1.0 };
            if j % 2 == 0 {
                base
            } else {
                -base
            }
        })
        .collect();
    let mut d = DMatrix::zeros(nv, nv);
    for i in 0..nv {
        for j in 0..nv {
            if i != j {
                d[(i, j)] = c[i] / c[j] / (t[i] - t[j]);
            }
        }
    }
    // negative-sum trick keeps constants in the kernel to round-off
    for i in 0..nv {
        let s: f64 = (0..nv).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}

/// Clenshaw-Curtis weights for `int_{-1}^{1}` on `cos(pi j / N)`.
fn clenshaw_curtis(n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let theta = |j: usize| PI * j as f64 / n as f64;
    for (j, wj) in w.iter_mut().enumerate() {
        let mut v = 1.0;
        let half = n / 2;
        for k in 1..=half {
            let b = if n % 2 == 0 && k == half { 1.0 } else { 2.0 };
            v -= b * (2.0 * k as f64 * theta(j)).cos() / (4.0 * (k * k) as f64 - 1.0);
        }
        let c = if j == 0 || j == n { 1.0 } else { 2.0 };
        *wj = c * v / n as f64;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_smooth_profiles() {
        let col = Column::new(40, 20.0, 3.0).unwrap();
        let f: Vec<f64> = (0..col.nv()).map(|j| (-col.depth(j) / 3.0).exp()).collect();
        let d = col.diff_upper() * nalgebra::DVector::from_vec(f.clone());
        for j in 0..col.nv() {
            assert!((d[j] + f[j] / 3.0).abs() < 1e-9, "j={j} {}", d[j] + f[j] / 3.0);
        }
    }

    #[test]
    fn quadrature_integrates_exponentials() {
        let col = Column::new(32, 15.0, 2.0).unwrap();
        let q: f64 = (0..col.nv()).map(|j| col.weights()[j] * (-col.depth(j)).exp()).sum();
        assert!((q - (1.0 - (-15.0f64).exp())).abs() < 1e-12);
        let len: f64 = col.weights().iter().sum();
        assert!((len - 15.0).abs() < 1e-12);
    }

    #[test]
    fn unstretched_limit() {
        let col = Column::new(9, 2.0, 0.0).unwrap();
        assert!((col.depth(8) - 2.0).abs() < 1e-15);
        assert!(col.depth(0).abs() < 1e-15);
        assert!(Column::new(3, 2.0, 0.0).is_err());
    }
}
