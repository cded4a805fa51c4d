use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::smooth_step;

/// Littlewood-Paley windows and the bilinear cutoff of the paradifferential quantization.
///
/// `Theta(r) = 1 - T(r - 1)` (1 below radius 1, 0 above 2), dyadic windows
/// `vartheta_0 = Theta`, `vartheta_k(r) = Theta(r / 2^k) - Theta(r / 2^{k-1})`,
/// low cut `phi = 1 - Theta`, and `chi~(theta, eta)` equal to 1 for
/// `|theta| <= eps1 |eta|` and 0 for `|theta| >= eps2 |eta|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PLCutoffs {
    pub eps1: f64,
    pub eps2: f64,
}

impl Default for PLCutoffs {
    fn default() -> Self {
        Self { eps1: 0.1, eps2: 0.125 }
    }
}

impl PLCutoffs {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        let c = Self { eps1, eps2 };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps1 > 0.0 && self.eps1 < self.eps2 && self.eps2 < 0.5) {
            return Err(invalid(
                "cutoffs",
                format!("need 0 < eps1 < eps2 < 1/2, got eps1 = {}, eps2 = {}", self.eps1, self.eps2),
            ));
        }
        Ok(())
    }

    pub fn theta(r: f64) -> f64 {
        1.0 - smooth_step(r - 1.0)
    }

    /// Dyadic window `vartheta_k(|xi|)`; zero for `k < 0`.
    pub fn window(k: i32, r: f64) -> f64 {
        match k {
            k if k < 0 => 0.0,
            0 => Self::theta(r),
            k => Self::theta(r / 2f64.powi(k)) - Self::theta(r / 2f64.powi(k - 1)),
        }
    }

    /// `sum_{j <= k} vartheta_j = Theta(r / 2^k)`.
    pub fn low_pass(k: i32, r: f64) -> f64 {
        if k < 0 {
            0.0
        } else {
            Self::theta(r / 2f64.powi(k))
        }
    }

    /// Low-frequency cut `phi(|eta|)`: 0 for `|eta| <= 1`, 1 for `|eta| >= 2`.
    pub fn low_cut(r: f64) -> f64 {
        1.0 - Self::theta(r)
    }

    pub fn bilinear(&self, theta: f64, eta: f64) -> f64 {
        if eta <= 0.0 {
            return 0.0;
        }
        1.0 - smooth_step((theta / eta - self.eps1) / (self.eps2 - self.eps1))
    }

    /// Largest `|theta|` for which [`PLCutoffs::bilinear`] can be nonzero.
    pub fn reach(&self, eta: f64) -> f64 {
        self.eps2 * eta
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_partition_unity() {
        for r in [0.0, 0.7, 1.3, 3.0, 9.5, 40.0] {
            let s: f64 = (0..10).map(|k| PLCutoffs::window(k, r)).sum();
            assert!((s - 1.0).abs() < 1e-15, "r={r}");
        }
        let nonzero: Vec<i32> = (0..8).filter(|&k| PLCutoffs::window(k, 3.0) != 0.0).collect();
        assert!(nonzero.len() <= 2 && !nonzero.is_empty());
    }

    #[test]
    fn bilinear_cutoff_limits() {
        let c = PLCutoffs::default();
        assert_eq!(c.bilinear(0.05, 1.0), 1.0);
        assert_eq!(c.bilinear(0.2, 1.0), 0.0);
        assert_eq!(c.bilinear(0.0, 0.0), 0.0);
        assert!((c.bilinear(2.0, 20.0) - c.bilinear(0.2, 2.0)).abs() < 1e-15);
        assert_eq!(PLCutoffs::low_cut(1.0), 0.0);
        assert_eq!(PLCutoffs::low_cut(2.0), 1.0);
        assert!(PLCutoffs::new(0.2, 0.1).is_err());
    }
}
