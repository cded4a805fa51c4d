use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::cutoffs::PLCutoffs;
use super::ops::{para_apply, ParaSymbol, Part};
use super::symbols::{compose, CurvatureSymbol, GridJets, SummedDtnSymbol, Symbol, SymbolPoint, SymmetrizerM, SymmetrizerN};
use crate::error::{invalid, Result};
use crate::fit::loglog_slope;
use crate::spectral::{Mode, SpectralField};

/// Largest pointwise symbol residuals, scaled by `|xi|^order` of the component.
#[derive(Clone, Debug, Serialize)]
pub struct SymbolResidualReport {
    pub samples: usize,
    pub order3_max: f64,
    pub order2_max: f64,
}

/// `n # (Lambda # h)` and `(m # m) # n`.
pub fn symmetrization_sides() -> (Arc<dyn Symbol>, Arc<dyn Symbol>) {
    let n: Arc<dyn Symbol> = Arc::new(SymmetrizerN);
    let m: Arc<dyn Symbol> = Arc::new(SymmetrizerM);
    let left = compose(n.clone(), compose(Arc::new(SummedDtnSymbol), Arc::new(CurvatureSymbol)));
    let right = compose(compose(m.clone(), m), n);
    (left, right)
}

pub fn symmetrization_symbol_residual(psi: &SpectralField, samples: usize, seed: u64) -> Result<SymbolResidualReport> {
    let (left, right) = symmetrization_sides();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = psi.coefficients();
    let axes = psi.torus().axes();
    let (mut r3, mut r2) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let x = [rng.gen_range(0.0..2.0 * PI), if axes == 2 { rng.gen_range(0.0..2.0 * PI) } else { 0.0 }];
        let r: f64 = rng.gen_range(0.5..20.0);
        let xi = if axes == 2 {
            let t: f64 = rng.gen_range(0.0..2.0 * PI);
            [r * t.cos(), r * t.sin()]
        } else {
            [if rng.gen_bool(0.5) { r } else { -r }, 0.0]
        };
        let (_, g, hess) = psi.jet_from_coefficients(&coeffs, x);
        let p = SymbolPoint::new(x, g, hess, xi)?;
        r3 = r3.max((left.principal(&p) - right.principal(&p)).norm() / r.powi(3));
        r2 = r2.max((left.subprincipal(&p) - right.subprincipal(&p)).norm() / r.powi(2));
    }
    Ok(SymbolResidualReport { samples, order3_max: r3, order2_max: r2 })
}

/// Norms of a term and of a residual under frequency scaling `u_k = cos(k x1)`.
#[derive(Clone, Debug, Serialize)]
pub struct ScalingReport {
    pub ks: Vec<i64>,
    pub term_norms: Vec<f64>,
    pub residual_norms: Vec<f64>,
    pub term_slope: f64,
    pub residual_slope: f64,
    /// `term_slope - residual_slope`: orders gained by the residual.
    pub gain: f64,
}

impl ScalingReport {
    pub fn from_norms(ks: Vec<i64>, term_norms: Vec<f64>, residual_norms: Vec<f64>) -> Self {
        let kx: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        let term_slope = loglog_slope(&kx, &term_norms);
        let residual_slope = loglog_slope(&kx, &residual_norms);
        Self { ks, term_norms, residual_norms, term_slope, residual_slope, gain: term_slope - residual_slope }
    }
}

fn apply_chain(chain: &[&dyn Symbol], jets: &GridJets, u: &SpectralField, cut: &PLCutoffs) -> Result<SpectralField> {
    let mut v = u.clone();
    for s in chain.iter().rev() {
        v = para_apply(&ParaSymbol::Symbol { symbol: *s, jets, part: Part::Full }, &v, cut)?;
    }
    Ok(v)
}

fn probe(psi: &SpectralField, k: i64) -> Result<SpectralField> {
    if k <= 2 {
        return Err(invalid("k", "probe frequencies must exceed the low-frequency cut"));
    }
    SpectralField::from_modes(psi.torus(), &[Mode::cos(1.0, [k, 0])])
}

/// `T_n T_Lambda T_h u_k` against `T_m T_m T_n u_k`.
pub fn symmetrization_operator_residual(psi: &SpectralField, ks: &[i64], cut: &PLCutoffs) -> Result<ScalingReport> {
    let jets = GridJets::from_psi(psi);
    let (mut terms, mut res) = (Vec::new(), Vec::new());
    for &k in ks {
        let u = probe(psi, k)?;
        let left = apply_chain(&[&SymmetrizerN, &SummedDtnSymbol, &CurvatureSymbol], &jets, &u, cut)?;
        let right = apply_chain(&[&SymmetrizerM, &SymmetrizerM, &SymmetrizerN], &jets, &u, cut)?;
        terms.push(left.l2_norm().max(right.l2_norm()));
        res.push((&left - &right).l2_norm());
    }
    Ok(ScalingReport::from_norms(ks.to_vec(), terms, res))
}

/// `T_a T_b u_k` against `T_{a#b} u_k`.
pub fn composition_residual(
    a: Arc<dyn Symbol>,
    b: Arc<dyn Symbol>,
    psi: &SpectralField,
    ks: &[i64],
    cut: &PLCutoffs,
) -> Result<ScalingReport> {
    let jets = GridJets::from_psi(psi);
    let ab = compose(a.clone(), b.clone());
    let (mut terms, mut res) = (Vec::new(), Vec::new());
    for &k in ks {
        let u = probe(psi, k)?;
        let two = apply_chain(&[a.as_ref(), b.as_ref()], &jets, &u, cut)?;
        let one = apply_chain(&[ab.as_ref()], &jets, &u, cut)?;
        terms.push(two.l2_norm());
        res.push((&two - &one).l2_norm());
    }
    Ok(ScalingReport::from_norms(ks.to_vec(), terms, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Torus;

    #[test]
    fn flat_residual_vanishes() {
        let t = Torus::new(3, 16).unwrap();
        let r = symmetrization_symbol_residual(&SpectralField::zeros(&t), 100, 1).unwrap();
        assert!(r.order3_max < 1e-14 && r.order2_max < 1e-14);
    }

    #[test]
    fn curved_residual_vanishes_at_top_orders() {
        let t = Torus::new(3, 16).unwrap();
        let psi = SpectralField::from_modes(&t, &[Mode::sin(0.2, [1, 0]), Mode::cos(0.1, [1, 2])]).unwrap();
        let r = symmetrization_symbol_residual(&psi, 1000, 2).unwrap();
        assert!(r.order3_max < 1e-10, "{r:?}");
        assert!(r.order2_max < 1e-10, "{r:?}");
    }
}
