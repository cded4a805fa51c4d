use serde::Serialize;

use super::anisotropic::{sobolev_norm, star_norm};
use crate::error::{invalid, Result};
use crate::spectral::{BulkField, Phase, SlabGrid};

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingSample {
    pub label: String,
    pub sup: f64,
    pub star_norm: f64,
    pub sobolev_norm: f64,
    /// `sup / ||u||_{H_*^m}`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub order: usize,
    pub samples: Vec<EmbeddingSample>,
    pub max_ratio: f64,
}

/// Ratios `||u||_inf / ||u||_{H_*^m}` over `samples`, with the full `H^m` norm alongside.
pub fn embedding_spot_check(samples: &[(String, BulkField)], m: usize) -> Result<EmbeddingReport> {
    if samples.is_empty() {
        return Err(invalid("samples", "need at least one test function"));
    }
    let samples = samples
        .iter()
        .map(|(label, u)| {
            let star = star_norm(u, m)?;
            let sup = u.max_abs();
            Ok(EmbeddingSample { label: label.clone(), sup, star_norm: star, sobolev_norm: sobolev_norm(u, m), ratio: sup / star })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = samples.iter().map(|s| s.ratio).fold(0.0, f64::max);
    Ok(EmbeddingReport { order: m, samples, max_ratio })
}

/// Constant, horizontal sines up to a third of the band, and interface boundary layers
/// `exp(-|x3| / delta)`.
pub fn standard_family(grid: &SlabGrid, deltas: &[f64]) -> Vec<(String, BulkField)> {
    let mut out = vec![("const".to_string(), BulkField::constant(grid, Phase::Upper, 1.0))];
    let kmax = grid.torus().n() / 3;
    let mut k = 1;
    while k <= kmax {
        let kf = k as f64;
        out.push((format!("sin k={k}"), BulkField::from_fn(grid, Phase::Upper, move |x| (kf * x[0]).sin())));
        k *= 2;
    }
    for &d in deltas {
        out.push((format!("layer delta={d}"), BulkField::from_fn(grid, Phase::Upper, move |x| (-x[2].abs() / d).exp())));
    }
    out
}
