use super::cutoffs::PLCutoffs;
use super::ops::{para_apply, ParaSymbol, Part};
use super::symbols::{CurvatureSymbol, GridJets};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

/// `div(grad psi / sqrt(1 + |grad psi|^2))`, evaluated on a 2x padded grid and truncated back.
pub fn mean_curvature(psi: &SpectralField) -> Result<SpectralField> {
    let tail = psi.tail_fraction();
    if tail > 1e-20 {
        return Err(Error::Aliasing(format!(
            "interface carries {tail:.2e} of its energy above n/3; refine the grid"
        )));
    }
    let n = psi.torus().n();
    let fine = psi.resample(2 * n)?;
    let grad = fine.gradient();
    let mut norm2 = SpectralField::constant(fine.torus(), 1.0);
    for g in &grad {
        norm2 = &norm2 + &(g * g);
    }
    let inv = norm2.map(|v| 1.0 / v.sqrt());
    let mut div = SpectralField::zeros(fine.torus());
    for (a, g) in grad.iter().enumerate() {
        div = &div + &(g * &inv).derivative(a);
    }
    div.resample(n)
}

/// Curvature paralinearization: `H(psi) + T_h psi` and `T_h psi`.
#[derive(Clone, Debug)]
pub struct CurvatureSplit {
    pub remainder: SpectralField,
    pub paralinear: SpectralField,
}

pub fn curvature_paralinearization(psi: &SpectralField, cut: &PLCutoffs) -> Result<CurvatureSplit> {
    let jets = GridJets::from_psi(psi);
    let paralinear = para_apply(
        &ParaSymbol::Symbol { symbol: &CurvatureSymbol, jets: &jets, part: Part::Full },
        psi,
        cut,
    )?;
    let remainder = &mean_curvature(psi)? + &paralinear;
    Ok(CurvatureSplit { remainder, paralinear })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Mode, Torus};

    #[test]
    fn flat_and_small_amplitude() {
        let t = Torus::new(3, 32).unwrap();
        assert!(mean_curvature(&SpectralField::zeros(&t)).unwrap().max_abs() < 1e-15);
        let mut errs = Vec::new();
        for eps in [1e-2, 5e-3] {
            let psi = SpectralField::from_modes(&t, &[Mode::sin(eps, [1, 0])]).unwrap();
            let h = mean_curvature(&psi).unwrap();
            errs.push((&h + &psi).max_abs());
        }
        // O(eps^3) departure from the linearization
        assert!((errs[0] / errs[1]).log2() > 2.8);
    }

    #[test]
    fn matches_closed_form() {
        let t = Torus::new(2, 64).unwrap();
        let psi = SpectralField::from_modes(&t, &[Mode::sin(0.3, [1, 0])]).unwrap();
        let h = mean_curvature(&psi).unwrap();
        for (k, v) in h.values().iter().enumerate() {
            let x = t.point(k)[0];
            let exact = -0.3 * x.sin() / (1.0 + 0.09 * x.cos().powi(2)).powf(1.5);
            assert!((v - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_unresolved_interfaces() {
        let t = Torus::new(2, 16).unwrap();
        let psi = SpectralField::from_modes(&t, &[Mode::sin(0.3, [7, 0])]).unwrap();
        assert!(matches!(mean_curvature(&psi), Err(Error::Aliasing(_))));
    }
}
