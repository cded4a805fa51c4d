use num_complex::Complex64;

use super::cutoffs::PLCutoffs;
use super::symbols::{GridJets, Symbol};
use crate::error::{Error, Result};
use crate::spectral::{SpectralField, Torus};

/// Which part of a two-term symbol to quantize.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    Full,
    Principal,
}

/// Anything `T_a` can be formed from.
pub enum ParaSymbol<'a> {
    /// Function of `x` only (Bony paraproduct).
    Function(&'a SpectralField),
    /// Function of `xi` only.
    Multiplier(&'a dyn Fn([f64; 2]) -> Complex64),
    /// Symbol in `(x, xi)` sampled at the grid jets of `psi`.
    Symbol { symbol: &'a dyn Symbol, jets: &'a GridJets, part: Part },
}

fn norm(k: [i64; 2]) -> f64 {
    (k[0] as f64).hypot(k[1] as f64)
}

fn fk(k: [i64; 2]) -> [f64; 2] {
    [k[0] as f64, k[1] as f64]
}

pub fn lp_project(u: &SpectralField, k: i32) -> SpectralField {
    u.apply_multiplier(|xi| PLCutoffs::window(k, xi[0].hypot(xi[1])))
}

/// `T_a u = sum_eta sum_theta chi~(theta, eta) a^(theta, eta) phi(eta) u^(eta) e^{i(theta + eta).x}`.
pub fn para_apply(a: &ParaSymbol<'_>, u: &SpectralField, cut: &PLCutoffs) -> Result<SpectralField> {
    let c = para_apply_coefficients(a, u, cut)?;
    Ok(SpectralField::from_coefficients(u.torus(), &c))
}

pub fn para_apply_coefficients(a: &ParaSymbol<'_>, u: &SpectralField, cut: &PLCutoffs) -> Result<Vec<Complex64>> {
    cut.validate()?;
    let torus = u.torus();
    let uh = u.coefficients();
    let umax = uh.iter().fold(0.0f64, |m, c| m.max(c.norm()));
    let mut out = vec![Complex64::new(0.0, 0.0); torus.len()];
    if umax == 0.0 {
        return Ok(out);
    }
    let active: Vec<usize> = (0..torus.len())
        .filter(|&h| uh[h].norm() > 1e-15 * umax && PLCutoffs::low_cut(norm(torus.mode(h))) > 0.0)
        .collect();

    if let ParaSymbol::Multiplier(m) = a {
        for &h in &active {
            out[h] = m(fk(torus.mode(h))) * PLCutoffs::low_cut(norm(torus.mode(h))) * uh[h];
        }
        return Ok(out);
    }
    if let ParaSymbol::Symbol { symbol, jets, part } = a {
        if !jets.torus().eq(torus) {
            return Err(Error::GridMismatch("symbol jets and input live on different grids".into()));
        }
        if symbol.x_independent() || jets.is_uniform() {
            for &h in &active {
                let p = jets.point(0, fk(torus.mode(h)));
                let v = match part {
                    Part::Full => symbol.eval(&p),
                    Part::Principal => symbol.principal(&p),
                };
                out[h] = v * PLCutoffs::low_cut(norm(torus.mode(h))) * uh[h];
            }
            return Ok(out);
        }
    }

    // theta modes sorted by length so each eta scans only the reachable disc
    let mut thetas: Vec<(f64, usize)> = (0..torus.len()).map(|h| (norm(torus.mode(h)), h)).collect();
    thetas.sort_by(|x, y| x.0.total_cmp(&y.0));

    let fixed = match a {
        ParaSymbol::Function(f) => {
            if f.torus() != torus {
                return Err(Error::GridMismatch("paraproduct factors live on different grids".into()));
            }
            Some(f.coefficients())
        }
        _ => None,
    };
    let sample = |eta: [f64; 2]| -> Vec<Complex64> {
        let ParaSymbol::Symbol { symbol, jets, part } = a else { unreachable!() };
        let mut buf: Vec<Complex64> = (0..torus.len())
            .map(|h| {
                let p = jets.point(h, eta);
                match part {
                    Part::Full => symbol.eval(&p),
                    Part::Principal => symbol.principal(&p),
                }
            })
            .collect();
        torus.forward_complex(&mut buf);
        buf
    };

    for &h in &active {
        let eta = torus.mode(h);
        let r = norm(eta);
        let ah = match &fixed {
            Some(c) => std::borrow::Cow::Borrowed(c.as_slice()),
            None => std::borrow::Cow::Owned(sample(fk(eta))),
        };
        let amax = ah.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let weight = PLCutoffs::low_cut(r) * uh[h];
        for &(t, th) in &thetas {
            if t >= cut.reach(r) {
                break;
            }
            let w = cut.bilinear(t, r);
            if w == 0.0 {
                continue;
            }
            let theta = torus.mode(th);
            let contrib = ah[th] * w * weight;
            match torus.index_of_mode([eta[0] + theta[0], eta[1] + theta[1]]) {
                Some(idx) if !torus.is_nyquist(idx) => out[idx] += contrib,
                _ => {
                    if contrib.norm() > 1e-12 * amax * umax {
                        return Err(Error::Aliasing(format!(
                            "output frequency {:?} outside the grid (n = {})",
                            [eta[0] + theta[0], eta[1] + theta[1]],
                            torus.n()
                        )));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `a u = T_a u + T_u a + R(a, u)`.
#[derive(Clone, Debug)]
pub struct BonyParts {
    pub ta_u: SpectralField,
    pub tu_a: SpectralField,
    pub remainder: SpectralField,
}

fn max_band(torus: &Torus, c: &[Complex64]) -> i64 {
    let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    (0..torus.len())
        .filter(|&h| c[h].norm() > 1e-14 * cmax)
        .map(|h| {
            let k = torus.mode(h);
            k[0].abs().max(k[1].abs())
        })
        .max()
        .unwrap_or(0)
}

pub fn bony_decompose(a: &SpectralField, u: &SpectralField) -> Result<BonyParts> {
    let torus = a.torus();
    if u.torus() != torus {
        return Err(Error::GridMismatch("Bony factors live on different grids".into()));
    }
    let reach = max_band(torus, &a.coefficients()) + max_band(torus, &u.coefficients());
    if reach >= (torus.n() / 2) as i64 {
        return Err(Error::Aliasing(format!(
            "product bandwidth {reach} not resolved on n = {}",
            torus.n()
        )));
    }
    let top = ((torus.n() as f64).log2().ceil() as i32) + 2;
    let pa: Vec<SpectralField> = (0..=top).map(|k| lp_project(a, k)).collect();
    let pu: Vec<SpectralField> = (0..=top).map(|k| lp_project(u, k)).collect();
    let low = |f: &SpectralField, k: i32| f.apply_multiplier(|xi| PLCutoffs::low_pass(k, xi[0].hypot(xi[1])));
    let mut ta_u = SpectralField::zeros(torus);
    let mut tu_a = SpectralField::zeros(torus);
    let mut remainder = SpectralField::zeros(torus);
    for k in 0..=top {
        let ku = k as usize;
        if k >= 3 {
            ta_u = &ta_u + &(&low(a, k - 3) * &pu[ku]);
            tu_a = &tu_a + &(&low(u, k - 3) * &pa[ku]);
        }
        for l in (k - 2).max(0)..=(k + 2).min(top) {
            remainder = &remainder + &(&pa[ku] * &pu[l as usize]);
        }
    }
    Ok(BonyParts { ta_u, tu_a, remainder })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paradiff::symbols::AbsXi;
    use crate::spectral::Mode;

    #[test]
    fn projections_sum_to_identity() {
        let t = Torus::new(3, 32).unwrap();
        let u = SpectralField::from_modes(&t, &[Mode::cos(1.0, [3, 0]), Mode::sin(0.5, [7, -9]), Mode::cos(2.0, [0, 0])]).unwrap();
        let mut s = SpectralField::zeros(&t);
        for k in 0..8 {
            s = &s + &lp_project(&u, k);
        }
        assert!((&s - &u).max_abs() < 1e-13);
        let c = SpectralField::constant(&t, 2.0);
        assert!((&lp_project(&c, 0) - &c).max_abs() < 1e-14);
        assert!(lp_project(&c, 1).max_abs() < 1e-14);
        let w = SpectralField::from_modes(&t, &[Mode::cos(1.0, [3, 0])]).unwrap();
        let bands: Vec<i32> = (0..6).filter(|&k| lp_project(&w, k).max_abs() > 1e-14).collect();
        assert_eq!(bands, vec![1, 2]);
    }

    #[test]
    fn multiplier_and_identity_symbols() {
        let t = Torus::new(2, 32).unwrap();
        let cut = PLCutoffs::default();
        let u = SpectralField::from_modes(&t, &[Mode::cos(1.0, [5, 0])]).unwrap();
        let jets = GridJets::flat(&t);
        let a = AbsXi { power: 1.0 };
        let out = para_apply(&ParaSymbol::Symbol { symbol: &a, jets: &jets, part: Part::Full }, &u, &cut).unwrap();
        assert!((&out - &u.scale(5.0)).max_abs() < 1e-12);
        let one = SpectralField::constant(&t, 1.0);
        let v = SpectralField::from_modes(&t, &[Mode::cos(1.0, [1, 0]), Mode::cos(1.0, [6, 0])]).unwrap();
        let out = para_apply(&ParaSymbol::Function(&one), &v, &cut).unwrap();
        let high = SpectralField::from_modes(&t, &[Mode::cos(1.0, [6, 0])]).unwrap();
        assert!((&out - &high).max_abs() < 1e-12);
    }

    #[test]
    fn bony_reconstructs_products() {
        let t = Torus::new(3, 32).unwrap();
        let a = SpectralField::from_modes(&t, &[Mode::cos(1.0, [1, 0])]).unwrap();
        let u = SpectralField::from_modes(&t, &[Mode::cos(1.0, [0, 1])]).unwrap();
        let parts = bony_decompose(&a, &u).unwrap();
        let sum = &(&parts.ta_u + &parts.tu_a) + &parts.remainder;
        assert!((&sum - &(&a * &u)).max_abs() < 1e-13);
        let big = SpectralField::from_modes(&t, &[Mode::cos(1.0, [10, 0])]).unwrap();
        assert!(matches!(bony_decompose(&big, &big), Err(Error::Aliasing(_))));
    }
}
