//! Harmonic extension on the flattened slab and the Dirichlet-to-Neumann operators.

mod krylov;
mod problem;

use serde::Serialize;

pub use krylov::{gmres, pcg, KrylovOptions, KrylovStats};
pub use problem::EllipticProblem;

use crate::error::{Error, Result};
use crate::geometry::Flattening;
use crate::paradiff::{para_apply, DtnSymbol, GridJets, PLCutoffs, ParaSymbol, Part, ScalingReport};
use crate::spectral::{BulkField, Mode, Phase, SpectralField};

/// `P_{!=0} f = f - mean(f)`.
pub fn zero_freq_project(f: &SpectralField) -> SpectralField {
    f.zero_mean()
}

/// Removes the mean and the Nyquist modes, the discrete kernel of the DtN operators.
pub fn resolved_project(f: &SpectralField) -> SpectralField {
    let torus = f.torus();
    let mut c = f.coefficients();
    for (h, ch) in c.iter_mut().enumerate() {
        if h == 0 || torus.is_nyquist(h) {
            *ch = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    SpectralField::from_coefficients(torus, &c)
}

/// Flat-interface eigenvalue `|k| tanh(H |k|)` of either phase.
pub fn flat_dtn_eigenvalue(k: f64, half_height: f64) -> f64 {
    k * (half_height * k).tanh()
}

/// Solves `Lap^phi u = 0`, `u = f` on the interface, `d3 u = 0` on the wall.
pub fn harmonic_extend(f: &SpectralField, prob: &EllipticProblem, opts: &KrylovOptions) -> Result<(BulkField, KrylovStats)> {
    let b = prob.rhs(f)?;
    let (u, stats) = gmres(|x| prob.apply(x), |r| prob.precondition(r), &b, None, opts)?;
    Ok((BulkField::from_data(prob.grid(), prob.phase(), u)?, stats))
}

/// `N_psi^+- f = -+ N . grad^phi (E f)` for one phase.
pub struct DtnOperator {
    problem: EllipticProblem,
    opts: KrylovOptions,
}

impl DtnOperator {
    pub fn new(geo: &Flattening, phase: Phase, opts: KrylovOptions) -> Result<Self> {
        opts.validate()?;
        Ok(Self { problem: EllipticProblem::new(geo, phase)?, opts })
    }

    pub fn phase(&self) -> Phase {
        self.problem.phase()
    }

    pub fn problem(&self) -> &EllipticProblem {
        &self.problem
    }

    pub fn options(&self) -> &KrylovOptions {
        &self.opts
    }

    pub fn extend(&self, f: &SpectralField) -> Result<(BulkField, KrylovStats)> {
        harmonic_extend(f, &self.problem, &self.opts)
    }

    pub fn apply_with_stats(&self, f: &SpectralField) -> Result<(SpectralField, KrylovStats)> {
        let (u, stats) = self.extend(f)?;
        // at the interface the conormal flux is N . grad^phi u
        let flux = self.problem.conormal_flux(&u, 0);
        let out = match self.phase() {
            Phase::Upper => -&flux,
            Phase::Lower => flux,
        };
        Ok((out, stats))
    }

    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        Ok(self.apply_with_stats(f)?.0)
    }
}

pub fn dtn_apply(f: &SpectralField, op: &DtnOperator) -> Result<SpectralField> {
    op.apply(f)
}

/// Both phase operators for one interface.
pub struct DtnPair {
    pub upper: DtnOperator,
    pub lower: DtnOperator,
}

impl DtnPair {
    pub fn new(geo: &Flattening, opts: KrylovOptions) -> Result<Self> {
        Ok(Self { upper: DtnOperator::new(geo, Phase::Upper, opts)?, lower: DtnOperator::new(geo, Phase::Lower, opts)? })
    }

    pub fn get(&self, phase: Phase) -> &DtnOperator {
        match phase {
            Phase::Upper => &self.upper,
            Phase::Lower => &self.lower,
        }
    }

    /// `N~ f = (N^+ + N^-) f`.
    pub fn sum_apply(&self, f: &SpectralField) -> Result<SpectralField> {
        Ok(&self.upper.apply(f)? + &self.lower.apply(f)?)
    }

    pub fn difference_apply(&self, f: &SpectralField) -> Result<SpectralField> {
        Ok(&self.upper.apply(f)? - &self.lower.apply(f)?)
    }

    /// Mean-zero solution of `N~ g = h`, by PCG with the flat multiplier `(2|k| tanh(H|k|))^{-1}`.
    pub fn inverse_sum(&self, h: &SpectralField) -> Result<(SpectralField, KrylovStats)> {
        let mean = h.mean();
        if mean.abs() > 1e-10 * h.max_abs().max(1.0) {
            return Err(Error::NotMeanZero(mean));
        }
        let torus = h.torus().clone();
        let big_h = self.upper.problem().grid().half_height();
        let rhs = resolved_project(h);
        let wrap = |v: &[f64]| SpectralField::from_values(&torus, v.to_vec()).expect("sized by torus");
        let op = |v: &[f64]| -> Result<Vec<f64>> { Ok(resolved_project(&self.sum_apply(&wrap(v))?).into_values()) };
        let precond = |v: &[f64]| {
            let f = wrap(v);
            let mut c = f.coefficients();
            for (k, ch) in c.iter_mut().enumerate() {
                let m = torus.derivative_mode(k);
                let r = m[0].hypot(m[1]);
                *ch = if r == 0.0 { num_complex::Complex64::new(0.0, 0.0) } else { *ch / (2.0 * flat_dtn_eigenvalue(r, big_h)) };
            }
            SpectralField::from_coefficients(&torus, &c).into_values()
        };
        let opts = KrylovOptions { tol: self.upper.opts.accept.min(1e-9), ..self.upper.opts };
        let (g, stats) = pcg(op, precond, rhs.values(), &opts)?;
        Ok((zero_freq_project(&wrap(&g)), stats))
    }
}

pub fn dtn_inverse(h: &SpectralField, pair: &DtnPair) -> Result<SpectralField> {
    Ok(pair.inverse_sum(h)?.0)
}

/// Probe functions `f_k` for frequency-scaling checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeFamily {
    /// `cos(k x1)`, parallel to the slope of `psi = a sin(x1)`.
    Aligned,
    /// `cos(k x2)`, across it (needs `d = 3`).
    Transverse,
}

impl ProbeFamily {
    pub fn probe(self, psi: &SpectralField, k: i64) -> Result<SpectralField> {
        let kv = match self {
            ProbeFamily::Aligned => [k, 0],
            ProbeFamily::Transverse => [0, k],
        };
        SpectralField::from_modes(psi.torus(), &[Mode::cos(1.0, kv)])
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParalinearizationReport {
    pub family: ProbeFamily,
    pub phase: Phase,
    /// `||N f_k - T_{Lambda^(1)} f_k||` against `||N f_k||`.
    pub residual: ScalingReport,
    /// `||(N^+ - N^-) f_k||` against `||f_k||`; its `residual_slope` is the order of the difference.
    pub difference: ScalingReport,
    pub max_iterations: usize,
}

pub fn paralinearization_residual(
    pair: &DtnPair,
    psi: &SpectralField,
    phase: Phase,
    ks: &[i64],
    family: ProbeFamily,
    cut: &PLCutoffs,
) -> Result<ParalinearizationReport> {
    let jets = GridJets::from_psi(psi);
    let symbol = DtnSymbol { phase };
    let (mut n_norms, mut r_norms, mut f_norms, mut d_norms) = (vec![], vec![], vec![], vec![]);
    let mut max_iterations = 0;
    for &k in ks {
        let f = family.probe(psi, k)?;
        let (nf, st) = pair.get(phase).apply_with_stats(&f)?;
        let (nf_other, st2) = pair.get(other(phase)).apply_with_stats(&f)?;
        max_iterations = max_iterations.max(st.iterations).max(st2.iterations);
        let tf = para_apply(&ParaSymbol::Symbol { symbol: &symbol, jets: &jets, part: Part::Principal }, &f, cut)?;
        n_norms.push(nf.l2_norm());
        r_norms.push((&nf - &tf).l2_norm());
        f_norms.push(f.l2_norm());
        let diff = match phase {
            Phase::Upper => &nf - &nf_other,
            Phase::Lower => &nf_other - &nf,
        };
        d_norms.push(diff.l2_norm());
    }
    Ok(ParalinearizationReport {
        family,
        phase,
        residual: ScalingReport::from_norms(ks.to_vec(), n_norms, r_norms),
        difference: ScalingReport::from_norms(ks.to_vec(), f_norms, d_norms),
        max_iterations,
    })
}

fn other(phase: Phase) -> Phase {
    match phase {
        Phase::Upper => Phase::Lower,
        Phase::Lower => Phase::Upper,
    }
}

/// Which phase assignment of `Lambda^(0)` matches the numerical operator better.
#[derive(Clone, Debug, Serialize)]
pub struct SubprincipalCheck {
    pub phase: Phase,
    pub k: i64,
    /// `||N f - T_{Lambda^(1) + Lambda^(0),phase} f||`.
    pub residual_stated: f64,
    /// Same with the other phase's zeroth-order term.
    pub residual_swapped: f64,
    /// Principal part only.
    pub residual_principal: f64,
}

pub fn subprincipal_check(
    pair: &DtnPair,
    psi: &SpectralField,
    phase: Phase,
    k: i64,
    family: ProbeFamily,
    cut: &PLCutoffs,
) -> Result<SubprincipalCheck> {
    let jets = GridJets::from_psi(psi);
    let f = family.probe(psi, k)?;
    let nf = pair.get(phase).apply(&f)?;
    let apply = |sym: &DtnSymbol, part: Part| para_apply(&ParaSymbol::Symbol { symbol: sym, jets: &jets, part }, &f, cut);
    let stated = apply(&DtnSymbol { phase }, Part::Full)?;
    let swapped = apply(&DtnSymbol { phase: other(phase) }, Part::Full)?;
    let principal = apply(&DtnSymbol { phase }, Part::Principal)?;
    Ok(SubprincipalCheck {
        phase,
        k,
        residual_stated: (&nf - &stated).l2_norm(),
        residual_swapped: (&nf - &swapped).l2_norm(),
        residual_principal: (&nf - &principal).l2_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Cutoff, FlattenOptions};
    use crate::spectral::SlabGrid;

    fn setup(n: usize, nv: usize, amp: f64) -> (Flattening, SpectralField) {
        let grid = SlabGrid::new(3, n, nv, 20.0, 3.0).unwrap();
        let psi = SpectralField::from_modes(grid.torus(), &[Mode::sin(amp, [1, 0])]).unwrap();
        let cutoff = Cutoff::build(20.0, amp).unwrap();
        (Flattening::new(&grid, &psi, &cutoff, FlattenOptions::default()).unwrap(), psi)
    }

    #[test]
    fn flat_spectrum_and_constants() {
        let (geo, psi) = setup(16, 40, 0.0);
        let pair = DtnPair::new(&geo, KrylovOptions::default()).unwrap();
        let one = SpectralField::constant(psi.torus(), 1.0);
        assert!(pair.upper.apply(&one).unwrap().max_abs() < 1e-9);
        for k in 1..5 {
            let f = SpectralField::from_modes(psi.torus(), &[Mode::cos(1.0, [k, 0])]).unwrap();
            for op in [&pair.upper, &pair.lower] {
                let nf = op.apply(&f).unwrap();
                let expect = f.scale(flat_dtn_eigenvalue(k as f64, 20.0));
                assert!((&nf - &expect).max_abs() < 1e-7, "k={k} {:?}", op.phase());
            }
        }
    }

    #[test]
    fn curved_extension_is_harmonic_and_symmetric() {
        let (geo, psi) = setup(16, 40, 0.1);
        let pair = DtnPair::new(&geo, KrylovOptions::default()).unwrap();
        assert!(pair.upper.problem().min_eigenvalue() > 0.0);
        let f = SpectralField::from_modes(psi.torus(), &[Mode::cos(1.0, [1, 2]), Mode::sin(0.5, [3, 0])]).unwrap();
        let g = SpectralField::from_modes(psi.torus(), &[Mode::cos(0.7, [1, 2]), Mode::sin(0.4, [2, 0]), Mode::cos(0.3, [4, 0])]).unwrap();
        let (u, _) = pair.lower.extend(&f).unwrap();
        assert!((&u.trace() - &f).max_abs() < 1e-12);
        for op in [&pair.upper, &pair.lower] {
            let nf = op.apply(&f).unwrap();
            let ng = op.apply(&g).unwrap();
            let (a, b) = (nf.dot(&g), f.dot(&ng));
            assert!((a - b).abs() < 1e-8 * nf.l2_norm() * g.l2_norm(), "{a} {b}");
            assert!(nf.mean().abs() < 1e-8);
        }
    }

    #[test]
    fn inverse_round_trip_and_mean_rejection() {
        let (geo, psi) = setup(16, 40, 0.1);
        let pair = DtnPair::new(&geo, KrylovOptions::default()).unwrap();
        let g0 = SpectralField::from_modes(psi.torus(), &[Mode::cos(1.0, [1, 1]), Mode::sin(0.3, [0, 2])]).unwrap();
        let h = pair.sum_apply(&g0).unwrap();
        let (g, _) = pair.inverse_sum(&zero_freq_project(&h)).unwrap();
        assert!((&g - &g0).max_abs() < 1e-7);
        let one = SpectralField::constant(psi.torus(), 1.0);
        assert!(matches!(pair.inverse_sum(&one), Err(Error::NotMeanZero(_))));
    }

    #[test]
    fn projection_is_idempotent() {
        let t = crate::spectral::Torus::new(2, 16).unwrap();
        let f = SpectralField::from_fn(&t, |x| 3.0 + x[0].cos());
        let p = zero_freq_project(&f);
        assert!((&p - &SpectralField::from_fn(&t, |x| x[0].cos())).max_abs() < 1e-14);
        assert!((&zero_freq_project(&p) - &p).max_abs() < 1e-15);
    }
}
