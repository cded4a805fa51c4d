use super::coefficients::{EffectiveCoefficients, PhaseCoefficients};
use super::InterfaceState;
use crate::dtn::{zero_freq_project, DtnPair};
use crate::error::{Error, Result};
use crate::paradiff::mean_curvature;
use crate::spectral::{Phase, SpectralField};

/// Interface values of the total pressure in both phases.
#[derive(Clone, Debug)]
pub struct ResolvedTraces {
    pub upper: SpectralField,
    pub lower: SpectralField,
    /// `max |P_{!=0}([q] - sigma H)|`.
    pub jump_defect: f64,
    /// Mean of `[q] - sigma H`, the zero-frequency ambiguity.
    pub jump_constant: f64,
}

fn curvature_term(psi: &SpectralField, sigma: f64) -> Result<SpectralField> {
    if sigma == 0.0 {
        Ok(SpectralField::zeros(psi.torus()))
    } else {
        Ok(mean_curvature(psi)?.scale(sigma))
    }
}

/// `q^+- = N~^{-1}(+-N^-+(sigma H) + P_{!=0}([rho] psi_tt) - [F_psi])`, normalized so that
/// `q^-` has zero mean. `f_upper`, `f_lower` must have zero mean.
pub fn resolve_traces(
    pair: &DtnPair,
    psi: &SpectralField,
    sigma: f64,
    rho_jump_psi_tt: &SpectralField,
    f_upper: &SpectralField,
    f_lower: &SpectralField,
) -> Result<ResolvedTraces> {
    let sh = curvature_term(psi, sigma)?;
    let common = &zero_freq_project(rho_jump_psi_tt) - &(f_upper - f_lower);
    // DtN images are mean-free up to solver tolerance
    let lower_sh = zero_freq_project(&pair.get(Phase::Lower).apply(&sh)?);
    let upper_sh = zero_freq_project(&pair.get(Phase::Upper).apply(&sh)?);
    let (upper, _) = pair.inverse_sum(&(&lower_sh + &common))?;
    let (lower, _) = pair.inverse_sum(&(&common - &upper_sh))?;
    let defect = &(&upper - &lower) - &sh;
    Ok(ResolvedTraces {
        jump_defect: zero_freq_project(&defect).max_abs(),
        jump_constant: defect.mean(),
        upper,
        lower,
    })
}

/// Named groups of `(rho+ + rho-) psi_tt`.
#[derive(Clone, Debug)]
pub struct RhsGroups {
    /// `(sigma / 2)(N^+ + N^-) H(psi)`.
    pub surface: SpectralField,
    /// `sum (b b - rho v v) : grad grad psi`.
    pub second_order: SpectralField,
    /// `-2 (rho+ v+ + rho- v-) . grad psi_t`.
    pub convection: SpectralField,
    /// `-(N . grad q_w^+ + N . grad q_w^-)`.
    pub qw: SpectralField,
    /// The commutator remainder, including `rho_coupling`.
    pub remainder: SpectralField,
    /// `(N^+ - N^-) N~^{-1} P_{!=0}([rho] psi_tt)`.
    pub rho_coupling: SpectralField,
    pub total: SpectralField,
}

fn check(f: &SpectralField, psi: &SpectralField, what: &str) -> Result<()> {
    if f.torus() != psi.torus() {
        return Err(Error::GridMismatch(format!("{what} lives on a different torus")));
    }
    Ok(())
}

/// `(b b - rho v v) : grad grad psi` and `-2 rho v . grad psi_t` for one phase.
fn phase_terms(p: &PhaseCoefficients, psi: &SpectralField, psi_t: &SpectralField) -> (SpectralField, SpectralField) {
    let axes = psi.torus().axes();
    let grad = psi.gradient();
    let grad_t = psi_t.gradient();
    let mut second = SpectralField::zeros(psi.torus());
    let mut conv = SpectralField::zeros(psi.torus());
    for i in 0..axes {
        for j in 0..axes {
            let c = &(&p.b[i] * &p.b[j]) - &(&p.rho * &(&p.v[i] * &p.v[j]));
            second = &second + &(&c * &grad[i].derivative(j));
        }
        conv = &conv - &(&(&p.rho * &p.v[i]) * &grad_t[i]).scale(2.0);
    }
    (second, conv)
}

/// `(N^+ - N^-) N~^{-1} P_{!=0}([rho] psi_tt)`.
pub fn rho_coupling(pair: &DtnPair, rho_jump: &SpectralField, psi_tt: &SpectralField) -> Result<SpectralField> {
    let (g, _) = pair.inverse_sum(&zero_freq_project(&(rho_jump * psi_tt)))?;
    pair.difference_apply(&g)
}

/// Right side of the interface equation for `(rho+ + rho-) psi_tt`. `psi_tt_lag` is the
/// previous iterate of `psi_tt`, used only inside the remainder.
pub fn assemble_rhs(
    pair: &DtnPair,
    state: &InterfaceState,
    coeffs: &EffectiveCoefficients,
    qw_flux: [&SpectralField; 2],
    psi_tt_lag: &SpectralField,
) -> Result<RhsGroups> {
    state.validate()?;
    let psi = &state.psi;
    for (f, what) in [(qw_flux[0], "q_w flux"), (qw_flux[1], "q_w flux"), (psi_tt_lag, "psi_tt"), (&coeffs.rho_total, "coefficients")] {
        check(f, psi, what)?;
    }
    let sh = curvature_term(psi, state.sigma)?;
    let surface = zero_freq_project(&pair.sum_apply(&sh)?).scale(0.5);

    let (sec_p, conv_p) = phase_terms(&coeffs.upper, psi, &state.psi_t);
    let (sec_m, conv_m) = phase_terms(&coeffs.lower, psi, &state.psi_t);
    let forcing_p = &(&sec_p + &conv_p) - qw_flux[0];
    let forcing_m = &(&sec_m + &conv_m) - qw_flux[1];

    let rho_jump = &coeffs.upper.rho - &coeffs.lower.rho;
    let coupling = rho_coupling(pair, &rho_jump, psi_tt_lag)?;
    let mut remainder = &coupling - &{
        let (g, _) = pair.inverse_sum(&zero_freq_project(&(&forcing_p - &forcing_m)))?;
        pair.difference_apply(&g)?
    };
    if state.sigma != 0.0 {
        let (g, _) = pair.inverse_sum(&zero_freq_project(&pair.difference_apply(&sh)?))?;
        remainder = &remainder + &pair.difference_apply(&g)?.scale(0.5);
    }

    let second_order = &sec_p + &sec_m;
    let convection = &conv_p + &conv_m;
    let qw = -&(qw_flux[0] + qw_flux[1]);
    let total = &(&(&(&surface + &second_order) + &convection) + &qw) + &remainder;
    Ok(RhsGroups { surface, second_order, convection, qw, remainder, rho_coupling: coupling, total })
}
