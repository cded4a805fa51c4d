//! The interface equation: wave source and `q_w`, trace resolution, right-side assembly,
//! a frozen-coefficient stepper and its energy functionals.

mod assembly;
mod coefficients;
mod source;
mod stepper;

pub use assembly::{assemble_rhs, resolve_traces, rho_coupling, ResolvedTraces, RhsGroups};
pub use coefficients::{effective_coefficients, normal_mode, EffectiveCoefficients, NormalMode, PhaseCoefficients};
pub use source::{solve_qw, wave_source, BulkSlice, WaveSource, WaveSourceData};
pub use stepper::{
    energy_functionals, flat_surface_multiplier, gronwall_constant, measured_frequency, measured_growth_rate, step_linearized,
    write_trajectory_csv, EnergyReport, FrozenModel, StepOptions, Trajectory, TrajectoryPoint,
};

use crate::error::{invalid, Error, Result};
use crate::spectral::SpectralField;

#[derive(Clone, Debug)]
pub struct InterfaceState {
    pub psi: SpectralField,
    pub psi_t: SpectralField,
    pub t: f64,
    pub sigma: f64,
}

impl InterfaceState {
    pub fn new(psi: SpectralField, psi_t: SpectralField, t: f64, sigma: f64) -> Result<Self> {
        let s = Self { psi, psi_t, t, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.psi.torus() != self.psi_t.torus() {
            return Err(Error::GridMismatch("psi and psi_t live on different tori".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(invalid("sigma", "surface tension must be non-negative"));
        }
        let sup = self.psi.max_abs();
        if !(sup < 10.0) {
            return Err(invalid("psi", format!("interface sup {sup} must stay below 10")));
        }
        Ok(())
    }
}
