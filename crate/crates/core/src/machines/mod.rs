//! Concrete machine models: absorption refrigerator, ladder clock, switch,
//! dispersive qubit-mode pair and the clock-timed gate.
//!
//! Every qubit carries `H = Δ σ_z`, so its level splitting is `2Δ`. Resonance
//! conditions are always stated in level splittings.

pub mod clock;
pub mod fridge;
pub mod gate;
pub mod switch;

pub use clock::{build_clock, calibrate_tick_rate, ClockOrdering, ClockSpec};
pub use fridge::{build_fridge, FridgeSpec};
pub use gate::{
    clocked_gate_fidelity_closed_form, cnot, estimate_clocked_gate_fidelity, gate_generator,
    jittered_gate_fidelity_exact, FidelityEstimate, GateGenerator, MIN_GATE_SAMPLES,
};
pub use switch::{build_dispersive, build_switch_hamiltonian, top_rung_weight, TRUNCATION_WARN};

use crate::error::{Error, Result};

/// Default tolerance on energy-conservation residuals.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Couplings above this fraction of the smallest gap get a validity note.
pub const WEAK_COUPLING_RATIO: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub residual: f64,
    pub tolerance: f64,
    pub conserved: bool,
}

impl EnergyBalance {
    pub fn into_result(self) -> Result<()> {
        if self.conserved {
            Ok(())
        } else {
            Err(Error::Resonance {
                residual: self.residual,
                tolerance: self.tolerance,
            })
        }
    }
}

/// `|Σ splittings| ≤ RESONANCE_TOL` for signed level splittings exchanged in one process.
pub fn validate_energy_conservation(splittings: &[f64]) -> Result<EnergyBalance> {
    validate_energy_conservation_with(splittings, RESONANCE_TOL)
}

pub fn validate_energy_conservation_with(splittings: &[f64], tolerance: f64) -> Result<EnergyBalance> {
    if splittings.is_empty() {
        return Err(Error::param("splittings", "need at least one level splitting"));
    }
    if splittings.iter().any(|s| !s.is_finite()) {
        return Err(Error::param("splittings", "must be finite"));
    }
    let residual = splittings.iter().sum::<f64>().abs();
    Ok(EnergyBalance {
        residual,
        tolerance,
        conserved: residual <= tolerance,
    })
}

/// Golden-rule rate `2π |M|² μ` (ħ = 1). Units of `μ` are the caller's.
pub fn fermi_rate(matrix_element: f64, density_of_states: f64) -> Result<f64> {
    if !(density_of_states >= 0.0 && density_of_states.is_finite()) {
        return Err(Error::param("density_of_states", "must be finite and ≥ 0"));
    }
    if !matrix_element.is_finite() {
        return Err(Error::param("matrix_element", "must be finite"));
    }
    Ok(2.0 * std::f64::consts::PI * matrix_element * matrix_element * density_of_states)
}

pub(crate) fn positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite and > 0, got {x}")))
    }
}

pub(crate) fn regime_note(coupling: f64, splittings: &[f64]) -> Option<String> {
    let min_gap = splittings.iter().copied().fold(f64::INFINITY, f64::min);
    (coupling > WEAK_COUPLING_RATIO * min_gap).then(|| {
        format!(
            "coupling {coupling} exceeds {WEAK_COUPLING_RATIO} x smallest gap {min_gap}; \
             local dissipators may be inaccurate"
        )
    })
}
