//! Three-qubit absorption refrigerator: hot (H), cold (C) and target (T).
//!
//! The exchange `|1_H 0_C 1_T⟩ ↔ |0_H 1_C 0_T⟩` conserves bare energy when
//! `Δ_H + Δ_T = Δ_C`. Basis index is `4h + 2c + t`.

use num_complex::Complex64;

use super::{positive, regime_note, validate_energy_conservation_with, RESONANCE_TOL};
use crate::dynamics::{thermal_channels, LindbladModel};
use crate::error::{Error, Result};
use crate::operator::{basis, embed, thermal_state, DensityMatrix, HilbertSpace, Operator, Temperature};

pub const HOT: usize = 0;
pub const COLD: usize = 1;
pub const TARGET: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct FridgeSpec {
    pub delta_hot: f64,
    pub delta_cold: f64,
    pub delta_target: f64,
    pub t_hot: Temperature,
    pub t_cold: Temperature,
    /// Optional bath on the target qubit.
    pub t_target: Option<Temperature>,
    pub coupling: f64,
    pub rate: f64,
    pub resonance_tol: f64,
}

impl FridgeSpec {
    /// Parameter set used by the bundled fridge scenario.
    pub fn bundled() -> Self {
        Self {
            delta_hot: 1.0,
            delta_cold: 1.5,
            delta_target: 0.5,
            t_hot: Temperature::Finite(10.0),
            t_cold: Temperature::Finite(1.0),
            t_target: Some(Temperature::Finite(1.0)),
            coupling: 0.02,
            rate: 0.05,
            resonance_tol: RESONANCE_TOL,
        }
    }

    pub fn space() -> HilbertSpace {
        HilbertSpace::new(&[2, 2, 2]).expect("three qubits fit any cap")
    }

    /// Level splittings `(2Δ_H, 2Δ_C, 2Δ_T)`.
    pub fn splittings(&self) -> [f64; 3] {
        [2.0 * self.delta_hot, 2.0 * self.delta_cold, 2.0 * self.delta_target]
    }

    /// `|2Δ_H + 2Δ_T − 2Δ_C|`.
    pub fn resonance_residual(&self) -> f64 {
        let [h, c, t] = self.splittings();
        (h + t - c).abs()
    }

    pub fn validate(&self) -> Result<()> {
        positive("delta_hot", self.delta_hot)?;
        positive("delta_cold", self.delta_cold)?;
        positive("delta_target", self.delta_target)?;
        positive("rate", self.rate)?;
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::param("coupling", format!("must be finite and ≥ 0, got {}", self.coupling)));
        }
        if self.delta_cold <= self.delta_hot {
            return Err(Error::GapOrdering(format!(
                "cold qubit needs the larger gap: delta_cold = {} ≤ delta_hot = {}",
                self.delta_cold, self.delta_hot
            )));
        }
        let [h, c, t] = self.splittings();
        validate_energy_conservation_with(&[h, t, -c], self.resonance_tol)?.into_result()?;
        if self.t_cold == Temperature::Zero {
            return Err(Error::param("t_cold", "cold bath must have T > 0"));
        }
        if !(self.t_hot.value() > self.t_cold.value()) {
            return Err(Error::param(
                "t_hot",
                format!("need t_hot > t_cold, got {} ≤ {}", self.t_hot.value(), self.t_cold.value()),
            ));
        }
        Ok(())
    }

    pub fn regime_note(&self) -> Option<String> {
        regime_note(self.coupling, &self.splittings())
    }

    /// `Σ_i Δ_i σ_z^{(i)}`.
    pub fn bare_hamiltonian(&self) -> Operator {
        let space = Self::space();
        let mut h = Operator::zeros(&space);
        for (pos, delta) in [self.delta_hot, self.delta_cold, self.delta_target].into_iter().enumerate() {
            let z = Operator::single(basis::sigma_z()).expect("2x2").scaled(delta);
            h = h + embed(&z, &space, pos).expect("qubit slot");
        }
        h
    }

    /// `g(|101⟩⟨010| + |010⟩⟨101|)`.
    pub fn interaction(&self) -> Operator {
        let space = Self::space();
        let up = space.index_of(&[1, 0, 1]);
        let down = space.index_of(&[0, 1, 0]);
        let n = space.total_dim();
        let m = (basis::transition(n, up, down) + basis::transition(n, down, up)) * Complex64::new(self.coupling, 0.0);
        Operator::new(space, m).expect("square")
    }

    pub fn hamiltonian(&self) -> Operator {
        self.bare_hamiltonian() + self.interaction()
    }

    /// Product of thermal states; the target starts at its bath temperature, or
    /// at the cold temperature when it has no bath.
    pub fn initial_state(&self) -> Result<DensityMatrix> {
        let target_t = self.t_target.unwrap_or(self.t_cold);
        let temps = [self.t_hot, self.t_cold, target_t];
        let deltas = [self.delta_hot, self.delta_cold, self.delta_target];
        let factors = deltas
            .iter()
            .zip(temps)
            .map(|(&d, t)| thermal_state(&Operator::single(basis::sigma_z()).expect("2x2").scaled(d), t))
            .collect::<Result<Vec<_>>>()?;
        DensityMatrix::product(&factors)
    }

    /// Excited population of the target when thermal at its bath (or the cold) temperature.
    pub fn target_reference_population(&self) -> f64 {
        let t = self.t_target.unwrap_or(self.t_cold);
        let b = t.boltzmann_factor(2.0 * self.delta_target);
        b / (1.0 + b)
    }
}

/// Lindblad model with channels tagged `hot`, `cold` and (if present) `target-bath`.
pub fn build_fridge(spec: &FridgeSpec) -> Result<LindbladModel> {
    spec.validate()?;
    if let Some(note) = spec.regime_note() {
        log::info!("fridge: {note}");
    }
    let space = FridgeSpec::space();
    let lower = Operator::single(basis::sigma_minus()).expect("2x2");
    let [h, c, t] = spec.splittings();
    let mut channels = Vec::new();
    channels.extend(thermal_channels(&embed(&lower, &space, HOT)?, h, spec.t_hot, spec.rate, "hot")?);
    channels.extend(thermal_channels(&embed(&lower, &space, COLD)?, c, spec.t_cold, spec.rate, "cold")?);
    if let Some(tr) = spec.t_target {
        channels.extend(thermal_channels(
            &embed(&lower, &space, TARGET)?,
            t,
            tr,
            spec.rate,
            "target-bath",
        )?);
    }
    LindbladModel::new(spec.hamiltonian(), channels)
}
