//! Ladder clock: a hot/cold qubit pair drives a `d`-rung ladder upward one rung
//! per exchange, and the top rung emits a tick that resets it to `|0⟩`.
//!
//! Space `[2, 2, d]` ordered (H, C, L), so the basis index is `2d·h + d·c + k`.

use num_complex::Complex64;

use super::{positive, regime_note, validate_energy_conservation_with};
use crate::dynamics::{jump_rate, steady_state, thermal_channels, JumpChannel, LindbladModel};
use crate::error::{Error, Result};
use crate::operator::{basis, embed, CMatrix, HilbertSpace, Operator, Temperature};

/// Which pairing climbs the ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClockOrdering {
    /// `Δ_H > Δ_C`; a climb moves an excitation from H to C (`2Δ_H = 2Δ_C + Δ`).
    #[default]
    Forward,
    /// `Δ_C > Δ_H`; a climb moves an excitation from C to H (`2Δ_C = 2Δ_H + Δ`).
    Reversed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClockSpec {
    pub delta_hot: f64,
    pub delta_cold: f64,
    pub rungs: usize,
    /// Rung spacing; the ladder Hamiltonian is `Σ_k kΔ |k⟩⟨k|`.
    pub spacing: f64,
    pub t_hot: Temperature,
    pub t_cold: Temperature,
    pub coupling: f64,
    pub rate: f64,
    /// `None` picks ten times [`ClockSpec::estimated_climb_rate`].
    pub tick_rate: Option<f64>,
    /// Optional uniform decay of every rung by one step, tagged `leak`.
    pub leak_rate: f64,
    pub ordering: ClockOrdering,
    pub resonance_tol: f64,
}

impl ClockSpec {
    pub fn space(&self) -> Result<HilbertSpace> {
        HilbertSpace::new(&[2, 2, self.rungs])
    }

    pub fn index(&self, h: usize, c: usize, k: usize) -> usize {
        2 * self.rungs * h + self.rungs * c + k
    }

    /// Signed `2Δ_H − 2Δ_C − Δ` (forward) or `2Δ_C − 2Δ_H − Δ` (reversed).
    pub fn resonance_residual(&self) -> f64 {
        let (give, take) = self.giver_taker();
        (2.0 * give - 2.0 * take - self.spacing).abs()
    }

    fn giver_taker(&self) -> (f64, f64) {
        match self.ordering {
            ClockOrdering::Forward => (self.delta_hot, self.delta_cold),
            ClockOrdering::Reversed => (self.delta_cold, self.delta_hot),
        }
    }

    pub fn validate(&self) -> Result<()> {
        positive("delta_hot", self.delta_hot)?;
        positive("delta_cold", self.delta_cold)?;
        positive("spacing", self.spacing)?;
        positive("rate", self.rate)?;
        if self.rungs < 2 {
            return Err(Error::param("rungs", format!("ladder needs d ≥ 2 rungs, got {}", self.rungs)));
        }
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::param("coupling", "must be finite and ≥ 0"));
        }
        if let Some(r) = self.tick_rate {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::param("tick_rate", format!("must be finite and ≥ 0, got {r}")));
            }
        }
        if !(self.leak_rate >= 0.0 && self.leak_rate.is_finite()) {
            return Err(Error::param("leak_rate", "must be finite and ≥ 0"));
        }
        match self.ordering {
            ClockOrdering::Forward if self.delta_hot <= self.delta_cold => {
                return Err(Error::GapOrdering(format!(
                    "hot qubit needs the larger gap: delta_hot = {} ≤ delta_cold = {}",
                    self.delta_hot, self.delta_cold
                )))
            }
            ClockOrdering::Reversed if self.delta_cold <= self.delta_hot => {
                return Err(Error::GapOrdering(format!(
                    "reversed ordering needs delta_cold > delta_hot, got {} ≤ {}",
                    self.delta_cold, self.delta_hot
                )))
            }
            _ => {}
        }
        let (give, take) = self.giver_taker();
        validate_energy_conservation_with(&[2.0 * give, -2.0 * take, -self.spacing], self.resonance_tol)?
            .into_result()?;
        if !(self.t_hot.value() > self.t_cold.value()) {
            return Err(Error::param(
                "t_hot",
                format!("need t_hot > t_cold, got {} ≤ {}", self.t_hot.value(), self.t_cold.value()),
            ));
        }
        self.space()?;
        Ok(())
    }

    pub fn regime_note(&self) -> Option<String> {
        regime_note(self.coupling, &[2.0 * self.delta_hot, 2.0 * self.delta_cold, self.spacing])
    }

    /// Incoherent single-rung climb rate `p_give,1 · p_take,0 · 2g²/κ`, where
    /// `κ` is the decay rate of the exchanged coherence.
    pub fn estimated_climb_rate(&self) -> f64 {
        let e_h = self.t_hot.boltzmann_factor(2.0 * self.delta_hot);
        let e_c = self.t_cold.boltzmann_factor(2.0 * self.delta_cold);
        let (e_give, e_take) = match self.ordering {
            ClockOrdering::Forward => (e_h, e_c),
            ClockOrdering::Reversed => (e_c, e_h),
        };
        let kappa = self.rate * (2.0 + e_h + e_c) / 2.0;
        let p_excited = e_give / (1.0 + e_give);
        let p_ground = 1.0 / (1.0 + e_take);
        p_excited * p_ground * 2.0 * self.coupling * self.coupling / kappa
    }

    pub fn resolved_tick_rate(&self) -> Result<f64> {
        match self.tick_rate {
            Some(r) => Ok(r),
            None => {
                let r = 10.0 * self.estimated_climb_rate();
                if r > 0.0 {
                    Ok(r)
                } else {
                    Err(Error::param("tick_rate", "climb rate estimate is zero; set the tick rate explicitly"))
                }
            }
        }
    }

    pub fn bare_hamiltonian(&self) -> Result<Operator> {
        let space = self.space()?;
        let z = Operator::single(basis::sigma_z())?;
        let ladder = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.rungs,
            (0..self.rungs).map(|k| Complex64::new(k as f64 * self.spacing, 0.0)),
        ));
        Ok(embed(&z.scaled(self.delta_hot), &space, 0)?
            + embed(&z.scaled(self.delta_cold), &space, 1)?
            + embed(&Operator::single(ladder)?, &space, 2)?)
    }

    /// `g Σ_k (|climb⟩⟨rest| ⊗ |k+1⟩⟨k| + h.c.)`.
    pub fn interaction(&self) -> Result<Operator> {
        let space = self.space()?;
        let n = space.total_dim();
        let ((h_from, c_from), (h_to, c_to)) = match self.ordering {
            ClockOrdering::Forward => ((1, 0), (0, 1)),
            ClockOrdering::Reversed => ((0, 1), (1, 0)),
        };
        let mut m = CMatrix::zeros(n, n);
        let g = Complex64::new(self.coupling, 0.0);
        for k in 0..self.rungs - 1 {
            let from = self.index(h_from, c_from, k);
            let to = self.index(h_to, c_to, k + 1);
            m[(to, from)] = g;
            m[(from, to)] = g;
        }
        Operator::new(space, m)
    }
}

/// Model with channels tagged `hot`, `cold`, `tick` and, if enabled, `leak`.
pub fn build_clock(spec: &ClockSpec) -> Result<LindbladModel> {
    spec.validate()?;
    if let Some(note) = spec.regime_note() {
        log::info!("clock: {note}");
    }
    let space = spec.space()?;
    let d = spec.rungs;
    let lower = Operator::single(basis::sigma_minus())?;
    let mut channels = Vec::new();
    channels.extend(thermal_channels(
        &embed(&lower, &space, 0)?,
        2.0 * spec.delta_hot,
        spec.t_hot,
        spec.rate,
        "hot",
    )?);
    channels.extend(thermal_channels(
        &embed(&lower, &space, 1)?,
        2.0 * spec.delta_cold,
        spec.t_cold,
        spec.rate,
        "cold",
    )?);
    let tick = Operator::single(basis::transition(d, 0, d - 1))?;
    channels.push(JumpChannel::new(embed(&tick, &space, 2)?, spec.resolved_tick_rate()?, "tick")?);
    if spec.leak_rate > 0.0 {
        let mut down = CMatrix::zeros(d, d);
        for k in 1..d {
            down[(k - 1, k)] = Complex64::new(1.0, 0.0);
        }
        channels.push(JumpChannel::new(
            embed(&Operator::single(down)?, &space, 2)?,
            spec.leak_rate,
            "leak",
        )?);
    }
    let h = spec.bare_hamiltonian()? + spec.interaction()?;
    LindbladModel::new(h, channels)
}

/// Tick rate that makes the tick stage as fast as one climb stage, so the cycle
/// is `d` equal exponential stages once climbs are one-way.
///
/// A two-rung copy of `spec` with trial rate `Γ₀` has stationary tick current
/// `J₀`; reading the cycle as climb-then-tick gives the climb rate
/// `r = 1/(1/J₀ − 1/Γ₀)`.
pub fn calibrate_tick_rate(spec: &ClockSpec) -> Result<f64> {
    let trial = spec.estimated_climb_rate();
    if !(trial > 0.0) {
        return Err(Error::param("tick_rate", "climb rate estimate is zero; cannot calibrate"));
    }
    let probe = ClockSpec {
        rungs: 2,
        tick_rate: Some(trial),
        leak_rate: 0.0,
        ..spec.clone()
    };
    let model = build_clock(&probe)?;
    let ss = steady_state(&model)?;
    let j0 = jump_rate(&model, &ss, "tick")?;
    let climb_time = 1.0 / j0 - 1.0 / trial;
    if !(climb_time > 0.0) {
        return Err(Error::NonConvergence { residual: climb_time });
    }
    Ok(1.0 / climb_time)
}
