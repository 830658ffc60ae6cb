//! Scenario configuration: a flat, sectioned TOML document.
//!
//! Every key is either required or has a documented default; unknown keys and
//! sections are rejected. [`parse_config`] validates the machine parameters
//! before anything numerical runs and records which defaults were filled in.

use std::fmt;
use std::str::FromStr;

use aqm_core::machines::{ClockOrdering, ClockSpec, FridgeSpec, MIN_GATE_SAMPLES, RESONANCE_TOL};
use aqm_core::nonmarkov::LorentzianBath;
use aqm_core::operator::{HilbertSpace, Temperature};
use serde::{Deserialize, Serialize};

/// Evolve emits at most about this many states when `sample_every` is unset.
pub const DEFAULT_EMITTED_STATES: usize = 1000;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse configuration: {0}")]
    Syntax(String),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("[{section}] rejected: {source}")]
    Machine {
        section: &'static str,
        #[source]
        source: aqm_core::Error,
    },
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Fridge,
    Clock,
    Switch,
    Dispersive,
    GateFidelity,
    Decoherence,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Fridge,
        ScenarioKind::Clock,
        ScenarioKind::Switch,
        ScenarioKind::Dispersive,
        ScenarioKind::GateFidelity,
        ScenarioKind::Decoherence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Fridge => "fridge",
            ScenarioKind::Clock => "clock",
            ScenarioKind::Switch => "switch",
            ScenarioKind::Dispersive => "dispersive",
            ScenarioKind::GateFidelity => "gate-fidelity",
            ScenarioKind::Decoherence => "decoherence",
        }
    }

    /// Name of the machine section the scenario reads.
    pub fn section(self) -> &'static str {
        match self {
            ScenarioKind::GateFidelity => "gate_fidelity",
            other => other.name(),
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ScenarioKind::Fridge => "three-qubit absorption refrigerator: steady state, heat currents, COP",
            ScenarioKind::Clock => "thermally driven ladder clock: tick statistics, accuracy and resolution",
            ScenarioKind::Switch => "qubit under a quantum switch selecting among branch Hamiltonians",
            ScenarioKind::Dispersive => "dispersively coupled qubit and mode: conditional shifts, truncation",
            ScenarioKind::GateFidelity => "average gate fidelity under clock timing jitter",
            ScenarioKind::Decoherence => "qubit in a Lorentzian vacuum bath: decoherence function and purity",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn default_resonance_tol() -> f64 {
    RESONANCE_TOL
}

/// Temperatures are plain numbers; `0` and `inf` select the exact limits.
fn temperature(key: &str, t: f64) -> Result<Temperature, ConfigError> {
    Temperature::from_value(t).map_err(|_| invalid(key, format!("temperature must be 0, positive or inf, got {t}")))
}

fn finite_positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(key, format!("must be finite and > 0, got {x}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FridgeSection {
    pub delta_hot: f64,
    pub delta_cold: f64,
    pub delta_target: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    /// Target bath temperature; without it the target only exchanges with the machine.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_target: Option<f64>,
    #[serde(default = "FridgeSection::default_coupling")]
    pub coupling: f64,
    #[serde(default = "FridgeSection::default_rate")]
    pub rate: f64,
    #[serde(default = "default_resonance_tol")]
    pub resonance_tol: f64,
}

impl FridgeSection {
    fn default_coupling() -> f64 {
        0.02
    }
    fn default_rate() -> f64 {
        0.05
    }

    pub fn spec(&self) -> Result<FridgeSpec, ConfigError> {
        let spec = FridgeSpec {
            delta_hot: self.delta_hot,
            delta_cold: self.delta_cold,
            delta_target: self.delta_target,
            t_hot: temperature("fridge.t_hot", self.t_hot)?,
            t_cold: temperature("fridge.t_cold", self.t_cold)?,
            t_target: self.t_target.map(|t| temperature("fridge.t_target", t)).transpose()?,
            coupling: self.coupling,
            rate: self.rate,
            resonance_tol: self.resonance_tol,
        };
        spec.validate().map_err(|source| ConfigError::Machine { section: "fridge", source })?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TickMode {
    /// Ten times the estimated climb rate.
    Tenfold,
    /// Tick stage as fast as one climb stage (one-way Erlang regime).
    Calibrate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TickRate {
    Value(f64),
    Mode(TickMode),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    Forward,
    Reversed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockSection {
    pub delta_hot: f64,
    pub delta_cold: f64,
    pub rungs: usize,
    pub spacing: f64,
    pub t_hot: f64,
    pub t_cold: f64,
    #[serde(default = "ClockSection::default_coupling")]
    pub coupling: f64,
    #[serde(default = "ClockSection::default_rate")]
    pub rate: f64,
    #[serde(default = "ClockSection::default_tick_rate")]
    pub tick_rate: TickRate,
    #[serde(default)]
    pub leak_rate: f64,
    #[serde(default = "ClockSection::default_ordering")]
    pub ordering: Ordering,
    #[serde(default = "default_resonance_tol")]
    pub resonance_tol: f64,
}

impl ClockSection {
    fn default_coupling() -> f64 {
        0.05
    }
    fn default_rate() -> f64 {
        0.1
    }
    fn default_tick_rate() -> TickRate {
        TickRate::Mode(TickMode::Tenfold)
    }
    fn default_ordering() -> Ordering {
        Ordering::Forward
    }

    /// Spec with the tick rate left unresolved for the `tenfold` and
    /// `calibrate` modes; the scenario resolves it.
    pub fn spec(&self) -> Result<ClockSpec, ConfigError> {
        let spec = ClockSpec {
            delta_hot: self.delta_hot,
            delta_cold: self.delta_cold,
            rungs: self.rungs,
            spacing: self.spacing,
            t_hot: temperature("clock.t_hot", self.t_hot)?,
            t_cold: temperature("clock.t_cold", self.t_cold)?,
            coupling: self.coupling,
            rate: self.rate,
            tick_rate: match self.tick_rate {
                TickRate::Value(r) => Some(r),
                TickRate::Mode(_) => None,
            },
            leak_rate: self.leak_rate,
            ordering: match self.ordering {
                Ordering::Forward => ClockOrdering::Forward,
                Ordering::Reversed => ClockOrdering::Reversed,
            },
            resonance_tol: self.resonance_tol,
        };
        spec.validate().map_err(|source| ConfigError::Machine { section: "clock", source })?;
        if spec.tick_rate.is_none() && !(spec.estimated_climb_rate() > 0.0) {
            return Err(invalid(
                "clock.tick_rate",
                "climb rate estimate is zero (check coupling and temperatures); give an explicit rate",
            ));
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QubitState {
    Ground,
    Excited,
    Plus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchSection {
    /// Branch `j` is `x_j σ_x + y_j σ_y + z_j σ_z` on the qubit, selected by switch state `j`.
    pub branch_x: Vec<f64>,
    pub branch_y: Vec<f64>,
    pub branch_z: Vec<f64>,
    pub t_final: f64,
    /// Switch dimension; defaults to the number of branches.
    #[serde(default)]
    pub switch_dim: Option<usize>,
    /// Nearest-neighbour hopping between switch states.
    #[serde(default)]
    pub hop: f64,
    /// `σ_z` field on the qubit, present in every branch.
    #[serde(default)]
    pub rest_field: f64,
    /// Real switch amplitudes (normalized); defaults to the uniform superposition.
    #[serde(default)]
    pub switch_state: Option<Vec<f64>>,
    #[serde(default = "SwitchSection::default_qubit_state")]
    pub qubit_state: QubitState,
    #[serde(default = "SwitchSection::default_samples")]
    pub samples: usize,
}

impl SwitchSection {
    fn default_qubit_state() -> QubitState {
        QubitState::Ground
    }
    fn default_samples() -> usize {
        200
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let n = self.branch_x.len();
        if n == 0 {
            return Err(invalid("switch.branch_x", "need at least one branch"));
        }
        if self.branch_y.len() != n || self.branch_z.len() != n {
            return Err(invalid(
                "switch.branch_y",
                format!(
                    "branch_x, branch_y and branch_z must have equal lengths, got {}, {}, {}",
                    n,
                    self.branch_y.len(),
                    self.branch_z.len()
                ),
            ));
        }
        let all = self.branch_x.iter().chain(&self.branch_y).chain(&self.branch_z);
        if all.chain([&self.hop, &self.rest_field]).any(|x| !x.is_finite()) {
            return Err(invalid("switch", "branch coefficients, hop and rest_field must be finite"));
        }
        let dim = self.switch_dim.unwrap_or(n);
        if dim < n.max(2) {
            return Err(invalid(
                "switch.switch_dim",
                format!("need at least max(2, branches) = {} switch states, got {dim}", n.max(2)),
            ));
        }
        HilbertSpace::new(&[2, dim]).map_err(|source| ConfigError::Machine { section: "switch", source })?;
        if let Some(w) = &self.switch_state {
            if w.len() != dim {
                return Err(invalid("switch.switch_state", format!("need {dim} amplitudes, got {}", w.len())));
            }
            let norm: f64 = w.iter().map(|x| x * x).sum();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(invalid("switch.switch_state", "amplitudes must be finite and not all zero"));
            }
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(invalid("switch.t_final", format!("must be finite and ≥ 0, got {}", self.t_final)));
        }
        if self.samples == 0 {
            return Err(invalid("switch.samples", "need at least one interval"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersiveSection {
    pub delta: f64,
    pub omega: f64,
    pub chi: f64,
    pub n_max: usize,
    /// Temperature of the reference thermal state used for the truncation check.
    #[serde(default)]
    pub temperature: f64,
}

impl DispersiveSection {
    fn validate(&self) -> Result<(), ConfigError> {
        aqm_core::machines::build_dispersive(self.delta, self.omega, self.chi, self.n_max)
            .map_err(|source| ConfigError::Machine { section: "dispersive", source })?;
        temperature("dispersive.temperature", self.temperature)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateName {
    Cnot,
    X,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateFidelitySection {
    /// Clock accuracies `N`; `inf` is allowed.
    pub accuracies: Vec<f64>,
    #[serde(default = "GateFidelitySection::default_gate")]
    pub gate: GateName,
    #[serde(default = "GateFidelitySection::default_samples")]
    pub n_samples: usize,
    #[serde(default)]
    pub seed: u64,
}

impl GateFidelitySection {
    fn default_gate() -> GateName {
        GateName::Cnot
    }
    fn default_samples() -> usize {
        100_000
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.accuracies.is_empty() {
            return Err(invalid("gate_fidelity.accuracies", "need at least one accuracy"));
        }
        if let Some(bad) = self.accuracies.iter().find(|&&n| !(n > 0.0)) {
            return Err(invalid("gate_fidelity.accuracies", format!("accuracies must be > 0, got {bad}")));
        }
        if self.n_samples < MIN_GATE_SAMPLES {
            return Err(invalid(
                "gate_fidelity.n_samples",
                format!("need at least {MIN_GATE_SAMPLES}, got {}", self.n_samples),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoherenceSection {
    pub lambda: f64,
    pub gamma0: f64,
    pub t_max: f64,
    #[serde(default = "DecoherenceSection::default_grid")]
    pub grid: usize,
    #[serde(default = "DecoherenceSection::default_initial")]
    pub initial: QubitState,
}

impl DecoherenceSection {
    fn default_grid() -> usize {
        aqm_core::nonmarkov::FIGURE_POINTS
    }
    fn default_initial() -> QubitState {
        QubitState::Plus
    }

    pub fn bath(&self) -> Result<LorentzianBath, ConfigError> {
        LorentzianBath::new(self.lambda, self.gamma0).map_err(|source| ConfigError::Machine {
            section: "decoherence",
            source,
        })
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.bath()?;
        finite_positive("decoherence.t_max", self.t_max)?;
        if self.grid < 2 {
            return Err(invalid("decoherence.grid", format!("need at least 2 points, got {}", self.grid)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationSection {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub strict_step_check: bool,
    #[serde(default = "yes")]
    pub convergence_check: bool,
    /// Emit every n-th step; defaults to about [`DEFAULT_EMITTED_STATES`] states.
    #[serde(default)]
    pub sample_every: Option<usize>,
}

fn yes() -> bool {
    true
}

/// Number of steps, requiring `t_final` to be an integer multiple of `dt`.
pub fn step_count(key: &str, t_final: f64, dt: f64) -> Result<usize, ConfigError> {
    finite_positive(&format!("{key}.dt"), dt)?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(invalid(format!("{key}.t_final"), format!("must be finite and ≥ 0, got {t_final}")));
    }
    let n = (t_final / dt).round();
    if (n * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(invalid(
            format!("{key}.t_final"),
            format!("{t_final} is not an integer multiple of dt = {dt}"),
        ));
    }
    Ok(n as usize)
}

impl IntegrationSection {
    pub fn steps(&self) -> usize {
        step_count("integration", self.t_final, self.dt).expect("validated at parse time")
    }

    pub fn every(&self) -> usize {
        self.sample_every.expect("resolved at parse time")
    }

    /// Times evolve will emit.
    pub fn emitted_times(&self) -> Vec<f64> {
        let steps = self.steps();
        let every = self.every();
        let mut out = vec![0.0];
        let mut k = 0;
        while k < steps {
            k = (k + every).min(steps);
            out.push(k as f64 * self.dt);
        }
        out
    }

    fn resolve(&mut self) -> Result<(), ConfigError> {
        let steps = step_count("integration", self.t_final, self.dt)?;
        match self.sample_every {
            Some(0) => return Err(invalid("integration.sample_every", "must be ≥ 1")),
            Some(_) => {}
            None => self.sample_every = Some(steps.div_ceil(DEFAULT_EMITTED_STATES).max(1)),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    pub n_traj: usize,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub seed: u64,
    /// Ticks before this time are dropped; the clock defaults to five expected periods.
    #[serde(default)]
    pub transient_cut: Option<f64>,
    /// Times at which the ensemble average is compared with evolve; each must
    /// be an emitted evolve time.
    #[serde(default)]
    pub check_times: Vec<f64>,
    #[serde(default = "yes")]
    pub write_events: bool,
}

impl TrajectorySection {
    fn validate(&self, integration: Option<&IntegrationSection>) -> Result<(), ConfigError> {
        if self.n_traj == 0 {
            return Err(invalid("trajectories.n_traj", "must be ≥ 1"));
        }
        finite_positive("trajectories.dt", self.dt)?;
        finite_positive("trajectories.t_final", self.t_final)?;
        if let Some(cut) = self.transient_cut {
            if !(cut >= 0.0 && cut < self.t_final) {
                return Err(invalid(
                    "trajectories.transient_cut",
                    format!("must lie in [0, t_final = {}), got {cut}", self.t_final),
                ));
            }
        }
        if self.check_times.is_empty() {
            return Ok(());
        }
        let Some(integ) = integration else {
            return Err(invalid("trajectories.check_times", "comparison needs an [integration] section"));
        };
        let emitted = integ.emitted_times();
        for &t in &self.check_times {
            if !(t > 0.0 && t <= self.t_final) {
                return Err(invalid(
                    "trajectories.check_times",
                    format!("{t} is outside (0, t_final = {}]", self.t_final),
                ));
            }
            if !emitted.iter().any(|&e| (e - t).abs() <= 1e-9 * t.max(1.0)) {
                return Err(invalid(
                    "trajectories.check_times",
                    format!(
                        "{t} is not an emitted evolve time (multiples of dt × sample_every = {})",
                        integ.dt * integ.every() as f64
                    ),
                ));
            }
        }
        if self.check_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("trajectories.check_times", "must be strictly increasing"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "OutputSection::default_directory")]
    pub directory: String,
    #[serde(default = "OutputSection::default_formats")]
    pub formats: Vec<Format>,
}

impl OutputSection {
    fn default_directory() -> String {
        "aqm-out".to_string()
    }
    fn default_formats() -> Vec<Format> {
        vec![Format::Csv, Format::Json]
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: Self::default_directory(),
            formats: Self::default_formats(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fridge: Option<FridgeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<SwitchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispersive: Option<DispersiveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_fidelity: Option<GateFidelitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decoherence: Option<DecoherenceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integration: Option<IntegrationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectorySection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// A validated config plus the dotted keys whose values came from defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub config: ScenarioConfig,
    pub defaults: Vec<String>,
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config types serialize to TOML")
    }

    /// Replaces every seed in the document.
    pub fn override_seed(&mut self, seed: u64) {
        if let Some(t) = &mut self.trajectories {
            t.seed = seed;
        }
        if let Some(g) = &mut self.gate_fidelity {
            g.seed = seed;
        }
    }

    fn present_sections(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let flags = [
            ("fridge", self.fridge.is_some()),
            ("clock", self.clock.is_some()),
            ("switch", self.switch.is_some()),
            ("dispersive", self.dispersive.is_some()),
            ("gate_fidelity", self.gate_fidelity.is_some()),
            ("decoherence", self.decoherence.is_some()),
        ];
        for (name, present) in flags {
            if present {
                out.push(name);
            }
        }
        out
    }

    /// Fills computed defaults and checks every parameter against the
    /// machine's invariants. Purely arithmetic: no model is simulated.
    pub fn validate(&mut self) -> Result<(), ConfigError> {
        let wanted = self.scenario.section();
        for s in self.present_sections() {
            if s != wanted {
                return Err(invalid(s, format!("section is not used by scenario `{}`", self.scenario)));
            }
        }
        let missing = || invalid(wanted, format!("scenario `{}` needs a [{wanted}] section", self.scenario));
        if let Some(integ) = &mut self.integration {
            integ.resolve()?;
        }
        match self.scenario {
            ScenarioKind::Fridge => {
                self.fridge.as_ref().ok_or_else(missing)?.spec()?;
            }
            ScenarioKind::Clock => {
                self.clock.as_ref().ok_or_else(missing)?.spec()?;
            }
            ScenarioKind::Switch => self.switch.as_ref().ok_or_else(missing)?.validate()?,
            ScenarioKind::Dispersive => self.dispersive.as_ref().ok_or_else(missing)?.validate()?,
            ScenarioKind::GateFidelity => self.gate_fidelity.as_ref().ok_or_else(missing)?.validate()?,
            ScenarioKind::Decoherence => self.decoherence.as_ref().ok_or_else(missing)?.validate()?,
        }
        let dynamical = matches!(self.scenario, ScenarioKind::Fridge | ScenarioKind::Clock);
        if !dynamical {
            if self.integration.is_some() {
                return Err(invalid("integration", format!("not used by scenario `{}`", self.scenario)));
            }
            if self.trajectories.is_some() {
                return Err(invalid("trajectories", format!("not used by scenario `{}`", self.scenario)));
            }
        }
        if let Some(t) = &self.trajectories {
            t.validate(self.integration.as_ref())?;
        }
        if self.output.formats.is_empty() {
            return Err(invalid("output.formats", "list at least one of \"csv\", \"json\""));
        }
        Ok(())
    }
}

/// Dotted paths present in `full` but absent from `raw`.
fn filled_keys(raw: &toml::Table, full: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in full {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (raw.get(k), v) {
            (None, toml::Value::Table(f)) => filled_keys(&toml::Table::new(), f, &path, out),
            (None, _) => out.push(path),
            (Some(toml::Value::Table(r)), toml::Value::Table(f)) => filled_keys(r, f, &path, out),
            _ => {}
        }
    }
}

pub fn parse_config(text: &str) -> Result<Resolved, ConfigError> {
    let raw: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut config: ScenarioConfig =
        toml::from_str(text).map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    config.validate()?;
    let full: toml::Table = config.to_toml().parse().expect("serialized config reparses");
    let mut defaults = Vec::new();
    filled_keys(&raw, &full, "", &mut defaults);
    Ok(Resolved { config, defaults })
}

impl FromStr for ScenarioConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_config(s).map(|r| r.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRIDGE: &str = r#"
scenario = "fridge"

[fridge]
delta_hot = 1.0
delta_cold = 1.5
delta_target = 0.5
t_hot = 10.0
t_cold = 1.0
t_target = 1.0
"#;

    #[test]
    fn minimal_decoherence_gets_default_grid() {
        let doc = "scenario = \"decoherence\"\n[decoherence]\nlambda = 1\ngamma0 = 25\nt_max = 10\n";
        let r = parse_config(doc).unwrap();
        assert_eq!(r.config.decoherence.as_ref().unwrap().grid, 2000);
        assert!(r.defaults.contains(&"decoherence.grid".to_string()));
        assert!(r.defaults.contains(&"output.directory".to_string()));
        assert!(!r.defaults.contains(&"decoherence.lambda".to_string()));
    }

    #[test]
    fn resonance_violation_names_residual() {
        let doc = FRIDGE.replace("delta_cold = 1.5", "delta_cold = 1.6");
        let err = parse_config(&doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("resonance"), "{msg}");
        assert!(msg.contains("residual 2"), "{msg}");
        match err {
            ConfigError::Machine {
                source: aqm_core::Error::Resonance { residual, .. },
                ..
            } => assert!((residual - 0.2).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_and_missing_keys_rejected() {
        let err = parse_config(&format!("{FRIDGE}couplng = 0.1\n")).unwrap_err();
        assert!(err.to_string().contains("couplng"), "{err}");
        let err = parse_config(&FRIDGE.replace("t_cold = 1.0\n", "")).unwrap_err();
        assert!(err.to_string().contains("t_cold"), "{err}");
        let err = parse_config(&FRIDGE.replace("t_hot = 10.0", "t_hot = \"hot\"")).unwrap_err();
        assert!(matches!(err, ConfigError::Syntax(_)));
        let err = parse_config(&format!("{FRIDGE}[mystery]\nx = 1\n")).unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }

    #[test]
    fn sections_must_match_scenario() {
        let doc = FRIDGE.replace("scenario = \"fridge\"", "scenario = \"clock\"");
        assert!(parse_config(&doc).is_err());
        let doc = format!("{FRIDGE}[decoherence]\nlambda = 1.0\ngamma0 = 1.0\nt_max = 1.0\n");
        assert!(parse_config(&doc).is_err());
    }

    #[test]
    fn round_trip_is_exact() {
        let doc = format!(
            "{FRIDGE}coupling = 0.1234567890123\n[integration]\ndt = 0.01\nt_final = 100.0\n\
             [trajectories]\nn_traj = 100\ndt = 0.01\nt_final = 50.0\ncheck_times = [10.0, 50.0]\n"
        );
        let a = parse_config(&doc).unwrap();
        let b = parse_config(&a.config.to_toml()).unwrap();
        assert_eq!(a.config, b.config);
        assert!(b.defaults.is_empty(), "{:?}", b.defaults);
        assert_eq!(a.config.integration.as_ref().unwrap().sample_every, Some(10));
    }

    #[test]
    fn check_times_must_be_emitted() {
        let doc = format!(
            "{FRIDGE}[integration]\ndt = 0.01\nt_final = 100.0\nsample_every = 100\n\
             [trajectories]\nn_traj = 10\ndt = 0.01\nt_final = 50.0\ncheck_times = [2.5]\n"
        );
        let err = parse_config(&doc).unwrap_err();
        assert!(err.to_string().contains("check_times"), "{err}");
        let doc = doc.replace("check_times = [2.5]", "check_times = [2.0]");
        assert!(parse_config(&doc).is_ok());
    }

    #[test]
    fn temperatures_and_tick_modes() {
        let doc = r#"
scenario = "clock"
[clock]
delta_hot = 1500.0
delta_cold = 1000.0
rungs = 4
spacing = 1000.0
t_hot = 766.9
t_cold = 0.0
coupling = 50.0
rate = 50.0
tick_rate = "calibrate"
"#;
        let r = parse_config(doc).unwrap();
        let c = r.config.clock.as_ref().unwrap();
        assert_eq!(c.tick_rate, TickRate::Mode(TickMode::Calibrate));
        assert_eq!(c.spec().unwrap().t_cold, Temperature::Zero);
        let r2 = parse_config(&doc.replace("\"calibrate\"", "2.5")).unwrap();
        assert_eq!(r2.config.clock.unwrap().tick_rate, TickRate::Value(2.5));
        assert!(parse_config(&doc.replace("\"calibrate\"", "\"sometimes\"")).is_err());
        assert!(parse_config(&doc.replace("t_cold = 0.0", "t_cold = -1.0")).is_err());
        let inf = parse_config(&doc.replace("t_hot = 766.9", "t_hot = inf")).unwrap();
        assert_eq!(inf.config.clock.unwrap().spec().unwrap().t_hot, Temperature::Infinite);
        // resonance: 2Δ_H − 2Δ_C must equal the spacing
        let err = parse_config(&doc.replace("spacing = 1000.0", "spacing = 990.0")).unwrap_err();
        assert!(err.to_string().contains("residual 1e1"), "{err}");
    }

    #[test]
    fn seed_override_reaches_every_seed() {
        let doc = "scenario = \"gate-fidelity\"\n[gate_fidelity]\naccuracies = [16.0]\nseed = 3\n";
        let mut c = parse_config(doc).unwrap().config;
        c.override_seed(99);
        assert_eq!(c.gate_fidelity.unwrap().seed, 99);
    }
}
