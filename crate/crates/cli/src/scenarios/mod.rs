//! Scenario orchestration: each runner computes its metrics and audits and
//! returns the CSV tables it wants written.

mod clock;
mod decoherence;
mod dispersive;
mod fridge;
mod gate;
mod switch;

use std::path::{Path, PathBuf};
use std::time::Instant;

use aqm_core::dynamics::{evolve, EvolveOptions, LindbladModel, TimeSeries};
use aqm_core::operator::{CMatrix, DensityMatrix, StateAudit, StateTolerance};
use aqm_core::trajectories::{Ensemble, TrajectoryRecord};

use crate::config::{Format, IntegrationSection, Resolved, ScenarioKind};
use crate::report::{Audit, RunReport};
use crate::table::{emit_csv, Column, Table, TableError};

/// Entrywise agreement required between the null-space and long-time steady states.
pub const STEADY_AGREEMENT_TOL: f64 = 1e-6;
/// Ensemble averages must match evolve within this many standard errors.
pub const ENSEMBLE_SIGMA: f64 = 5.0;
/// Differences below this absolute bound pass whatever their Monte Carlo error.
const DETERMINISTIC_ENTRY_TOL: f64 = 1e-12;

/// Standard error used for the z-score. Every sampled entry is bounded by 1 in
/// modulus, so a mean over `n` samples cannot resolve anything finer than `1/n`;
/// an entry that no trajectory populated has a sample error of zero that says
/// nothing about a population of order `1/n`.
fn effective_std_error(se: f64, n_traj: usize) -> f64 {
    se.max(1.0 / n_traj as f64)
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{scenario}: {stage}: {source}")]
    Numerical {
        scenario: ScenarioKind,
        stage: &'static str,
        #[source]
        source: aqm_core::Error,
    },
    #[error(transparent)]
    Output(#[from] TableError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub(crate) type Outcome = Result<Vec<(String, Table)>, RunError>;

/// Wraps module errors with the scenario and stage that raised them.
pub(crate) trait Context<T> {
    fn stage(self, scenario: ScenarioKind, stage: &'static str) -> Result<T, RunError>;
}

impl<T> Context<T> for aqm_core::Result<T> {
    fn stage(self, scenario: ScenarioKind, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numerical { scenario, stage, source })
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.directory`.
    pub out_dir: Option<PathBuf>,
    /// Compute and audit without writing artifacts.
    pub audit_only: bool,
}

/// Runs a validated scenario and, unless `audit_only`, writes its CSV tables
/// and `report.json` into the output directory.
pub fn run_scenario(resolved: &Resolved, options: &RunOptions) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let config = &resolved.config;
    let mut report = RunReport::new(config, &resolved.defaults);
    let tables = match config.scenario {
        ScenarioKind::Fridge => fridge::run(config, &mut report)?,
        ScenarioKind::Clock => clock::run(config, &mut report)?,
        ScenarioKind::Switch => switch::run(config, &mut report)?,
        ScenarioKind::Dispersive => dispersive::run(config, &mut report)?,
        ScenarioKind::GateFidelity => gate::run(config, &mut report)?,
        ScenarioKind::Decoherence => decoherence::run(config, &mut report)?,
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    if options.audit_only {
        return Ok(report);
    }
    let dir = options
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    std::fs::create_dir_all(&dir).map_err(|source| RunError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    if config.output.wants(Format::Csv) {
        for (name, table) in &tables {
            emit_csv(table, &dir.join(name))?;
            report.artifacts.push(name.clone());
        }
    }
    if config.output.wants(Format::Json) {
        report.artifacts.push("report.json".into());
        write_file(&dir.join("report.json"), report.to_json().as_bytes())?;
    }
    Ok(report)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    std::fs::write(path, bytes).map_err(|source| RunError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Trace, Hermiticity and positivity audits over a set of emitted states.
pub(crate) fn audit_states<'a>(report: &mut RunReport, prefix: &str, states: impl IntoIterator<Item = &'a CMatrix>) {
    let mut trace = 0.0f64;
    let mut herm = 0.0f64;
    let mut min_eig = f64::INFINITY;
    for m in states {
        let a = StateAudit::of(m);
        trace = trace.max(a.trace_error);
        herm = herm.max(a.hermiticity);
        min_eig = min_eig.min(a.min_eigenvalue);
    }
    let tol = StateTolerance::EVOLVED;
    report.audit(Audit::at_most(format!("{prefix}.trace"), trace, tol.trace));
    report.audit(Audit::at_most(format!("{prefix}.hermiticity"), herm, tol.hermiticity));
    report.audit(Audit::at_least(format!("{prefix}.positivity"), min_eig, -tol.positivity));
}

pub(crate) fn run_evolve(
    scenario: ScenarioKind,
    model: &LindbladModel,
    rho0: &DensityMatrix,
    integ: &IntegrationSection,
    report: &mut RunReport,
) -> Result<TimeSeries, RunError> {
    let series = evolve(
        model,
        rho0,
        integ.t_final,
        integ.dt,
        &EvolveOptions {
            strict_step_check: integ.strict_step_check,
            convergence_check: integ.convergence_check,
            sample_every: integ.every(),
        },
    )
    .stage(scenario, "evolve")?;
    report.metric("evolve.step_scale", series.step_scale);
    if let Some(e) = series.convergence_error {
        report.metric("evolve.step_halving_error", e);
    }
    audit_states(report, "evolve.states", series.states.iter().map(|s| s.matrix()));
    Ok(series)
}

/// Entrywise comparison of ensemble averages with evolve at the check times.
pub(crate) fn compare_ensemble(ens: &Ensemble, series: &TimeSeries, report: &mut RunReport) -> Table {
    let mut cols: [Vec<f64>; 7] = Default::default();
    let (mut rows, mut cols_idx) = (Vec::new(), Vec::new());
    let mut worst = 0.0f64;
    for (k, &t) in ens.sample_times.iter().enumerate() {
        let idx = series
            .times
            .iter()
            .position(|&x| (x - t).abs() <= 1e-9 * t.max(1.0))
            .expect("check times validated against the emitted grid");
        let exact = series.states[idx].matrix();
        let mean = &ens.mean[k];
        let (se_re, se_im) = &ens.std_error[k];
        for j in 0..exact.ncols() {
            for i in 0..exact.nrows() {
                let d = mean[(i, j)] - exact[(i, j)];
                for (diff, se) in [(d.re.abs(), se_re[(i, j)]), (d.im.abs(), se_im[(i, j)])] {
                    let z = if diff <= DETERMINISTIC_ENTRY_TOL {
                        0.0
                    } else {
                        diff / effective_std_error(se, ens.n_traj)
                    };
                    worst = worst.max(z);
                }
                rows.push(i as u64);
                cols_idx.push(j as u64);
                let vals = [t, mean[(i, j)].re, se_re[(i, j)], exact[(i, j)].re, mean[(i, j)].im, se_im[(i, j)], exact[(i, j)].im];
                for (c, v) in cols.iter_mut().zip(vals) {
                    c.push(v);
                }
            }
        }
    }
    report.metric("ensemble.max_z", worst);
    report.audit(Audit::at_most("ensemble_vs_evolve", worst, ENSEMBLE_SIGMA));
    let [t, re, re_se, re_exact, im, im_se, im_exact] = cols;
    Table::new()
        .floats("t", t)
        .with("row", Column::Int(rows))
        .with("col", Column::Int(cols_idx))
        .floats("re_mean", re)
        .floats("re_std_error", re_se)
        .floats("re_evolve", re_exact)
        .floats("im_mean", im)
        .floats("im_std_error", im_se)
        .floats("im_evolve", im_exact)
}

/// Event log with columns `(trajectory_index, time, channel_tag)`.
pub(crate) fn event_table(records: &[TrajectoryRecord]) -> Table {
    let mut idx = Vec::new();
    let mut time = Vec::new();
    let mut tag = Vec::new();
    for (i, r) in records.iter().enumerate() {
        for e in &r.events {
            idx.push(i as u64);
            time.push(e.time);
            tag.push(e.tag.clone());
        }
    }
    Table::new()
        .with("trajectory_index", Column::Int(idx))
        .floats("time", time)
        .with("channel_tag", Column::Text(tag))
}

/// Largest entrywise difference between two matrices.
pub(crate) fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    aqm_core::operator::max_abs(&(a - b))
}
