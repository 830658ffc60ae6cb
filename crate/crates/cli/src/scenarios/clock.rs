use aqm_core::dynamics::{entropy_production, heat_current, jump_rate, steady_state};
use aqm_core::machines::{build_clock, calibrate_tick_rate, ClockSpec};
use aqm_core::operator::{basis, thermal_state, DensityMatrix, Operator, Temperature};
use aqm_core::trajectories::{run_ensemble, tick_statistics, EnsembleOptions, InitialState, TickStatistics};

use super::{audit_states, compare_ensemble, event_table, max_diff, run_evolve, Context, Outcome, STEADY_AGREEMENT_TOL};
use crate::config::{ScenarioConfig, ScenarioKind, TickMode, TickRate};
use crate::report::{Audit, RunReport};
use crate::table::Table;

const KIND: ScenarioKind = ScenarioKind::Clock;

/// Largest Hilbert dimension for which the dense null-space solve is attempted.
pub const STEADY_STATE_MAX_DIM: usize = 16;
/// Default transient cut, in expected tick periods.
const TRANSIENT_PERIODS: f64 = 5.0;
/// Post-cut windows shorter than this many mean intervals censor long intervals.
const CENSORING_PERIODS: f64 = 20.0;

/// Hot and cold qubits thermal at their baths, ladder on its bottom rung.
fn initial_state(spec: &ClockSpec) -> aqm_core::Result<DensityMatrix> {
    let z = Operator::single(basis::sigma_z())?;
    let hot = thermal_state(&z.scaled(spec.delta_hot), spec.t_hot)?;
    let cold = thermal_state(&z.scaled(spec.delta_cold), spec.t_cold)?;
    let ladder = DensityMatrix::basis_state(&aqm_core::operator::HilbertSpace::new(&[spec.rungs])?, 0)?;
    DensityMatrix::product(&[hot, cold, ladder])
}

pub(super) fn run(config: &ScenarioConfig, report: &mut RunReport) -> Outcome {
    let section = config.clock.as_ref().expect("validated");
    let mut spec = section.spec().expect("validated");
    let climb = spec.estimated_climb_rate();
    report.metric("climb_rate_estimate", climb);
    // expected period: d equal stages when calibrated, else d − 1 climbs and a tick
    let period = match section.tick_rate {
        TickRate::Mode(TickMode::Calibrate) => {
            let r = calibrate_tick_rate(&spec).stage(KIND, "tick-rate calibration")?;
            spec.tick_rate = Some(r);
            report.derived("clock.tick_rate", r);
            spec.rungs as f64 / r
        }
        TickRate::Mode(TickMode::Tenfold) => {
            let r = spec.resolved_tick_rate().stage(KIND, "model")?;
            spec.tick_rate = Some(r);
            report.derived("clock.tick_rate", r);
            (spec.rungs - 1) as f64 / climb + 1.0 / r
        }
        TickRate::Value(r) => (spec.rungs - 1) as f64 / climb + 1.0 / r,
    };
    let tick_rate = spec.tick_rate.expect("resolved above");
    report.metric("tick_rate", tick_rate);
    report.metric("expected_period", period);
    if let Some(note) = spec.regime_note() {
        report.note(note);
    }
    let model = build_clock(&spec).stage(KIND, "model")?;
    let comm = spec
        .interaction()
        .stage(KIND, "model")?
        .commutator(&spec.bare_hamiltonian().stage(KIND, "model")?)
        .stage(KIND, "model")?
        .max_abs();
    report.audit(Audit::at_most("energy_conservation.commutator", comm, 1e-10));

    let dim = model.space().total_dim();
    let ss = if dim <= STEADY_STATE_MAX_DIM {
        let ss = steady_state(&model).stage(KIND, "steady state")?;
        audit_states(report, "steady_state", [ss.matrix()]);
        let mut baths: Vec<(&str, Temperature)> =
            vec![("hot", spec.t_hot), ("cold", spec.t_cold), ("tick", Temperature::Zero)];
        if spec.leak_rate > 0.0 {
            baths.push(("leak", Temperature::Zero));
        }
        let mut currents = Vec::new();
        for (tag, _) in &baths {
            let q = heat_current(&model, &ss, tag).stage(KIND, "heat currents")?;
            report.metric(format!("heat_current.{tag}"), q);
            currents.push(q);
        }
        let largest = currents.iter().fold(0.0f64, |m, q| m.max(q.abs()));
        let floor = spec.rate * 2.0 * spec.delta_hot.max(spec.delta_cold);
        let sum: f64 = currents.iter().sum();
        report.audit(Audit::at_most("first_law", sum.abs(), 1e-9 * largest.max(floor)));
        let sigma = entropy_production(&model, &ss, &baths, 1e-15).stage(KIND, "entropy production")?;
        report.metric("entropy_production", sigma);
        report.audit(Audit::at_least("second_law", sigma, -1e-9));
        let j = jump_rate(&model, &ss, "tick").stage(KIND, "tick current")?;
        let top = ss.partial_trace(&[2]).stage(KIND, "tick current")?.population(spec.rungs - 1);
        report.metric("steady_state.tick_current", j);
        report.metric("steady_state.top_rung_population", top);
        report.audit(Audit::at_most("tick_current_identity", (j - tick_rate * top).abs(), 1e-12 * j.abs().max(1e-300)));
        Some(ss)
    } else {
        report.note(format!(
            "steady state skipped: dimension {dim} exceeds {STEADY_STATE_MAX_DIM} for the dense solver"
        ));
        None
    };

    let mut tables = Vec::new();
    let rho0 = initial_state(&spec).stage(KIND, "initial state")?;
    let series = match &config.integration {
        Some(integ) => {
            let series = run_evolve(KIND, &model, &rho0, integ, report)?;
            if let Some(ss) = &ss {
                let diff = max_diff(series.last().matrix(), ss.matrix());
                report.metric("steady_state.evolve_difference", diff);
                report.audit(Audit::at_most("steady_state_vs_evolve", diff, STEADY_AGREEMENT_TOL));
            }
            let ladders: Vec<DensityMatrix> = series
                .states
                .iter()
                .map(|s| s.partial_trace(&[2]))
                .collect::<aqm_core::Result<_>>()
                .stage(KIND, "evolve")?;
            let mut table = Table::new().floats("t", series.times.clone());
            for k in 0..spec.rungs {
                table = table.floats(format!("p_{k}"), ladders.iter().map(|l| l.population(k)).collect());
            }
            tables.push(("series.csv".to_string(), table));
            Some(series)
        }
        None => None,
    };

    if let Some(traj) = &config.trajectories {
        let cut = match traj.transient_cut {
            Some(c) => c,
            None => {
                let c = (TRANSIENT_PERIODS * period).min(0.5 * traj.t_final);
                report.derived("trajectories.transient_cut", c);
                c
            }
        };
        let ens = run_ensemble(
            &model,
            &InitialState::from_density(&rho0),
            &EnsembleOptions {
                n_traj: traj.n_traj,
                seed: traj.seed,
                dt: traj.dt,
                t_final: traj.t_final,
                sample_times: traj.check_times.clone(),
                keep_records: true,
            },
        )
        .stage(KIND, "trajectories")?;
        report.metric("trajectories.n_traj", traj.n_traj);
        match tick_statistics(&ens.records, "tick", cut) {
            Ok(stats) => report_ticks(report, &stats, traj.t_final - cut),
            Err(aqm_core::Error::InsufficientEvents(why)) => report.note(format!("tick statistics skipped: {why}")),
            Err(e) => return Err(e).stage(KIND, "tick statistics"),
        }
        if let Some(series) = &series {
            if !ens.sample_times.is_empty() {
                tables.push(("ensemble.csv".to_string(), compare_ensemble(&ens, series, report)));
            }
        }
        if traj.write_events {
            tables.push(("events.csv".to_string(), event_table(&ens.records)));
        }
    }
    Ok(tables)
}

fn report_ticks(report: &mut RunReport, stats: &TickStatistics, window: f64) {
    report.metric("ticks.count", stats.n_ticks);
    report.metric("ticks.intervals", stats.n_intervals);
    report.metric("ticks.mean_interval", stats.t_bar);
    report.metric("ticks.interval_std", stats.delta_t);
    report.metric("resolution", stats.resolution);
    if window < CENSORING_PERIODS * stats.t_bar {
        report.note(format!(
            "tick window {window} spans fewer than {CENSORING_PERIODS} mean intervals; \
             long intervals are under-sampled and accuracy is biased upward"
        ));
    }
    match (stats.accuracy, stats.accuracy_std_error) {
        (Some(n), Some(se)) => report.estimate("accuracy_N", n, se),
        (Some(n), None) => report.metric("accuracy_N", n),
        _ => report.note("accuracy undefined: tick intervals have zero spread"),
    }
    report.audit(Audit::at_most(
        "resolution_is_inverse_mean_interval",
        (stats.resolution * stats.t_bar - 1.0).abs(),
        1e-12,
    ));
}
