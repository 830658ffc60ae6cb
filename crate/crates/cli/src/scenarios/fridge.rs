use aqm_core::dynamics::{entropy_production, heat_current, steady_state};
use aqm_core::machines::fridge::{COLD, HOT, TARGET};
use aqm_core::machines::build_fridge;
use aqm_core::operator::{DensityMatrix, Temperature};
use aqm_core::trajectories::{run_ensemble, EnsembleOptions, InitialState};

use super::{audit_states, compare_ensemble, event_table, max_diff, run_evolve, Context, Outcome, STEADY_AGREEMENT_TOL};
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::report::{Audit, RunReport};
use crate::table::Table;

const KIND: ScenarioKind = ScenarioKind::Fridge;

fn excited(rho: &DensityMatrix, qubit: usize) -> f64 {
    rho.partial_trace(&[qubit]).expect("qubit index in range").population(1)
}

pub(super) fn run(config: &ScenarioConfig, report: &mut RunReport) -> Outcome {
    let section = config.fridge.as_ref().expect("validated");
    let spec = section.spec().expect("validated");
    let model = build_fridge(&spec).stage(KIND, "model")?;
    if let Some(note) = spec.regime_note() {
        report.note(note);
    }
    let comm = spec
        .interaction()
        .commutator(&spec.bare_hamiltonian())
        .stage(KIND, "model")?
        .max_abs();
    report.audit(Audit::at_most("energy_conservation.commutator", comm, 1e-10));

    let ss = steady_state(&model).stage(KIND, "steady state")?;
    audit_states(report, "steady_state", [ss.matrix()]);
    let mut baths: Vec<(&str, Temperature)> = vec![("hot", spec.t_hot), ("cold", spec.t_cold)];
    if let Some(t) = spec.t_target {
        baths.push(("target-bath", t));
    }
    let mut currents = Vec::new();
    for (tag, _) in &baths {
        let q = heat_current(&model, &ss, tag).stage(KIND, "heat currents")?;
        report.metric(format!("heat_current.{tag}"), q);
        currents.push(q);
    }
    let largest = currents.iter().fold(0.0f64, |m, q| m.max(q.abs()));
    // floor: the machine's energy-flow scale, for steady states carrying no current
    let floor = spec.rate * spec.splittings().iter().fold(0.0f64, |m, &s| m.max(s));
    let sum: f64 = currents.iter().sum();
    report.audit(Audit::at_most("first_law", sum.abs(), 1e-9 * largest.max(floor)));
    let sigma = entropy_production(&model, &ss, &baths, 1e-15).stage(KIND, "entropy production")?;
    report.metric("entropy_production", sigma);
    report.audit(Audit::at_least("second_law", sigma, -1e-9));

    let p_target = excited(&ss, TARGET);
    let p_ref = spec.target_reference_population();
    report.metric("target_excited_population", p_target);
    report.metric("target_reference_population", p_ref);
    report.metric("cooling", p_target < p_ref);
    let q_hot = currents[0];
    if spec.t_target.is_some() {
        let cop = currents[2] / q_hot;
        let ratio = spec.delta_target / spec.delta_hot;
        report.metric("cop", cop);
        report.metric("cop_gap_ratio", ratio);
        report.metric("cop_deviation", (cop - ratio).abs());
    }
    report.note("efficiency is not applicable: an absorption refrigerator produces no work");

    let mut tables = Vec::new();
    let rho0 = spec.initial_state().stage(KIND, "initial state")?;
    let series = match &config.integration {
        Some(integ) => {
            let series = run_evolve(KIND, &model, &rho0, integ, report)?;
            let diff = max_diff(series.last().matrix(), ss.matrix());
            report.metric("steady_state.evolve_difference", diff);
            report.audit(Audit::at_most("steady_state_vs_evolve", diff, STEADY_AGREEMENT_TOL));
            let pops: Vec<[f64; 3]> = series
                .states
                .iter()
                .map(|s| [excited(s, HOT), excited(s, COLD), excited(s, TARGET)])
                .collect();
            let p_t: Vec<f64> = pops.iter().map(|p| p[2]).collect();
            if spec.t_target.is_none() {
                let min = p_t.iter().copied().fold(f64::INFINITY, f64::min);
                report.metric("transient.target_initial_population", p_t[0]);
                report.metric("transient.target_min_population", min);
                report.metric("transient.cooling", min < p_t[0]);
            }
            tables.push((
                "series.csv".to_string(),
                Table::new()
                    .floats("t", series.times.clone())
                    .floats("p_hot", pops.iter().map(|p| p[0]).collect())
                    .floats("p_cold", pops.iter().map(|p| p[1]).collect())
                    .floats("p_target", p_t),
            ));
            Some(series)
        }
        None => None,
    };

    if let Some(traj) = &config.trajectories {
        let ens = run_ensemble(
            &model,
            &InitialState::from_density(&rho0),
            &EnsembleOptions {
                n_traj: traj.n_traj,
                seed: traj.seed,
                dt: traj.dt,
                t_final: traj.t_final,
                sample_times: traj.check_times.clone(),
                keep_records: traj.write_events,
            },
        )
        .stage(KIND, "trajectories")?;
        report.metric("trajectories.n_traj", traj.n_traj);
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
