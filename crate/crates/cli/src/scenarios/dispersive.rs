use aqm_core::machines::{build_dispersive, top_rung_weight, TRUNCATION_WARN};
use aqm_core::operator::{thermal_state, Temperature};

use super::{audit_states, Context, Outcome};
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::report::{Audit, RunReport};
use crate::table::{Column, Table};

const KIND: ScenarioKind = ScenarioKind::Dispersive;

pub(super) fn run(config: &ScenarioConfig, report: &mut RunReport) -> Outcome {
    let s = config.dispersive.as_ref().expect("validated");
    let h = build_dispersive(s.delta, s.omega, s.chi, s.n_max).stage(KIND, "model")?;
    let space = h.space().clone();
    report.audit(Audit::at_most("hamiltonian.hermiticity", h.hermiticity_deviation(), 1e-12));
    let energy = |q: usize, n: usize| h.matrix()[(space.index_of(&[q, n]), space.index_of(&[q, n]))].re;

    // the Hamiltonian is diagonal in the product basis; compare with the closed form
    let mut spectrum_dev = 0.0f64;
    let mut off_diag = 0.0f64;
    let dim = space.total_dim();
    for i in 0..dim {
        for j in 0..dim {
            if i != j {
                off_diag = off_diag.max(h.matrix()[(i, j)].norm());
            }
        }
    }
    let t = Temperature::from_value(s.temperature).expect("validated");
    let thermal = thermal_state(&h, t).stage(KIND, "thermal state")?;
    let (mut qubit, mut photons, mut e, mut p) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for q in 0..2 {
        let z = if q == 1 { 1.0 } else { -1.0 };
        for n in 0..=s.n_max {
            let exact = z * s.delta + n as f64 * (s.omega + z * s.chi);
            spectrum_dev = spectrum_dev.max((energy(q, n) - exact).abs());
            qubit.push(q as u64);
            photons.push(n as u64);
            e.push(energy(q, n));
            p.push(thermal.population(space.index_of(&[q, n])));
        }
    }
    report.audit(Audit::at_most("hamiltonian.off_diagonal", off_diag, 0.0));
    report.audit(Audit::at_most("spectrum_closed_form", spectrum_dev, 1e-12 * (s.delta.abs() + s.omega.abs() * s.n_max as f64).max(1.0)));
    audit_states(report, "thermal_state", [thermal.matrix()]);

    report.metric("mode_frequency.qubit_ground", energy(0, 1) - energy(0, 0));
    report.metric("mode_frequency.qubit_excited", energy(1, 1) - energy(1, 0));
    report.metric("qubit_splitting.n0", energy(1, 0) - energy(0, 0));
    report.metric("qubit_splitting.n1", energy(1, 1) - energy(0, 1));
    report.metric("dispersive_shift", 0.5 * ((energy(1, 1) - energy(1, 0)) - (energy(0, 1) - energy(0, 0))));
    let w = top_rung_weight(&thermal).stage(KIND, "truncation")?;
    report.metric("truncation.top_level_weight", w);
    report.metric("truncation.ok", w <= TRUNCATION_WARN);
    if w > TRUNCATION_WARN {
        report.note(format!(
            "top Fock level holds {w:e} of the thermal state (> {TRUNCATION_WARN:e}); raise n_max"
        ));
    }
    let table = Table::new()
        .with("qubit", Column::Int(qubit))
        .with("photons", Column::Int(photons))
        .floats("energy", e)
        .floats("thermal_population", p);
    Ok(vec![("spectrum.csv".to_string(), table)])
}
