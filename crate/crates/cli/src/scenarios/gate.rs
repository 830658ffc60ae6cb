use aqm_core::machines::{
    clocked_gate_fidelity_closed_form, cnot, estimate_clocked_gate_fidelity, jittered_gate_fidelity_exact,
};
use aqm_core::operator::{basis, CMatrix};

use super::{Context, Outcome};
use crate::config::{GateName, ScenarioConfig, ScenarioKind};
use crate::report::{Audit, RunReport};
use crate::table::Table;

const KIND: ScenarioKind = ScenarioKind::GateFidelity;
/// Monte Carlo and the exact Haar average must agree within this many standard errors.
const MC_SIGMA: f64 = 5.0;
/// Agreement window against the closed form, in standard errors.
const CLOSED_FORM_SIGMA: f64 = 3.0;

fn gate(name: GateName) -> CMatrix {
    match name {
        GateName::Cnot => cnot(),
        GateName::X => basis::sigma_x(),
    }
}

/// Label used in metric names, e.g. `16` or `inf`.
pub(crate) fn accuracy_label(n: f64) -> String {
    if n.is_infinite() {
        "inf".to_string()
    } else {
        format!("{n}")
    }
}

pub(super) fn run(config: &ScenarioConfig, report: &mut RunReport) -> Outcome {
    let s = config.gate_fidelity.as_ref().expect("validated");
    let u = gate(s.gate);
    let mut cols: [Vec<f64>; 5] = Default::default();
    for &n in &s.accuracies {
        let est = estimate_clocked_gate_fidelity(n, &u, s.n_samples, s.seed).stage(KIND, "Monte Carlo")?;
        let exact = jittered_gate_fidelity_exact(&u, n).stage(KIND, "Haar average")?;
        let closed = clocked_gate_fidelity_closed_form(n);
        let label = accuracy_label(n);
        report.estimate(format!("fidelity@{label}"), est.mean, est.std_error);
        report.metric(format!("haar_exact@{label}"), exact);
        report.metric(format!("closed_form@{label}"), closed);
        let z = if est.std_error > 0.0 { (est.mean - closed).abs() / est.std_error } else { f64::INFINITY };
        let matches = (est.mean - closed).abs() <= CLOSED_FORM_SIGMA * est.std_error || (est.mean - closed).abs() <= 1e-12;
        report.metric(format!("closed_form_z@{label}"), z);
        report.metric(format!("matches_closed_form@{label}"), matches);
        report.audit(Audit::at_most(
            format!("mc_vs_haar_exact@{label}"),
            (est.mean - exact).abs(),
            MC_SIGMA * est.std_error + 1e-12,
        ));
        for (c, v) in cols.iter_mut().zip([n, est.mean, est.std_error, exact, closed]) {
            c.push(v);
        }
    }
    let perfect = estimate_clocked_gate_fidelity(f64::INFINITY, &u, s.n_samples, s.seed).stage(KIND, "Monte Carlo")?;
    report.metric("fidelity@perfect_clock", perfect.mean);
    report.audit(Audit::at_most("perfect_clock_control", (perfect.mean - 1.0).abs(), 1e-9));
    let [acc, mean, se, exact, closed] = cols;
    let table = Table::new()
        .floats("accuracy", acc)
        .floats("mc_mean", mean)
        .floats("mc_std_error", se)
        .floats("haar_exact", exact)
        .floats("closed_form", closed);
    Ok(vec![("fidelity.csv".to_string(), table)])
}
