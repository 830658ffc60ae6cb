use aqm_core::nonmarkov::{first_zero, purity_minimum, purity_series, time_grid, Regime};
use aqm_core::operator::{DensityMatrix, HilbertSpace};

use super::switch::qubit_ket;
use super::{audit_states, Context, Outcome};
use crate::config::{QubitState, ScenarioConfig, ScenarioKind};
use crate::report::{Audit, RunReport};
use crate::table::Table;

const KIND: ScenarioKind = ScenarioKind::Decoherence;

pub(super) fn run(config: &ScenarioConfig, report: &mut RunReport) -> Outcome {
    let s = config.decoherence.as_ref().expect("validated");
    let bath = s.bath().expect("validated");
    let rho0 = DensityMatrix::pure(&HilbertSpace::qubit(), &qubit_ket(s.initial)).stage(KIND, "initial state")?;
    let times = time_grid(s.t_max, s.grid).stage(KIND, "grid")?;
    let points = purity_series(&rho0, &bath, &times).stage(KIND, "purity")?;
    let g: Vec<f64> = points.iter().map(|p| p.g).collect();
    let purity: Vec<f64> = points.iter().map(|p| p.purity).collect();

    let regime = bath.regime();
    report.metric(
        "regime",
        match regime {
            Regime::Markovian => "markovian",
            Regime::NonMarkovian => "non-markovian",
        },
    );
    let lp = bath.lambda_prime();
    report.metric("lambda_prime.re", lp.re);
    report.metric("lambda_prime.im", lp.im);
    match first_zero(&bath, s.t_max).stage(KIND, "first zero")? {
        Some(t) => report.metric("first_zero", t),
        None => report.metric("first_zero", serde_json::Value::Null),
    }
    let min = purity_minimum(&rho0, &bath, s.t_max).stage(KIND, "purity minimum")?;
    report.metric("purity_min", min.purity);
    report.metric("purity_min_time", min.t);
    report.metric("purity_final", *purity.last().expect("grid has ≥ 2 points"));

    let states: Vec<DensityMatrix> = times
        .iter()
        .map(|&t| aqm_core::nonmarkov::evolve_closed_form(&rho0, &bath, t))
        .collect::<aqm_core::Result<_>>()
        .stage(KIND, "closed-form states")?;
    audit_states(report, "states", states.iter().map(|s| s.matrix()));
    let max_g = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    report.audit(Audit::at_most("decoherence_bounded", max_g, 1.0 + 1e-12));
    if s.initial == QubitState::Plus {
        // equal superposition: P = 1 − G²/2 + G⁴/2
        let dev = g
            .iter()
            .zip(&purity)
            .map(|(g, p)| (1.0 - g * g / 2.0 + g.powi(4) / 2.0 - p).abs())
            .fold(0.0f64, f64::max);
        report.audit(Audit::at_most("purity_closed_form", dev, 1e-12));
    }
    let rise = g.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    report.metric("decoherence_max_increment", rise);
    if regime == Regime::Markovian {
        report.audit(Audit::at_most("markovian_monotone", rise, 1e-12));
    }
    let table = Table::new().floats("t", times).floats("G", g).floats("purity", purity);
    Ok(vec![("decoherence.csv".to_string(), table)])
}
