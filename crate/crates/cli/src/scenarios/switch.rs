use aqm_core::machines::build_switch_hamiltonian;
use aqm_core::operator::{basis, purity, CMatrix, CVector, DensityMatrix, HilbertSpace, Operator};
use num_complex::Complex64;

use super::{audit_states, Context, Outcome};
use crate::config::{QubitState, ScenarioConfig, ScenarioKind, SwitchSection};
use crate::report::{Audit, RunReport};
use crate::table::Table;

const KIND: ScenarioKind = ScenarioKind::Switch;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub(crate) fn qubit_ket(state: QubitState) -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match state {
        QubitState::Ground => basis::ket(2, 0),
        QubitState::Excited => basis::ket(2, 1),
        QubitState::Plus => CVector::from_vec(vec![c(s), c(s)]),
    }
}

fn branch(section: &SwitchSection, j: usize) -> aqm_core::Result<Operator> {
    Operator::single(
        basis::sigma_x() * c(section.branch_x[j])
            + basis::sigma_y() * c(section.branch_y[j])
            + basis::sigma_z() * c(section.branch_z[j]),
    )
}

fn bloch(rho: &CMatrix) -> [f64; 3] {
    [2.0 * rho[(0, 1)].re, -2.0 * rho[(0, 1)].im, (rho[(1, 1)] - rho[(0, 0)]).re]
}

pub(super) fn run(config: &ScenarioConfig, report: &mut RunReport) -> Outcome {
    let section = config.switch.as_ref().expect("validated");
    let n_branch = section.branch_x.len();
    let dim = section.switch_dim.unwrap_or(n_branch);
    if section.switch_dim.is_none() {
        report.derived("switch.switch_dim", dim);
    }
    let switch_space = HilbertSpace::new(&[dim]).stage(KIND, "model")?;
    let mut hop = CMatrix::zeros(dim, dim);
    for j in 0..dim - 1 {
        hop[(j, j + 1)] = c(section.hop);
        hop[(j + 1, j)] = c(section.hop);
    }
    let h_switch = Operator::new(switch_space, hop).stage(KIND, "model")?;
    let h_rest = Operator::single(basis::sigma_z() * c(section.rest_field)).stage(KIND, "model")?;
    let branches: Vec<(Operator, usize)> = (0..n_branch)
        .map(|j| branch(section, j).map(|h| (h, j)))
        .collect::<aqm_core::Result<_>>()
        .stage(KIND, "model")?;
    let total = build_switch_hamiltonian(&branches, &h_switch, &h_rest).stage(KIND, "model")?;
    report.audit(Audit::at_most("hamiltonian.hermiticity", total.hermiticity_deviation(), 1e-12));

    let amps: Vec<f64> = match &section.switch_state {
        Some(w) => w.clone(),
        None => vec![1.0; dim],
    };
    let norm = amps.iter().map(|a| a * a).sum::<f64>().sqrt();
    let amps: Vec<f64> = amps.iter().map(|a| a / norm).collect();
    let switch_ket = CVector::from_iterator(dim, amps.iter().map(|&a| c(a)));
    let q0 = qubit_ket(section.qubit_state);
    let psi0 = q0.kronecker(&switch_ket);
    let space = total.space().clone();

    let eig = total.eigh().stage(KIND, "spectrum")?;
    let times: Vec<f64> = (0..=section.samples)
        .map(|k| section.t_final * k as f64 / section.samples as f64)
        .collect();
    let mut qubit_states = Vec::with_capacity(times.len());
    let mut switch_pops = vec![Vec::with_capacity(times.len()); dim];
    let mut norm_dev = 0.0f64;
    let mut branch_dev = 0.0f64;
    let mut pop_drift = 0.0f64;
    let branch_props: Vec<Operator> = (0..dim)
        .map(|j| match branches.iter().find(|(_, k)| *k == j) {
            Some((h, _)) => h.clone() + h_rest.clone(),
            None => h_rest.clone(),
        })
        .collect();
    for &t in &times {
        let u = eig.map_complex(|e| Complex64::from_polar(1.0, -e * t));
        let psi = &u * &psi0;
        norm_dev = norm_dev.max((psi.norm() - 1.0).abs());
        let rho = DensityMatrix::pure(&space, &psi.normalize()).stage(KIND, "state")?;
        let s = rho.partial_trace(&[1]).stage(KIND, "state")?;
        for (j, col) in switch_pops.iter_mut().enumerate() {
            let p = s.population(j);
            if section.hop == 0.0 {
                pop_drift = pop_drift.max((p - amps[j] * amps[j]).abs());
            }
            col.push(p);
        }
        if section.hop == 0.0 {
            // each switch state runs its own branch on the qubit
            let mut expected = CVector::zeros(psi.len());
            for (j, h) in branch_props.iter().enumerate() {
                let q = h.propagator(t).stage(KIND, "branch oracle")? * &q0;
                expected += q.kronecker(&basis::ket(dim, j)) * c(amps[j]);
            }
            branch_dev = branch_dev.max((&psi - expected).norm());
        }
        qubit_states.push(rho.partial_trace(&[0]).stage(KIND, "state")?);
    }
    report.audit(Audit::at_most("unitarity.norm", norm_dev, 1e-10));
    audit_states(report, "qubit.states", qubit_states.iter().map(|s| s.matrix()));
    if section.hop == 0.0 {
        report.audit(Audit::at_most("switch_populations_conserved", pop_drift, 1e-10));
        report.audit(Audit::at_most("branch_decomposition", branch_dev, 1e-10));
    } else {
        report.note("hopping mixes switch states: branch decomposition audit not applicable");
    }

    let purities: Vec<f64> = qubit_states.iter().map(purity).collect();
    let blochs: Vec<[f64; 3]> = qubit_states.iter().map(|s| bloch(s.matrix())).collect();
    let last = blochs.last().expect("at least t = 0");
    report.metric("qubit.final_bloch_x", last[0]);
    report.metric("qubit.final_bloch_y", last[1]);
    report.metric("qubit.final_bloch_z", last[2]);
    report.metric("qubit.min_purity", purities.iter().copied().fold(f64::INFINITY, f64::min));
    for (j, col) in switch_pops.iter().enumerate() {
        report.metric(format!("switch.final_population_{j}"), *col.last().expect("nonempty"));
    }

    let mut table = Table::new()
        .floats("t", times)
        .floats("bloch_x", blochs.iter().map(|b| b[0]).collect())
        .floats("bloch_y", blochs.iter().map(|b| b[1]).collect())
        .floats("bloch_z", blochs.iter().map(|b| b[2]).collect())
        .floats("qubit_purity", purities);
    for (j, col) in switch_pops.into_iter().enumerate() {
        table = table.floats(format!("switch_{j}"), col);
    }
    Ok(vec![("series.csv".to_string(), table)])
}
