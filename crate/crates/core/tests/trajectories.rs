use aqm_core::dynamics::{evolve, EvolveOptions, JumpChannel, LindbladModel};
use aqm_core::operator::{basis, DensityMatrix, HilbertSpace, Operator};
use aqm_core::trajectories::{run_ensemble, tick_statistics, unravel_trajectory, EnsembleOptions, InitialState};
use num_complex::Complex64;

fn decay_only(gamma: f64) -> LindbladModel {
    let l = Operator::single(basis::sigma_minus()).unwrap();
    LindbladModel::new(
        Operator::single(basis::sigma_z().scale(0.5)).unwrap(),
        vec![JumpChannel::new(l, gamma, "bath").unwrap()],
    )
    .unwrap()
}

fn driven_thermal() -> LindbladModel {
    let l = Operator::single(basis::sigma_minus()).unwrap();
    let h = Operator::single(basis::sigma_z().scale(0.5) + basis::sigma_x().scale(0.4)).unwrap();
    LindbladModel::new(
        h,
        vec![
            JumpChannel::new(l.clone(), 0.8, "bath").unwrap(),
            JumpChannel::new(l.adjoint(), 0.2, "bath").unwrap(),
        ],
    )
    .unwrap()
}

#[test]
fn waiting_times_are_exponential() {
    let gamma = 2.0;
    let model = decay_only(gamma);
    let n = 10_000;
    let opts = EnsembleOptions {
        n_traj: n,
        seed: 2024,
        dt: 1e-3 / gamma,
        t_final: 10.0,
        sample_times: vec![],
        keep_records: true,
    };
    let ens = run_ensemble(&model, &InitialState::Pure(basis::ket(2, 1)), &opts).unwrap();
    let mut waits: Vec<f64> = ens
        .records
        .iter()
        .map(|r| {
            assert!(r.events.len() <= 1, "one excitation can decay only once");
            r.events.first().map_or(f64::INFINITY, |e| e.time)
        })
        .collect();
    waits.sort_by(f64::total_cmp);
    let finite: Vec<f64> = waits.iter().copied().filter(|t| t.is_finite()).collect();
    // e^{-20} of the runs survive to t_final: essentially none
    assert!(finite.len() >= n - 1);
    let mean = finite.iter().sum::<f64>() / finite.len() as f64;
    let sigma = 1.0 / gamma / (finite.len() as f64).sqrt();
    assert!((mean - 1.0 / gamma).abs() < 3.0 * sigma, "mean {mean}");
    // Kolmogorov-Smirnov distance to the exponential law (α = 0.001)
    let m = waits.len() as f64;
    let d = waits
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let cdf = 1.0 - (-gamma * t).exp();
            (cdf - i as f64 / m).abs().max(((i + 1) as f64 / m - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 1.95 / m.sqrt(), "KS distance {d}");
}

#[test]
fn ensemble_average_reproduces_master_equation() {
    let model = driven_thermal();
    let space = HilbertSpace::qubit();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rho0 = DensityMatrix::new(
        space.clone(),
        basis::projector(2, 0).scale(0.7) + basis::projector(2, 1).scale(0.3)
            + (basis::transition(2, 0, 1) + basis::transition(2, 1, 0)).scale(0.2 * s),
    )
    .unwrap();
    let dt = 1e-3;
    let t_final = 4.0;
    let sample_times: Vec<f64> = (1..=8).map(|k| k as f64 * 0.5).collect();
    let opts = EnsembleOptions {
        n_traj: 10_000,
        seed: 7,
        dt,
        t_final,
        sample_times: sample_times.clone(),
        keep_records: false,
    };
    let ens = run_ensemble(&model, &InitialState::from_density(&rho0), &opts).unwrap();
    let series = evolve(&model, &rho0, t_final, dt, &EvolveOptions { sample_every: 500, ..Default::default() }).unwrap();
    for (k, &t) in sample_times.iter().enumerate() {
        let idx = series.times.iter().position(|&x| (x - t).abs() < 1e-9).unwrap();
        let exact = series.states[idx].matrix();
        let (se_re, se_im) = &ens.std_error[k];
        for i in 0..2 {
            for j in 0..2 {
                let diff: Complex64 = ens.mean[k][(i, j)] - exact[(i, j)];
                assert!(diff.re.abs() <= 5.0 * se_re[(i, j)] + 1e-12, "t={t} ({i},{j}) re {diff}");
                assert!(diff.im.abs() <= 5.0 * se_im[(i, j)] + 1e-12, "t={t} ({i},{j}) im {diff}");
            }
        }
    }
}

#[test]
fn ensembles_are_schedule_independent() {
    let model = driven_thermal();
    let psi = basis::ket(2, 0);
    let opts = EnsembleOptions {
        n_traj: 600,
        seed: 99,
        dt: 1e-3,
        t_final: 20.0,
        sample_times: vec![10.0, 20.0],
        keep_records: true,
    };
    let a = run_ensemble(&model, &InitialState::Pure(psi.clone()), &opts).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| run_ensemble(&model, &InitialState::Pure(psi.clone()), &opts).unwrap());
    assert_eq!(a.records, b.records);
    assert_eq!(a.mean, b.mean);
    // a lone trajectory reproduces stream 0 of the ensemble
    let single = unravel_trajectory(&model, &psi, 20.0, 1e-3, 99).unwrap();
    assert_eq!(single.events, a.records[0].events);
    let stats = tick_statistics(&a.records, "bath", 2.0).unwrap();
    let mut shuffled = a.records.clone();
    shuffled.reverse();
    shuffled.swap(3, 70);
    assert_eq!(stats, tick_statistics(&shuffled, "bath", 2.0).unwrap());
    for r in &a.records {
        assert!(r.events.windows(2).all(|w| w[0].time < w[1].time));
        assert!(r.events.iter().all(|e| (0.0..=r.t_final).contains(&e.time)));
    }
}
