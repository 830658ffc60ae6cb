//! Acceptance run: one PASS/FAIL line per criterion, with the checks behind it.
//!
//! Criteria listed in `KNOWN_RED` are expected to fail for a documented reason;
//! they still print FAIL but do not fail the test target. Any other failure,
//! or a known-red criterion that unexpectedly passes, exits nonzero.

mod common;

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use aqm_core::dynamics::{steady_state, thermal_channels, LindbladModel};
use aqm_core::machines::build_fridge;
use aqm_core::operator::{basis, embed, HilbertSpace, Operator, Temperature};
use common::{cli, config, lorentzian_g, phase_coherence, read_csv, Report};

/// Criterion ids that fail honestly, with the reason printed next to them.
const KNOWN_RED: &[(u32, &str)] = &[(
    2,
    "the bundled gate is CNOT, whose Haar average is 0.7 + 0.3e^{-π²/2N}; \
     (2 + e^{-π²/2N})/3 is the single-qubit result, reproduced by the X control",
)];

struct Criterion {
    id: u32,
    title: &'static str,
    checks: Vec<(String, bool)>,
}

impl Criterion {
    fn new(id: u32, title: &'static str) -> Self {
        Criterion { id, title, checks: Vec::new() }
    }

    fn check(&mut self, what: impl Into<String>, ok: bool) {
        self.checks.push((what.into(), ok));
    }

    /// Wall time since `start`, or the original time of reused runs if larger.
    fn runtime(&mut self, start: Instant, reused_s: f64, budget_s: f64) {
        let s = start.elapsed().as_secs_f64().max(reused_s);
        self.check(format!("runtime {s:.2} s < {budget_s} s"), s < budget_s);
    }

    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.1)
    }
}

/// Bundled runs keyed by config file name: output directory and wall time.
struct Runs {
    root: PathBuf,
    done: BTreeMap<String, (PathBuf, f64)>,
}

impl Runs {
    fn run(&mut self, name: &str) -> (Report, f64) {
        if let Some((dir, t)) = self.done.get(name) {
            return (Report::load(dir), *t);
        }
        let dir = self.root.join("first").join(name);
        let start = Instant::now();
        let out = common::run_into(&config(name), &dir);
        let t = start.elapsed().as_secs_f64();
        assert_eq!(out.code, 0, "{name} exited {}:\n{}{}", out.code, out.stdout, out.stderr);
        self.done.insert(name.to_string(), (dir.clone(), t));
        (Report::load(&dir), t)
    }

    fn dir(&self, name: &str) -> &Path {
        &self.done[name].0
    }
}

fn parsed(name: &str) -> aqm_sim::ScenarioConfig {
    aqm_sim::parse_config(&std::fs::read_to_string(config(name)).unwrap()).unwrap().config
}

fn excited_population(gap: f64, t: Temperature) -> f64 {
    match t {
        Temperature::Zero => 0.0,
        Temperature::Infinite => 0.5,
        Temperature::Finite(t) => 1.0 / (1.0 + (gap / t).exp()),
    }
}

fn decoherence(runs: &mut Runs) -> Criterion {
    let mut c = Criterion::new(1, "non-Markovian decoherence closed form");
    let start = Instant::now();
    let (strong, t1) = runs.run("decoherence-strong.toml");
    let (weak, t2) = runs.run("decoherence-weak.toml");
    c.runtime(start, t1 + t2, 1.0);

    // tan(7t/2) = −7 on the first branch
    let t_zero = 2.0 * (PI - 7.0f64.atan()) / 7.0;
    let first = strong.number("first_zero");
    c.check(format!("first zero {first:.12} vs {t_zero:.12}"), (first - t_zero).abs() <= 1e-9);
    let p_min = strong.number("purity_min");
    c.check(format!("purity minimum {p_min:.12} vs 7/8"), (p_min - 0.875).abs() <= 1e-9);

    let (_, rows) = read_csv(&runs.dir("decoherence-strong.toml").join("decoherence.csv"));
    let worst = rows
        .iter()
        .map(|r| {
            let g = lorentzian_g(1.0, 25.0, r[0]);
            (r[1] - g).abs().max((r[2] - (1.0 - g * g / 2.0 + g.powi(4) / 2.0)).abs())
        })
        .fold(0.0f64, f64::max);
    c.check(format!("strong-coupling table vs closed form: {worst:.1e} ≤ 1e-12"), worst <= 1e-12);
    let g_end = lorentzian_g(1.0, 25.0, 10.0);
    let p_end = rows.last().unwrap()[2];
    c.check(
        format!("purity tends to 1: {p_end:.8} at t = 10, 1 - p = {:.1e}", 1.0 - p_end),
        (1.0 - p_end) <= g_end * g_end && p_end > 0.9999,
    );

    let (_, weak_rows) = read_csv(&runs.dir("decoherence-weak.toml").join("decoherence.csv"));
    let rise = weak_rows.windows(2).map(|w| w[1][1] - w[0][1]).fold(f64::NEG_INFINITY, f64::max);
    c.check(format!("weak coupling monotone: largest increment {rise:.1e} ≤ 1e-12"), rise <= 1e-12);
    c.check("weak coupling reported Markovian", weak.metric("regime") == "markovian");
    c
}

fn gate_fidelity(runs: &mut Runs, file: &str, id: u32, title: &'static str) -> Criterion {
    let mut c = Criterion::new(id, title);
    let start = Instant::now();
    let (r, t) = runs.run(file);
    c.runtime(start, t, 30.0);
    let section = parsed(file).gate_fidelity.unwrap();
    c.check(format!("n_samples = {}", section.n_samples), section.n_samples >= 100_000);
    for &n in &section.accuracies {
        let label = if n.fract() == 0.0 { format!("{n:.0}") } else { format!("{n}") };
        let mean = r.number(&format!("fidelity@{label}"));
        let se = r.error(&format!("fidelity@{label}"));
        let oracle = (2.0 + phase_coherence(n)) / 3.0;
        let z = (mean - oracle).abs() / se;
        c.check(format!("N = {label}: {mean:.6} ± {se:.1e} vs {oracle:.6}, z = {z:.2} ≤ 3"), z <= 3.0);
    }
    let perfect = r.number("fidelity@perfect_clock");
    c.check(format!("N → ∞ control: |F - 1| = {:.1e} ≤ 1e-9", (perfect - 1.0).abs()), (perfect - 1.0).abs() <= 1e-9);
    c
}

fn fridge_laws(runs: &mut Runs) -> Criterion {
    let mut c = Criterion::new(3, "fridge thermodynamic laws");
    let start = Instant::now();
    let (r, t) = runs.run("fridge.toml");
    c.runtime(start, t, 10.0);
    let spec = parsed("fridge.toml").fridge.unwrap().spec().unwrap();
    let q: Vec<f64> = ["hot", "cold", "target-bath"].iter().map(|b| r.number(&format!("heat_current.{b}"))).collect();
    let largest = q.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sum: f64 = q.iter().sum();
    c.check(format!("first law: |ΣQ|/max|Q| = {:.1e} ≤ 1e-9", sum.abs() / largest), sum.abs() <= 1e-9 * largest);
    let sigma = r.number("entropy_production");
    c.check(format!("second law: σ = {sigma:.3e} ≥ 0"), sigma >= 0.0);
    let cop = q[2] / q[0];
    let ideal = spec.delta_target / spec.delta_hot;
    c.check(format!("COP {cop:.10} vs Δ_T/Δ_H = {ideal}"), (cop - ideal).abs() <= 1e-4);
    let p = r.number("target_excited_population");
    let p_ref = excited_population(2.0 * spec.delta_target, spec.t_target.unwrap());
    c.check(format!("cooling: target population {p:.6} < thermal {p_ref:.6}"), p < p_ref);
    let diff = r.number("steady_state.evolve_difference");
    c.check(format!("null space vs long-time evolve: {diff:.1e} ≤ 1e-6"), diff <= 1e-6);
    c
}

fn clock_accuracy(runs: &mut Runs) -> Criterion {
    let mut c = Criterion::new(4, "clock accuracy in the one-way regime");
    let start = Instant::now();
    let mut estimates = Vec::new();
    let mut reused = 0.0;
    for d in [2usize, 4, 8] {
        let file = format!("clock-oneway-d{d}.toml");
        let (r, t) = runs.run(&file);
        reused += t;
        let (n, se) = (r.number("accuracy_N"), r.error("accuracy_N"));
        let ticks = r.number("ticks.count");
        c.check(format!("d = {d}: {ticks} ticks ≥ 1e4"), ticks >= 1e4);
        let rel = (n - d as f64).abs() / d as f64;
        c.check(format!("d = {d}: N = {n:.3} ± {se:.3}, off by {:.1}% ≤ 10%", 100.0 * rel), rel <= 0.1);
        let res = r.number("resolution") * r.number("ticks.mean_interval");
        c.check(format!("d = {d}: resolution · t̄ - 1 = {:.1e}", res - 1.0), (res - 1.0).abs() <= 1e-12);
        estimates.push((d, n, se));
    }
    for w in estimates.windows(2) {
        let ((d1, n1, s1), (d2, n2, s2)) = (w[0], w[1]);
        let gap = (n2 - n1) / s1.hypot(s2);
        c.check(format!("N(d={d2}) - N(d={d1}) = {gap:.1} σ > 3 σ"), gap > 3.0);
    }
    c.runtime(start, reused, 300.0);
    c
}

fn unraveling(runs: &mut Runs) -> Criterion {
    let mut c = Criterion::new(5, "trajectory ensemble reproduces the master equation");
    let start = Instant::now();
    let mut elapsed = 0.0;
    for file in ["fridge.toml", "clock-gentle.toml"] {
        let (r, t) = runs.run(file);
        elapsed += t;
        let n_traj = parsed(file).trajectories.unwrap().n_traj;
        c.check(format!("{file}: n_traj = {n_traj}"), n_traj >= 10_000);
        let (header, rows) = read_csv(&runs.dir(file).join("ensemble.csv"));
        let col = |name: &str| header.iter().position(|h| h == name).unwrap();
        let floor = 1.0 / n_traj as f64;
        let mut worst = 0.0f64;
        for row in &rows {
            for part in ["re", "im"] {
                let diff = (row[col(&format!("{part}_mean"))] - row[col(&format!("{part}_evolve"))]).abs();
                let se = row[col(&format!("{part}_std_error"))].max(floor);
                if diff > 1e-12 {
                    worst = worst.max(diff / se);
                }
            }
        }
        c.check(format!("{file}: {} entries, worst z = {worst:.2} ≤ 5", 2 * rows.len()), worst <= 5.0);
        c.check(format!("{file}: report agrees"), r.audit("ensemble_vs_evolve").0);
    }
    c.runtime(start, elapsed, 300.0);
    c
}

fn qubit_relaxes_to_thermal(gap: f64, t: Temperature, rate: f64) -> f64 {
    let model = LindbladModel::new(
        Operator::single(basis::sigma_z()).unwrap().scaled(gap / 2.0),
        thermal_channels(&Operator::single(basis::sigma_minus()).unwrap(), gap, t, rate, "bath").unwrap(),
    )
    .unwrap();
    let ss = steady_state(&model).unwrap();
    let p1 = excited_population(gap, t);
    let m = ss.matrix();
    (m[(1, 1)].re - p1).abs().max((m[(0, 0)].re - (1.0 - p1)).abs()).max(m[(0, 1)].norm())
}

fn csv_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    v.sort();
    v
}

fn invariants(runs: &mut Runs) -> Criterion {
    let mut c = Criterion::new(6, "structural invariants across bundled scenarios");
    let start = Instant::now();
    let names: Vec<String> = common::bundled_configs()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    let mut state_audits = 0;
    for name in &names {
        let (r, _) = runs.run(name);
        let failed: Vec<String> = r
            .audits()
            .filter(|a| !a.1 && [".trace", ".hermiticity", ".positivity"].iter().any(|s| a.0.ends_with(s)))
            .map(|a| format!("{} = {:e}", a.0, a.2))
            .collect();
        state_audits += r
            .audits()
            .filter(|a| [".trace", ".hermiticity", ".positivity"].iter().any(|s| a.0.ends_with(s)))
            .count();
        c.check(format!("{name}: states valid {failed:?}"), failed.is_empty());
        let commutator = r.audits().find(|a| a.0 == "energy_conservation.commutator").map(|a| a.2);
        if let Some(v) = commutator {
            c.check(format!("{name}: |[H_int, ΣH_i]| = {v:e} < 1e-10"), v < 1e-10);
        }
    }
    c.check(format!("{state_audits} state audits evaluated"), state_audits > 0);

    let mut worst: f64 = 0.0;
    for name in &names {
        let cfg = parsed(name);
        if let Some(f) = &cfg.fridge {
            let spec = f.spec().unwrap();
            let [h, co, ta] = spec.splittings();
            let temps = [Some(spec.t_hot), Some(spec.t_cold), spec.t_target];
            for (gap, t) in [h, co, ta].into_iter().zip(temps) {
                if let Some(t) = t {
                    worst = worst.max(qubit_relaxes_to_thermal(gap, t, spec.rate));
                }
            }
            if spec.t_target.is_some() {
                // the decoupled machine is a product of thermal qubits
                let decoupled = aqm_core::machines::FridgeSpec { coupling: 0.0, ..spec.clone() };
                let ss = steady_state(&build_fridge(&decoupled).unwrap()).unwrap();
                let p = [h, co, ta].into_iter().zip(temps).map(|(g, t)| excited_population(g, t.unwrap())).collect::<Vec<_>>();
                let space = HilbertSpace::new(&[2, 2, 2]).unwrap();
                for (k, _) in p.iter().enumerate() {
                    let z = embed(&Operator::single(basis::projector(2, 1)).unwrap(), &space, k).unwrap();
                    let got = (ss.matrix() * z.matrix()).trace().re;
                    worst = worst.max((got - p[k]).abs());
                }
            }
        }
        if let Some(k) = &cfg.clock {
            let spec = k.spec().unwrap();
            worst = worst.max(qubit_relaxes_to_thermal(2.0 * spec.delta_hot, spec.t_hot, spec.rate));
            worst = worst.max(qubit_relaxes_to_thermal(2.0 * spec.delta_cold, spec.t_cold, spec.rate));
        }
    }
    c.check(format!("detailed balance: bath-coupled qubits thermal to {worst:.1e} ≤ 1e-8"), worst <= 1e-8);

    for name in &names {
        let again = runs.root.join("second").join(name);
        let out = common::run_into(&config(name), &again);
        let first = runs.dir(name);
        let files = csv_files(first);
        let same = out.code == 0
            && files == csv_files(&again)
            && files.iter().all(|f| std::fs::read(first.join(f)).unwrap() == std::fs::read(again.join(f)).unwrap());
        c.check(format!("{name}: rerun byte-identical across {} CSV file(s)", files.len()), same);
    }
    c.runtime(start, 0.0, 120.0);
    c
}

fn boundary(runs: &Runs) -> Criterion {
    let mut c = Criterion::new(7, "resonance violations rejected at parse time");
    let cases = [
        ("fridge.toml", "delta_cold = 1.5", "delta_cold = 1.6"),
        ("clock-gentle.toml", "spacing = 1.0", "spacing = 1.25"),
        ("clock-oneway-d4.toml", "spacing = 1000.0", "spacing = 990.0"),
    ];
    for (file, from, to) in cases {
        let text = std::fs::read_to_string(config(file)).unwrap();
        assert!(text.contains(from), "{file} lacks `{from}`");
        let path = runs.root.join(format!("bad-{file}"));
        std::fs::write(&path, text.replace(from, to)).unwrap();
        let out_dir = runs.root.join(format!("bad-out-{file}"));
        let run = cli(&["run", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        let validate = cli(&["validate", path.to_str().unwrap()]);
        let message = run.stderr.trim().to_string();
        c.check(
            format!("{file} with `{to}`: exit {} / {}: {message}", run.code, validate.code),
            run.code == 1 && validate.code == 1 && message.contains("residual") && !out_dir.exists(),
        );
    }
    c
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let mut runs = Runs {
        root: root.path().to_path_buf(),
        done: BTreeMap::new(),
    };
    let criteria = [
        decoherence(&mut runs),
        gate_fidelity(&mut runs, "gate-fidelity.toml", 2, "clock-limited gate fidelity"),
        fridge_laws(&mut runs),
        clock_accuracy(&mut runs),
        unraveling(&mut runs),
        invariants(&mut runs),
        boundary(&runs),
    ];
    let control = gate_fidelity(&mut runs, "gate-fidelity-x.toml", 2, "clock-limited gate fidelity (single-qubit X control)");

    let mut unexpected = Vec::new();
    for c in criteria.iter().chain(std::iter::once(&control)) {
        let known = KNOWN_RED.iter().find(|k| k.0 == c.id).filter(|_| !std::ptr::eq(c, &control));
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        println!("criterion {} {verdict}  {}", c.id, c.title);
        for (what, ok) in &c.checks {
            println!("    [{}] {what}", if *ok { "ok" } else { "no" });
        }
        match known {
            Some((_, why)) if !c.passed() => println!("    known deviation: {why}"),
            Some(_) => unexpected.push(format!("criterion {} passed but is listed as known red", c.id)),
            None if !c.passed() => unexpected.push(format!("criterion {} failed", c.id)),
            None => {}
        }
    }
    if !unexpected.is_empty() {
        eprintln!("{}", unexpected.join("\n"));
        std::process::exit(1);
    }
}
