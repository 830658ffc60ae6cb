#![allow(dead_code)]

use std::path::{Path, PathBuf};

use serde_json::Value;

pub fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn config(name: &str) -> PathBuf {
    configs_dir().join(name)
}

pub fn bundled_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(configs_dir())
        .expect("configs directory")
        .map(|e| e.expect("dir entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    v.sort();
    v
}

pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the CLI in-process.
pub fn cli(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("aqm-sim").chain(args.iter().copied());
    let code = aqm_sim::cli::run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).expect("utf-8 stdout"),
        stderr: String::from_utf8(err).expect("utf-8 stderr"),
    }
}

/// `aqm-sim run <config> --out <dir>`.
pub fn run_into(config: &Path, dir: &Path) -> Outcome {
    cli(&["run", config.to_str().unwrap(), "--out", dir.to_str().unwrap()])
}

pub struct Report(pub Value);

impl Report {
    pub fn load(dir: &Path) -> Report {
        let text = std::fs::read_to_string(dir.join("report.json")).expect("report.json");
        Report(serde_json::from_str(&text).expect("report parses"))
    }

    pub fn metric(&self, name: &str) -> &Value {
        &self.0["metrics"][name]["value"]
    }

    pub fn number(&self, name: &str) -> f64 {
        self.metric(name).as_f64().unwrap_or_else(|| panic!("metric {name} is not a number"))
    }

    pub fn error(&self, name: &str) -> f64 {
        self.0["metrics"][name]["error"].as_f64().unwrap_or_else(|| panic!("metric {name} has no error"))
    }

    pub fn audits(&self) -> impl Iterator<Item = (&str, bool, f64)> {
        self.0["audits"].as_array().expect("audits").iter().map(|a| {
            (
                a["name"].as_str().expect("name"),
                a["passed"].as_bool().expect("passed"),
                a["value"].as_f64().unwrap_or(f64::NAN),
            )
        })
    }

    pub fn audit(&self, name: &str) -> (bool, f64) {
        self.audits()
            .find(|a| a.0 == name)
            .map(|a| (a.1, a.2))
            .unwrap_or_else(|| panic!("no audit {name}"))
    }
}

/// Parses a CSV artifact into its header and numeric rows.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut reader = csv::Reader::from_path(path).expect("csv opens");
    let header = reader.headers().expect("header").iter().map(str::to_string).collect();
    let rows = reader
        .records()
        .map(|r| r.expect("record").iter().map(|f| f.parse::<f64>().expect("numeric field")).collect())
        .collect();
    (header, rows)
}

/// Closed-form decoherence function of a qubit in a Lorentzian vacuum bath.
pub fn lorentzian_g(lambda: f64, gamma0: f64, t: f64) -> f64 {
    let s = 2.0 * gamma0 * lambda - lambda * lambda;
    let envelope = (-lambda * t / 2.0).exp();
    if s > 0.0 {
        let w = s.sqrt();
        envelope * ((w * t / 2.0).cos() + lambda / w * (w * t / 2.0).sin())
    } else {
        let d = (-s).sqrt();
        envelope * ((d * t / 2.0).cosh() + lambda / d * (d * t / 2.0).sinh())
    }
}

/// `E cos φ` for a phase error φ ~ N(0, π²/N); exactly 1 for a perfect clock.
pub fn phase_coherence(accuracy: f64) -> f64 {
    (-std::f64::consts::PI.powi(2) / (2.0 * accuracy)).exp()
}

/// Haar average `(d + E|Tr V|²) / (d(d+1))` for an error unitary `V` carrying the
/// phase on a rank-`r` projector: `|Tr V|² = (d−r)² + r² + 2r(d−r) cos φ`.
pub fn haar_fidelity(dim: f64, rank: f64, accuracy: f64) -> f64 {
    let c = phase_coherence(accuracy);
    let trace_sq = (dim - rank).powi(2) + rank * rank + 2.0 * rank * (dim - rank) * c;
    (dim + trace_sq) / (dim * (dim + 1.0))
}
