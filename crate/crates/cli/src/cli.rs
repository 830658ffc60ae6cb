//! Argument handling and exit-status mapping for the `aqm-sim` binary.
//!
//! Exit status: 0 success with all audits passing, 1 usage or configuration
//! error, 2 numerical invariant failure (failed audit or module error).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{parse_config, ScenarioKind};
use crate::scenarios::{run_scenario, RunError, RunOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "aqm-sim", version, about = "Simulate autonomous quantum machines from TOML scenario files")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its CSV tables and report.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.directory`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root seed (overrides every seed in the file).
        #[arg(long)]
        seed: Option<u64>,
        /// Compute and audit only; write nothing.
        #[arg(long)]
        audit_only: bool,
    },
    /// Parse and validate a scenario file, printing the resolved config.
    Validate { config: PathBuf },
    /// List the available scenarios.
    ListScenarios,
}

fn read(path: &PathBuf, err: &mut dyn Write) -> Option<String> {
    match std::fs::read_to_string(path) {
        Ok(s) => Some(s),
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            None
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match args.command {
        Command::ListScenarios => {
            for k in ScenarioKind::ALL {
                let _ = writeln!(out, "{:<14} {}", k.name(), k.summary());
            }
            EXIT_OK
        }
        Command::Validate { config } => {
            let Some(text) = read(&config, err) else { return EXIT_USAGE };
            match parse_config(&text) {
                Ok(r) => {
                    let _ = writeln!(out, "# valid `{}` scenario", r.config.scenario);
                    for d in &r.defaults {
                        let _ = writeln!(out, "# default: {d}");
                    }
                    let _ = write!(out, "{}", r.config.to_toml());
                    EXIT_OK
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {}: {e}", config.display());
                    EXIT_USAGE
                }
            }
        }
        Command::Run {
            config,
            out: out_dir,
            seed,
            audit_only,
        } => {
            let Some(text) = read(&config, err) else { return EXIT_USAGE };
            let mut resolved = match parse_config(&text) {
                Ok(r) => r,
                Err(e) => {
                    let _ = writeln!(err, "error: {}: {e}", config.display());
                    return EXIT_USAGE;
                }
            };
            if let Some(s) = seed {
                resolved.config.override_seed(s);
            }
            let options = RunOptions { out_dir: out_dir.clone(), audit_only };
            match run_scenario(&resolved, &options) {
                Ok(report) => {
                    for a in &report.audits {
                        let _ = writeln!(
                            out,
                            "{} {} = {:e} ({:?} {:e})",
                            if a.passed { "PASS" } else { "FAIL" },
                            a.name,
                            a.value,
                            a.bound,
                            a.tolerance
                        );
                    }
                    for (name, m) in &report.metrics {
                        let _ = match m.error {
                            Some(e) => writeln!(out, "{name} = {} ± {e:e}", m.value),
                            None => writeln!(out, "{name} = {}", m.value),
                        };
                    }
                    for n in &report.notes {
                        let _ = writeln!(out, "note: {n}");
                    }
                    if !audit_only {
                        let dir = out_dir.unwrap_or_else(|| PathBuf::from(&resolved.config.output.directory));
                        let _ = writeln!(out, "wrote {} file(s) to {}", report.artifacts.len(), dir.display());
                    }
                    if report.all_passed() {
                        EXIT_OK
                    } else {
                        let _ = writeln!(err, "error: {} audit(s) failed", report.failed().count());
                        EXIT_NUMERICAL
                    }
                }
                Err(e @ RunError::Numerical { .. }) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_NUMERICAL
                }
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_USAGE
                }
            }
        }
    }
}
