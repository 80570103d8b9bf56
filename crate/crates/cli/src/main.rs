//! `vanet-sim`: run trust-management scenarios and write their logs,
//! metrics and summaries as CSV/text artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use vanet_sim_core::metrics;
use vanet_sim_core::presets::{self, Fig5Mode};
use vanet_sim_core::runner::{self, RunError};
use vanet_sim_core::scenario::ScenarioConfig;
use vanet_sim_core::world::RunOutput;

#[derive(Parser)]
#[command(name = "vanet-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single scenario from a TOML config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the scripted verification trace (scenario fig4).
    Trace {
        #[arg(long)]
        scenario: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the dispute-accuracy grid (scenario fig5).
    Sweep {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![10, 30, 50, 70, 90, 100])]
        densities: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0])]
        p_values: Vec<f64>,
        /// Sender behaviour: `true`, `untrue`, or both.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["true".to_string(), "untrue".to_string()])]
        modes: Vec<String>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the protocol overhead/response-time comparison (scenario fig6).
    Compare {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_delimiter = ',', default_values_t = vec![30.0, 45.0])]
        timers: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![10, 30, 50, 70])]
        densities: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
        seeds: Vec<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, seed, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = ScenarioConfig::from_toml(&text)?;
            run_single(&cfg, seed, &out)
        }
        Command::Trace { scenario, seed, out } => {
            if scenario != "fig4" {
                bail!("trace supports --scenario fig4, got {scenario}");
            }
            run_single(&presets::fig4(), seed, &out)
        }
        Command::Sweep {
            scenario,
            densities,
            p_values,
            modes,
            seeds,
            out,
        } => {
            if scenario != "fig5" {
                bail!("sweep supports --scenario fig5, got {scenario}");
            }
            let modes = modes
                .iter()
                .map(|m| match m.as_str() {
                    "true" => Ok(Fig5Mode::AllTrue),
                    "untrue" => Ok(Fig5Mode::AllUntrue),
                    other => bail!("unknown mode {other} (expected true or untrue)"),
                })
                .collect::<Result<Vec<_>>>()?;
            let points = match runner::sweep_fig5(&densities, &p_values, &modes, &seeds) {
                Ok(points) => points,
                Err(err) => return fail_run(err),
            };
            fs::create_dir_all(&out)?;
            fs::write(out.join("sweep.csv"), runner::sweep_csv(&points))?;
            fs::write(
                out.join("sweep_summary.csv"),
                runner::sweep_summary_csv(&points),
            )?;
            println!(
                "wrote {} runs to {} (sweep.csv, sweep_summary.csv)",
                points.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare {
            scenario,
            timers,
            densities,
            seeds,
            out,
        } => {
            if scenario != "fig6" {
                bail!("compare supports --scenario fig6, got {scenario}");
            }
            let points = match runner::compare_fig6(&densities, &timers, &seeds) {
                Ok(points) => points,
                Err(err) => return fail_run(err),
            };
            fs::create_dir_all(&out)?;
            fs::write(out.join("compare.csv"), runner::compare_csv(&points))?;
            fs::write(
                out.join("compare_summary.csv"),
                runner::compare_summary_csv(&points),
            )?;
            println!(
                "wrote {} runs to {} (compare.csv, compare_summary.csv)",
                points.len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Invariant violations exit with code 2; everything else is an ordinary
/// error (exit 1).
fn fail_run(err: RunError) -> Result<ExitCode> {
    match err {
        RunError::Violations { .. } => {
            eprintln!("{err}");
            Ok(ExitCode::from(2))
        }
        RunError::Scenario(err) => Err(err.into()),
    }
}

fn run_single(cfg: &ScenarioConfig, seed: u64, out_dir: &Path) -> Result<ExitCode> {
    let out = runner::run_scenario(cfg, seed)?;
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("config.toml"), cfg.to_toml())?;
    fs::write(out_dir.join("messages.csv"), out.logs.messages_csv(&out.names))?;
    fs::write(out_dir.join("trust.csv"), out.logs.trust_csv())?;
    fs::write(out_dir.join("disputes.csv"), out.logs.disputes_csv())?;
    fs::write(
        out_dir.join("decisions.csv"),
        out.logs.decisions_csv(&out.names),
    )?;
    fs::write(out_dir.join("ta_drivers.csv"), &out.ta_drivers_csv)?;
    fs::write(out_dir.join("ta_incidents.csv"), &out.ta_incidents_csv)?;
    fs::write(out_dir.join("ta_rulings.csv"), &out.ta_rulings_csv)?;
    let violations = metrics::audit(&out);
    fs::write(out_dir.join("summary.txt"), summary(&out, &violations))?;
    println!("wrote run artifacts to {}", out_dir.display());
    if violations.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for v in &violations {
            eprintln!("invariant violation: {v}");
        }
        Ok(ExitCode::from(2))
    }
}

fn summary(out: &RunOutput, violations: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", out.scenario);
    let _ = writeln!(s, "seed: {}", out.seed);
    let _ = writeln!(s, "mode: {:?}", out.mode);
    let _ = writeln!(s, "duration_s: {}", out.duration.as_secs_f64());
    let _ = writeln!(
        s,
        "vehicles: {} ({} officials), rsus: {}",
        out.vehicle_count,
        out.officials.len(),
        out.rsu_count
    );
    let _ = writeln!(s, "announcements: {}", out.announcements.len());
    let decided = out.cases.iter().filter(|c| c.verdict.is_some()).count();
    let referred = out.cases.iter().filter(|c| c.referred).count();
    let _ = writeln!(
        s,
        "disputes: {} opened, {} decided, {} referred to officials",
        out.cases.len(),
        decided,
        referred
    );
    let matrix = metrics::classify(out);
    let _ = writeln!(
        s,
        "classification: true_ruled_true={} true_ruled_false={} false_ruled_true={} \
         false_ruled_false={} unresolved={}",
        matrix.true_ruled_true,
        matrix.true_ruled_false,
        matrix.false_ruled_true,
        matrix.false_ruled_false,
        matrix.unresolved
    );
    let overhead = metrics::overhead(out);
    let _ = writeln!(
        s,
        "overhead: {} transmissions, {} bytes (beacons {})",
        overhead.transmissions,
        overhead.bytes,
        if out.count_beacons { "counted" } else { "excluded" }
    );
    match metrics::mean_decision_latency_s(out) {
        Some(latency) => {
            let _ = writeln!(
                s,
                "decisions: {}, mean latency {:.4} s",
                metrics::decision_latencies_s(out).len(),
                latency
            );
        }
        None => {
            let _ = writeln!(s, "decisions: none recorded");
        }
    }
    let _ = writeln!(s, "blocked drivers: {:?}", out.blocked_drivers);
    if violations.is_empty() {
        let _ = writeln!(s, "audit: clean");
    } else {
        let _ = writeln!(s, "audit: {} violation(s)", violations.len());
        for v in violations {
            let _ = writeln!(s, "  - {v}");
        }
    }
    s
}
