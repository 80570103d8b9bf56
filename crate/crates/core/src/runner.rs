//! Batch execution on top of [`World`]: single runs, job batches (parallel
//! when the `parallel` feature is enabled), and the canned evaluation grids
//! behind the `sweep`, `compare` and `trace` CLI commands.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::metrics::{self, ClassificationMatrix};
use crate::presets::{self, Fig5Mode};
use crate::scenario::{ProtocolMode, ScenarioConfig, ScenarioError};
use crate::world::{RunOutput, World};

/// One simulation to run. Batches preserve job order in their results.
#[derive(Clone, Debug)]
pub struct Job {
    pub cfg: ScenarioConfig,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("invariant violations in {scenario} (seed {seed}):\n  {}", details.join("\n  "))]
    Violations {
        scenario: String,
        seed: u64,
        details: Vec<String>,
    },
}

/// Validates and runs a single scenario to completion.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<RunOutput, ScenarioError> {
    cfg.validate()?;
    Ok(World::build(cfg.clone(), seed).run())
}

/// Runs a scenario and fails if the post-run log audit finds violations.
pub fn run_checked(cfg: &ScenarioConfig, seed: u64) -> Result<RunOutput, RunError> {
    let out = run_scenario(cfg, seed)?;
    let details = metrics::audit(&out);
    if details.is_empty() {
        Ok(out)
    } else {
        Err(RunError::Violations {
            scenario: out.scenario.clone(),
            seed,
            details,
        })
    }
}

/// Runs every job through [`run_checked`], reducing each output in the
/// worker so large logs are dropped as soon as they are summarized.
fn map_jobs_checked<T, F>(jobs: &[Job], f: F) -> Result<Vec<T>, RunError>
where
    F: Fn(&RunOutput) -> T + Sync,
    T: Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|job| run_checked(&job.cfg, job.seed).map(|out| f(&out)))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter()
            .map(|job| run_checked(&job.cfg, job.seed).map(|out| f(&out)))
            .collect()
    }
}

/// Runs a batch of independent jobs, in parallel when built with the
/// `parallel` feature (the default) and sequentially otherwise.
pub fn run_batch(jobs: &[Job]) -> Result<Vec<RunOutput>, ScenarioError> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|job| run_scenario(&job.cfg, job.seed))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(jobs)
    }
}

/// Single-threaded batch runner; the baseline the parallel path must match.
pub fn run_batch_sequential(jobs: &[Job]) -> Result<Vec<RunOutput>, ScenarioError> {
    jobs.iter()
        .map(|job| run_scenario(&job.cfg, job.seed))
        .collect()
}

/// Classification outcome of one accuracy-sweep run.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub density: usize,
    pub p: f64,
    pub mode: Fig5Mode,
    pub seed: u64,
    pub matrix: ClassificationMatrix,
}

/// Runs the dispute-accuracy grid: every density x clarifier-yes-probability
/// x mode combination, once per seed.
pub fn sweep_fig5(
    densities: &[usize],
    ps: &[f64],
    modes: &[Fig5Mode],
    seeds: &[u64],
) -> Result<Vec<SweepPoint>, RunError> {
    let mut jobs = Vec::new();
    let mut keys = Vec::new();
    for &density in densities {
        for &p in ps {
            for &mode in modes {
                for &seed in seeds {
                    jobs.push(Job {
                        cfg: presets::fig5(density, p, mode),
                        seed,
                    });
                    keys.push((density, p, mode, seed));
                }
            }
        }
    }
    let matrices = map_jobs_checked(&jobs, metrics::classify)?;
    Ok(keys
        .into_iter()
        .zip(matrices)
        .map(|((density, p, mode, seed), matrix)| SweepPoint {
            density,
            p,
            mode,
            seed,
            matrix,
        })
        .collect())
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = String::from(
        "density,p,mode,seed,cases,true_ruled_true,true_ruled_false,false_ruled_true,\
         false_ruled_false,unresolved,tn_rate,fp_rate,fn_rate,tp_rate,unresolved_rate\n",
    );
    for pt in points {
        let m = &pt.matrix;
        s.push_str(&format!(
            "{},{:.2},{},{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            pt.density,
            pt.p,
            pt.mode.label(),
            pt.seed,
            m.total(),
            m.true_ruled_true,
            m.true_ruled_false,
            m.false_ruled_true,
            m.false_ruled_false,
            m.unresolved,
            m.tn_rate(),
            m.fp_rate(),
            m.fn_rate(),
            m.tp_rate(),
            m.unresolved_rate(),
        ));
    }
    s
}

/// Mean rates per (density, p, mode) cell, averaged over seeds.
pub fn sweep_summary_csv(points: &[SweepPoint]) -> String {
    let mut cells: BTreeMap<(usize, u32, &'static str), Vec<&ClassificationMatrix>> =
        BTreeMap::new();
    for pt in points {
        cells
            .entry((pt.density, (pt.p * 100.0).round() as u32, pt.mode.label()))
            .or_default()
            .push(&pt.matrix);
    }
    let mut s = String::from(
        "density,p,mode,runs,mean_cases,tn_rate,fp_rate,fn_rate,tp_rate,unresolved_rate\n",
    );
    for ((density, p100, mode), group) in cells {
        let n = group.len() as f64;
        let mean = |f: &dyn Fn(&ClassificationMatrix) -> f64| {
            group.iter().map(|m| f(m)).sum::<f64>() / n
        };
        s.push_str(&format!(
            "{},{:.2},{},{},{:.1},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            density,
            f64::from(p100) / 100.0,
            mode,
            group.len(),
            mean(&|m| m.total() as f64),
            mean(&|m| m.tn_rate()),
            mean(&|m| m.fp_rate()),
            mean(&|m| m.fn_rate()),
            mean(&|m| m.tp_rate()),
            mean(&|m| m.unresolved_rate()),
        ));
    }
    s
}

/// Overhead and responsiveness of one protocol-comparison run.
#[derive(Clone, Debug)]
pub struct ComparePoint {
    pub density: usize,
    pub mode: ProtocolMode,
    /// Decision timer for baseline runs; 0 for the proposed protocol.
    pub timer_s: f64,
    pub seed: u64,
    pub transmissions: u64,
    pub bytes: u64,
    pub decisions: usize,
    pub mean_latency_s: Option<f64>,
}

impl ComparePoint {
    pub fn protocol_label(&self) -> String {
        match self.mode {
            ProtocolMode::Proposed => "proposed".to_string(),
            ProtocolMode::Baseline => format!("baseline-t{:.0}", self.timer_s),
        }
    }
}

/// Runs the protocol comparison: the proposed protocol plus one baseline
/// variant per decision timer, across densities and seeds.
pub fn compare_fig6(
    densities: &[usize],
    timers_s: &[f64],
    seeds: &[u64],
) -> Result<Vec<ComparePoint>, RunError> {
    let mut jobs = Vec::new();
    let mut keys = Vec::new();
    for &density in densities {
        for &seed in seeds {
            jobs.push(Job {
                cfg: presets::fig6(density, ProtocolMode::Proposed, 30.0),
                seed,
            });
            keys.push((density, ProtocolMode::Proposed, 0.0, seed));
            for &timer in timers_s {
                jobs.push(Job {
                    cfg: presets::fig6(density, ProtocolMode::Baseline, timer),
                    seed,
                });
                keys.push((density, ProtocolMode::Baseline, timer, seed));
            }
        }
    }
    let measured = map_jobs_checked(&jobs, |out| {
        (
            metrics::overhead(out),
            metrics::decision_latencies_s(out).len(),
            metrics::mean_decision_latency_s(out),
        )
    })?;
    Ok(keys
        .into_iter()
        .zip(measured)
        .map(
            |((density, mode, timer_s, seed), (overhead, decisions, mean_latency_s))| {
                ComparePoint {
                    density,
                    mode,
                    timer_s,
                    seed,
                    transmissions: overhead.transmissions,
                    bytes: overhead.bytes,
                    decisions,
                    mean_latency_s,
                }
            },
        )
        .collect())
}

pub fn compare_csv(points: &[ComparePoint]) -> String {
    let mut s =
        String::from("density,protocol,seed,transmissions,bytes,decisions,mean_latency_s\n");
    for pt in points {
        let latency = pt
            .mean_latency_s
            .map(|v| format!("{v:.4}"))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            pt.density,
            pt.protocol_label(),
            pt.seed,
            pt.transmissions,
            pt.bytes,
            pt.decisions,
            latency,
        ));
    }
    s
}

/// Mean transmissions and latency per (density, protocol) cell.
pub fn compare_summary_csv(points: &[ComparePoint]) -> String {
    let mut cells: BTreeMap<(usize, String), Vec<&ComparePoint>> = BTreeMap::new();
    for pt in points {
        cells
            .entry((pt.density, pt.protocol_label()))
            .or_default()
            .push(pt);
    }
    let mut s = String::from(
        "density,protocol,runs,mean_transmissions,mean_bytes,mean_latency_s\n",
    );
    for ((density, protocol), group) in cells {
        let n = group.len() as f64;
        let tx = group.iter().map(|p| p.transmissions as f64).sum::<f64>() / n;
        let bytes = group.iter().map(|p| p.bytes as f64).sum::<f64>() / n;
        let lat: Vec<f64> = group.iter().filter_map(|p| p.mean_latency_s).collect();
        let lat_cell = if lat.is_empty() {
            String::new()
        } else {
            format!("{:.4}", lat.iter().sum::<f64>() / lat.len() as f64)
        };
        s.push_str(&format!(
            "{},{},{},{:.1},{:.1},{}\n",
            density,
            protocol,
            group.len(),
            tx,
            bytes,
            lat_cell,
        ));
    }
    s
}

/// Runs the scripted verification trace.
pub fn trace_fig4(seed: u64) -> Result<RunOutput, ScenarioError> {
    run_scenario(&presets::fig4(), seed)
}
