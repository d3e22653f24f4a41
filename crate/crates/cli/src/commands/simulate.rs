use std::io::Write;

use manifold_levy::io::{write_bundle_jsonl, write_euclid_csv, write_euclid_jsonl, write_manifold_csv, write_manifold_jsonl};
use manifold_levy::levy::InvarianceReport;
use manifold_levy::marcus::{simulate_path, Simulation};
use rayon::prelude::*;
use serde::Serialize;

use super::gate;
use crate::config::Experiment;
use crate::output::Output;
use crate::CliError;

/// Paths simulated in parallel before being written out.
const CHUNK: usize = 256;

#[derive(Serialize)]
struct StopRecord {
    path: usize,
    time: f64,
    reason: String,
}

#[derive(Serialize)]
struct SimulateReport {
    manifold: String,
    seed: u64,
    n_paths: usize,
    horizon: f64,
    grid_step: f64,
    invariance: Option<InvarianceReport>,
    jump_counts: Vec<usize>,
    total_jumps: usize,
    stopped: Vec<StopRecord>,
    terminal: Vec<Vec<f64>>,
}

/// Runs `f` on every path of the experiment in index order, simulating
/// chunks in parallel.
pub fn for_each_path(
    exp: &Experiment,
    mut f: impl FnMut(usize, Simulation<f64>) -> Result<(), CliError>,
) -> Result<(), CliError> {
    let triplet = exp.triplet()?;
    let cfg = exp.simulation_config();
    let u0 = exp.start_frame()?;
    let n = exp.config.n_paths;
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let sims: Vec<Simulation<f64>> = (start..end)
            .into_par_iter()
            .map(|i| simulate_path(&exp.manifold, triplet, &u0, exp.config.horizon, &cfg, exp.seed, i))
            .collect::<Result<_, _>>()
            .map_err(CliError::from_core)?;
        for (k, sim) in sims.into_iter().enumerate() {
            f(start + k, sim)?;
        }
    }
    Ok(())
}

pub fn run(exp: &Experiment, out: &Output) -> Result<bool, CliError> {
    let invariance = gate(exp)?;
    let mut report = SimulateReport {
        manifold: exp.manifold.name.clone(),
        seed: exp.seed,
        n_paths: exp.config.n_paths,
        horizon: exp.config.horizon,
        grid_step: exp.config.grid_step,
        invariance,
        jump_counts: Vec::new(),
        total_jumps: 0,
        stopped: Vec::new(),
        terminal: Vec::new(),
    };
    for_each_path(exp, |i, sim| {
        report.jump_counts.push(sim.u.jumps.len());
        report.total_jumps += sim.u.jumps.len();
        if let Some(s) = &sim.u.stopped_at {
            report.stopped.push(StopRecord {
                path: i,
                time: s.time,
                reason: s.reason.clone(),
            });
        }
        let last = sim.x.last();
        report.terminal.push(
            exp.manifold
                .to_ambient(last)
                .unwrap_or_else(|| last.x.clone()),
        );
        if out.paths {
            out.write_with(&format!("paths/x_{i:04}.jsonl"), |w| write_manifold_jsonl(&sim.x, w))?;
            out.write_with(&format!("paths/u_{i:04}.jsonl"), |w| write_bundle_jsonl(&sim.u, w))?;
            out.write_with(&format!("paths/y_{i:04}.jsonl"), |w| write_euclid_jsonl(&sim.y, w))?;
            if out.csv {
                out.write_with(&format!("paths/x_{i:04}.csv"), |w| write_manifold_csv(&sim.x, w))?;
                out.write_with(&format!("paths/y_{i:04}.csv"), |w| write_euclid_csv(&sim.y, w))?;
            }
        }
        Ok(())
    })?;
    let name = exp.report_name("simulate.json");
    out.write_report(&name, &report)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "simulate {}: {} paths, {} jumps, {} stopped",
        report.manifold,
        report.n_paths,
        report.total_jumps,
        report.stopped.len()
    )
    .map_err(anyhow::Error::from)?;
    Ok(true)
}
