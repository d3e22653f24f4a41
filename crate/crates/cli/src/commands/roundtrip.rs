use manifold_levy::io::{write_euclid_jsonl, write_manifold_jsonl};
use manifold_levy::levy::InvarianceReport;
use manifold_levy::lift::{attach_jump_data, frame_sup_distance, jump_data_from_simulation, reconstruct};
use serde::Serialize;

use super::simulate::for_each_path;
use super::{gate, status};
use crate::config::Experiment;
use crate::output::Output;
use crate::CliError;

#[derive(Serialize)]
struct PathError {
    path: usize,
    jumps: usize,
    /// `sup_t |W_t − Y_t|`.
    antidev: f64,
    /// Sup distance between the reconstructed and simulated frames.
    frame: f64,
}

#[derive(Serialize)]
struct RoundtripReport {
    manifold: String,
    seed: u64,
    section: String,
    tolerance: f64,
    invariance: Option<InvarianceReport>,
    paths: Vec<PathError>,
    max_antidev: f64,
    max_frame: f64,
    passed: bool,
}

pub fn run(exp: &Experiment, out: &Output) -> Result<bool, CliError> {
    let invariance = gate(exp)?;
    let q = exp.section()?;
    let lift = &exp.config.roundtrip.lift;
    let m = &exp.manifold;
    let mut paths = Vec::new();
    for_each_path(exp, |i, sim| {
        let data = jump_data_from_simulation(m, &sim.u, &sim.y, &q).map_err(CliError::from_core)?;
        let mut x = sim.x.clone();
        attach_jump_data(&mut x, &data);
        let (u, w) = reconstruct(m, &x, &data, &q, &sim.u.frames[0], lift).map_err(CliError::from_core)?;
        let frame = frame_sup_distance(m, &u, &sim.u).map_err(CliError::from_core)?;
        paths.push(PathError {
            path: i,
            jumps: data.entries.len(),
            antidev: w.sup_distance(&sim.y),
            frame,
        });
        if out.paths {
            out.write_with(&format!("paths/x_{i:04}.jsonl"), |f| write_manifold_jsonl(&x, f))?;
            out.write_with(&format!("paths/w_{i:04}.jsonl"), |f| write_euclid_jsonl(&w, f))?;
        }
        Ok(())
    })?;
    let max_antidev = paths.iter().map(|p| p.antidev).fold(0.0, f64::max);
    let max_frame = paths.iter().map(|p| p.frame).fold(0.0, f64::max);
    let tolerance = exp.config.roundtrip.tolerance;
    let passed = max_antidev <= tolerance && max_frame <= tolerance;
    let report = RoundtripReport {
        manifold: m.name.clone(),
        seed: exp.seed,
        section: q.id.clone(),
        tolerance,
        invariance,
        paths,
        max_antidev,
        max_frame,
        passed,
    };
    out.write_report(&exp.report_name("roundtrip.json"), &report)?;
    println!("sup|W - Y| = {max_antidev:.3e}, frame distance = {max_frame:.3e}");
    println!("roundtrip: {}", status(passed));
    Ok(passed)
}
