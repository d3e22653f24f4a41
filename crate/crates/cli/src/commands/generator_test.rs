use manifold_levy::generator::{weak_error_sweep, TestFunction, WeakErrorSweep};
use manifold_levy::levy::InvarianceReport;
use serde::Serialize;

use super::{gate, status};
use crate::config::Experiment;
use crate::output::Output;
use crate::CliError;

#[derive(Serialize)]
struct GeneratorReport {
    manifold: String,
    seed: u64,
    test_function: String,
    start: Vec<f64>,
    invariance: Option<InvarianceReport>,
    #[serde(flatten)]
    sweep: WeakErrorSweep,
}

pub fn run(exp: &Experiment, out: &Output) -> Result<bool, CliError> {
    let invariance = gate(exp)?;
    let block = &exp.config.generator_test;
    let spec = block
        .test_function
        .as_deref()
        .ok_or_else(|| CliError::Config("generator_test.test_function is required".into()))?;
    let f = TestFunction::parse(&exp.manifold, spec).map_err(CliError::from_core)?;
    let v = exp.start_frame()?;
    let ts = block.t.to_vec();
    if ts.iter().any(|t| !(*t > 0.0)) {
        return Err(CliError::Config("generator_test.t must be positive".into()));
    }
    let n_paths = block.n_paths.unwrap_or(exp.config.n_paths);
    let sweep = weak_error_sweep(
        &exp.manifold,
        exp.triplet()?,
        &f,
        &v,
        &ts,
        n_paths,
        &exp.simulation_config(),
        block.grid_fraction,
        &block.quadrature,
        exp.seed,
    )
    .map_err(CliError::from_core)?;
    println!("{:>10} {:>14} {:>14} {:>12} {:>12}", "t", "estimate", "generator", "|error|", "bound");
    for (r, b) in sweep.reports.iter().zip(&sweep.bounds) {
        println!(
            "{:>10.4} {:>14.6} {:>14.6} {:>12.3e} {:>12.3e}{}",
            r.t,
            r.estimate,
            r.generator_value,
            r.discrepancy.abs(),
            b,
            if r.valid { "" } else { "  (too many stopped paths)" }
        );
    }
    println!("generator: {}", status(sweep.passed));
    let passed = sweep.passed;
    let report = GeneratorReport {
        manifold: exp.manifold.name.clone(),
        seed: exp.seed,
        test_function: spec.to_string(),
        start: v.x.clone(),
        invariance,
        sweep,
    };
    out.write_report(&exp.report_name("generator_test.json"), &report)?;
    Ok(passed)
}
