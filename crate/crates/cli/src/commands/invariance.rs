use manifold_levy::levy::{check_invariance_with, InvarianceReport, Outcome};
use manifold_levy::Matrix;
use serde::Serialize;

use crate::config::Experiment;
use crate::output::Output;
use crate::CliError;

#[derive(Serialize)]
struct Report {
    manifold: String,
    seed: u64,
    group: Vec<Matrix<f64>>,
    #[serde(flatten)]
    report: InvarianceReport,
    passed: bool,
    unchecked: bool,
}

fn label(o: Outcome) -> &'static str {
    match o {
        Outcome::Pass => "PASS",
        Outcome::Fail => "FAIL",
        Outcome::Unchecked => "UNCHECKED",
    }
}

pub fn run(exp: &Experiment, out: &Output) -> Result<bool, CliError> {
    let group = match &exp.config.invariance.group {
        Some(g) => g.clone(),
        None => exp.manifold.holonomy_generators.clone().unwrap_or_default(),
    };
    let cfg = exp.simulation_config().invariance;
    let report = check_invariance_with(exp.triplet()?, &group, &cfg).map_err(CliError::from_core)?;
    println!("{:>7} {:>10} {:>10} {:>10}", "element", "a", "nu", "b");
    for e in &report.elements {
        println!(
            "{:>7} {:>10} {:>10} {:>10}",
            e.index,
            label(e.a.outcome),
            label(e.nu.outcome),
            label(e.b.outcome)
        );
    }
    let passed = report.passed();
    let unchecked = report.has_unchecked();
    let overall = match (passed, unchecked) {
        (false, _) => "FAIL",
        (true, true) => "UNCHECKED",
        (true, false) => "PASS",
    };
    println!("invariance: {overall}");
    out.write_report(
        &exp.report_name("invariance.json"),
        &Report {
            manifold: exp.manifold.name.clone(),
            seed: exp.seed,
            group,
            report,
            passed,
            unchecked,
        },
    )?;
    Ok(passed)
}
