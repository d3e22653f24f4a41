pub mod generator_test;
pub mod holonomy;
pub mod invariance;
pub mod roundtrip;
pub mod simulate;

use manifold_levy::levy::InvarianceReport;
use manifold_levy::marcus::invariance_gate;

use crate::config::Experiment;
use crate::CliError;

/// Runs the holonomy invariance gate for simulation-based commands.
pub fn gate(exp: &Experiment) -> Result<Option<InvarianceReport>, CliError> {
    let triplet = exp.triplet()?;
    let report = invariance_gate(&exp.manifold, triplet, &exp.simulation_config()).map_err(CliError::from_core)?;
    if let Some(r) = &report {
        if !r.passed() {
            eprintln!("warning: invariance check failed, continuing on override");
        }
    }
    Ok(report)
}

pub fn status(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}
