use manifold_levy::manifolds::holonomy::rotation_angle;
use manifold_levy::manifolds::{holonomy_estimate, HolonomyKind, HolonomySpec, LoopFamily, CLOSURE_LIMIT};
use manifold_levy::Matrix;
use serde::Serialize;

use super::status;
use crate::config::{Experiment, LoopKind};
use crate::output::Output;
use crate::CliError;

#[derive(Serialize)]
struct LoopReport {
    index: usize,
    transport: Matrix<f64>,
    /// Distance to the nearest element of the declared group.
    distance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
}

#[derive(Serialize)]
struct HolonomyReport {
    manifold: String,
    declared: HolonomyKind,
    base: Vec<f64>,
    tolerance: f64,
    loops: Vec<LoopReport>,
    passed: bool,
}

/// Distance from `m` to the declared group. Finite groups are enumerated,
/// dense cyclic groups are probed through the powers `g^k`, `|k| ≤ 64`, and
/// SO(d) is tested through orthogonality and the determinant.
fn distance_to_group(spec: &HolonomySpec<f64>, m: &Matrix<f64>) -> f64 {
    let d = m.rows();
    let id = Matrix::identity(d);
    let nearest = |elems: &[Matrix<f64>]| {
        elems
            .iter()
            .map(|g| m.sub(g).frobenius_norm())
            .fold(f64::INFINITY, f64::min)
    };
    match &spec.description {
        HolonomyKind::Trivial => m.sub(&id).frobenius_norm(),
        HolonomyKind::FiniteCyclic { .. } | HolonomyKind::Z2Reflection => match spec.closure(CLOSURE_LIMIT, 1e-9) {
            Some(elems) => nearest(&elems),
            None => f64::INFINITY,
        },
        HolonomyKind::DenseCyclic { .. } => {
            let g = &spec.generators[0];
            let gi = g.inverse().expect("invertible generator");
            let mut powers = vec![id.clone()];
            let (mut up, mut down) = (id.clone(), id);
            for _ in 0..64 {
                up = up.mul(g);
                down = down.mul(&gi);
                powers.push(up.clone());
                powers.push(down.clone());
            }
            nearest(&powers)
        }
        HolonomyKind::SpecialOrthogonal { .. } => {
            let orth = m.transpose().mul(m).sub(&Matrix::identity(d)).frobenius_norm();
            let det = (m.det() - 1.0).abs();
            orth.max(det)
        }
    }
}

fn kind_label(kind: &HolonomyKind) -> &'static str {
    match kind {
        HolonomyKind::Trivial => "trivial",
        HolonomyKind::FiniteCyclic { .. } => "finite_cyclic",
        HolonomyKind::Z2Reflection => "z2_reflection",
        HolonomyKind::SpecialOrthogonal { .. } => "special_orthogonal",
        HolonomyKind::DenseCyclic { .. } => "dense_cyclic",
    }
}

pub fn run(exp: &Experiment, out: &Output) -> Result<bool, CliError> {
    let spec = exp
        .holonomy
        .as_ref()
        .ok_or_else(|| CliError::Config("holonomy needs a catalog manifold".into()))?;
    let block = &exp.config.holonomy;
    let base = exp.holonomy_base()?;
    let family = match block.loops {
        LoopKind::Generators => LoopFamily::Generators,
        LoopKind::Wraps => LoopFamily::Wraps,
        LoopKind::OctantTriangle => LoopFamily::OctantTriangle,
    };
    let lattice = ["torus", "klein_bottle"].iter().any(|n| exp.manifold.name.starts_with(n));
    let n_loops = block.n_loops.unwrap_or(match block.loops {
        LoopKind::Wraps => 3,
        LoopKind::Generators if lattice => exp.manifold.dim,
        _ => 1,
    });
    let transports = holonomy_estimate(&exp.manifold, &base, &family, n_loops).map_err(CliError::from_core)?;
    let loops: Vec<LoopReport> = transports
        .into_iter()
        .enumerate()
        .map(|(index, t)| LoopReport {
            index,
            distance: distance_to_group(spec, &t),
            angle: (t.rows() == 2 && t.det() > 0.0).then(|| rotation_angle(&t)),
            transport: t,
        })
        .collect();
    let passed = loops.iter().all(|l| l.distance <= block.tolerance);
    let report = HolonomyReport {
        manifold: exp.manifold.name.clone(),
        declared: spec.description.clone(),
        base: base.x.clone(),
        tolerance: block.tolerance,
        loops,
        passed,
    };
    out.write_report(&exp.report_name("holonomy.json"), &report)?;
    for l in &report.loops {
        match l.angle {
            Some(a) => println!("loop {}: distance {:.3e}, angle {:.6}", l.index, l.distance, a),
            None => println!("loop {}: distance {:.3e}", l.index, l.distance),
        }
    }
    println!("{}: {}", kind_label(&report.declared), status(passed));
    Ok(passed)
}
