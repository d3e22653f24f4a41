#![allow(dead_code)]

use manifold_levy::geometry::{ChartPoint, FramePoint, ManifoldSpec};
use manifold_levy::manifolds::build;
use manifold_levy::Matrix;

pub const CATALOG: &[&str] = &[
    "flat:2",
    "torus:2",
    "klein_bottle:2",
    "klein_bottle:3",
    "sphere:2",
    "sphere:3",
    "cylinder:0.5",
    "cylinder:1/3",
    "lie:so3",
    "lie:heisenberg",
];

pub fn manifold(name: &str) -> ManifoldSpec<f64> {
    build::<f64>(name).expect("catalog manifold").0
}

/// Point of chart 0 at `center + scale · offset`, `offset ∈ [−1, 1]^d`.
pub fn chart0_point(m: &ManifoldSpec<f64>, offset: &[f64], scale: f64) -> ChartPoint<f64> {
    let region = &m.charts[0].safe_region;
    let r = if region.radius.is_finite() { region.radius } else { 1.0 };
    let s = scale * r / (m.dim as f64).sqrt();
    let x = region.center.iter().zip(offset).map(|(c, o)| c + s * o).collect();
    ChartPoint::new(0, x)
}

/// `I + s A` with `A` from `entries`, rejected by the caller when nearly singular.
pub fn near_identity(d: usize, entries: &[f64], s: f64) -> Matrix<f64> {
    let mut m = Matrix::identity(d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] += s * entries[i * d + j];
        }
    }
    m
}

pub fn frame(m: &ManifoldSpec<f64>, offset: &[f64], entries: &[f64]) -> FramePoint<f64> {
    let p = chart0_point(m, offset, 0.3);
    FramePoint::new(p.chart, p.x, near_identity(m.dim, entries, 0.3))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
