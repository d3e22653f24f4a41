//! Cylinder `S¹ × R` with coordinates `(θ, z)` and the connection
//! `∇_{∂θ}∂θ = −α ∂z`, `∇_{∂θ}∂z = α ∂θ`, all other symbols zero.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::{Chart, ChartPoint, Christoffel, Embedding, ManifoldSpec, SafeRegion, Transition};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Charts are centred at `θ = 0` and `θ = π`; the radius only bounds `θ`.
pub const THETA_RADIUS: f64 = 2.5;

pub fn cylinder_christoffel<T: Real>(alpha: T) -> Christoffel<T> {
    let mut g = Christoffel::zeros(2);
    g.set(1, 0, 0, -alpha);
    g.set(0, 0, 1, alpha);
    g
}

fn wrap_towards<T: Real>(x: &[T], center: T) -> Vec<T> {
    let tau = T::TAU();
    vec![x[0] + ((center - x[0]) / tau).round() * tau, x[1]]
}

pub fn cylinder<T: Real>(alpha: T) -> Result<ManifoldSpec<T>> {
    let centers = [T::zero(), T::PI()];
    let mut charts: Vec<Chart<T>> = centers
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut region = SafeRegion::ball(vec![c, T::zero()], T::c(THETA_RADIUS));
            region.bounded_axes = vec![true, false];
            Chart::new(i, region)
        })
        .collect();
    for (i, chart) in charts.iter_mut().enumerate() {
        let target = centers[1 - i];
        chart.neighbors.push(Transition {
            to: 1 - i,
            map: Arc::new(move |x: &[T]| wrap_towards(x, target)),
            jacobian: Arc::new(|_: &[T]| Matrix::identity(2)),
        });
    }
    let gamma = cylinder_christoffel(alpha);
    let spec = ManifoldSpec::new(
        format!("cylinder:alpha={alpha}"),
        2,
        charts,
        Arc::new(move |_, _| gamma.clone()),
    )?;
    Ok(spec.with_embedding(Embedding {
        ambient_dim: 3,
        to_ambient: Arc::new(|_, x: &[T]| vec![x[0].cos(), x[0].sin(), x[1]]),
        locate: Some(Arc::new(|p: &[T]| {
            let theta = p[1].atan2(p[0]);
            let chart = if theta.abs() <= T::FRAC_PI_2() { 0 } else { 1 };
            let t = if chart == 1 && theta < T::zero() { theta + T::TAU() } else { theta };
            Some(ChartPoint::new(chart, vec![t, p[2]]))
        })),
    }))
}

/// Transport around one θ-loop: `rotation(2πα)`.
pub fn holonomy_generator<T: Real>(alpha: T) -> Matrix<T> {
    Matrix::rotation2(T::TAU() * alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_lands_near_target() {
        let y = wrap_towards(&[-2.0_f64, 5.0], std::f64::consts::PI);
        assert!((y[0] - (std::f64::consts::TAU - 2.0)).abs() < 1e-15);
        assert_eq!(y[1], 5.0);
    }

    #[test]
    fn locate_round_trips() {
        let m = cylinder(0.5_f64).unwrap();
        for (c, th) in [(0, 0.3), (1, 3.0), (1, 4.0)] {
            let p = ChartPoint::new(c, vec![th, -1.5]);
            let q = m.locate(&m.to_ambient(&p).unwrap()).unwrap();
            assert_eq!(q.chart, c);
            assert!((q.x[0] - th).abs() < 1e-12);
        }
    }
}
