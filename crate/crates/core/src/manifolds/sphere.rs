//! Unit sphere `S^d` with the Levi-Civita connection of the round metric,
//! covered by two stereographic charts (0 around the north pole, 1 around
//! the south pole) related by `x ↦ x/|x|²`.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::json::inversion_jacobian;
use crate::geometry::{Chart, ChartPoint, Christoffel, Embedding, ManifoldSpec, SafeRegion, Transition};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const STEREO_RADIUS: f64 = 2.0;

fn invert<T: Real>(x: &[T]) -> Vec<T> {
    let s: T = x.iter().map(|&v| v * v).sum();
    x.iter().map(|&v| v / s).collect()
}

/// `Γ^k_{ij} = δ_ik ∂_jφ + δ_jk ∂_iφ − δ_ij ∂_kφ` for the conformal factor
/// `e^{2φ} = 4/(1+|x|²)²`, the same in both charts.
pub fn stereographic_christoffel<T: Real>(x: &[T]) -> Christoffel<T> {
    let d = x.len();
    let s: T = x.iter().map(|&v| v * v).sum();
    let dphi: Vec<T> = x.iter().map(|&v| -T::c(2.0) * v / (T::one() + s)).collect();
    let mut g = Christoffel::zeros(d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let mut v = T::zero();
                if i == k {
                    v += dphi[j];
                }
                if j == k {
                    v += dphi[i];
                }
                if i == j {
                    v -= dphi[k];
                }
                g.set(k, i, j, v);
            }
        }
    }
    g
}

/// Point of `S^d ⊂ R^{d+1}`; the last ambient axis is the height.
pub fn to_ambient<T: Real>(chart: usize, x: &[T]) -> Vec<T> {
    let s: T = x.iter().map(|&v| v * v).sum();
    let den = T::one() + s;
    let mut p: Vec<T> = x.iter().map(|&v| T::c(2.0) * v / den).collect();
    let h = (T::one() - s) / den;
    p.push(if chart == 0 { h } else { -h });
    p
}

pub fn locate<T: Real>(p: &[T]) -> ChartPoint<T> {
    let d = p.len() - 1;
    let norm = p.iter().map(|&v| v * v).sum::<T>().sqrt();
    let h = p[d] / norm;
    if h >= T::zero() {
        ChartPoint::new(0, p[..d].iter().map(|&v| v / norm / (T::one() + h)).collect())
    } else {
        ChartPoint::new(1, p[..d].iter().map(|&v| v / norm / (T::one() - h)).collect())
    }
}

pub fn sphere<T: Real>(d: usize) -> Result<ManifoldSpec<T>> {
    let mut charts: Vec<Chart<T>> = (0..2)
        .map(|i| Chart::new(i, SafeRegion::ball(vec![T::zero(); d], T::c(STEREO_RADIUS))))
        .collect();
    for (i, chart) in charts.iter_mut().enumerate() {
        chart.neighbors.push(Transition {
            to: 1 - i,
            map: Arc::new(|x: &[T]| invert(x)),
            jacobian: Arc::new(|x: &[T]| inversion_jacobian(x)),
        });
    }
    let spec = ManifoldSpec::new(
        format!("sphere:d={d}"),
        d,
        charts,
        Arc::new(|_, x: &[T]| stereographic_christoffel(x)),
    )?;
    Ok(spec.with_embedding(Embedding {
        ambient_dim: d + 1,
        to_ambient: Arc::new(|c, x: &[T]| to_ambient(c, x)),
        locate: Some(Arc::new(|p: &[T]| Some(locate(p)))),
    }))
}

/// Conformal factor `(1 + |x|²)/2`: multiplying the coordinate frame by it
/// gives an orthonormal frame.
pub fn orthonormal_scale<T: Real>(x: &[T]) -> T {
    (T::one() + x.iter().map(|&v| v * v).sum::<T>()) / T::c(2.0)
}

/// Plane rotations by one radian in each coordinate plane, generating a dense
/// subgroup of `SO(d)`.
pub fn rotation_generators<T: Real>(d: usize) -> Vec<Matrix<T>> {
    if d == 1 {
        return vec![Matrix::identity(1)];
    }
    let mut out = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            out.push(Matrix::plane_rotation(d, i, j, T::one()));
        }
    }
    out
}
