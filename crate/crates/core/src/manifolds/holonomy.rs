//! Loop families and numerical holonomy probes.

use crate::error::{Error, Result};
use crate::geometry::{loop_transport, ChartPoint, Curve, ManifoldSpec};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Transport steps per probe loop (per wrap for multi-wrap loops).
pub const LOOP_STEPS: usize = 10_000;

#[derive(Clone, Debug)]
pub enum LoopFamily<T> {
    /// One loop per deck generator: unit walks along every lattice axis on
    /// tori and Klein bottles, the θ-loop on cylinders, the octant triangle
    /// on spheres and a coordinate square elsewhere. Loop `i` is generator
    /// `i mod m`.
    Generators,
    /// `k` wraps of the first generator loop for `k = 0, 1, …`.
    Wraps,
    /// Geodesic triangle with three right angles through the base point.
    OctantTriangle,
    /// Explicit curves, used cyclically.
    Curves(Vec<Curve<T>>),
}

fn axis_walk<T: Real>(
    manifold: &ManifoldSpec<T>,
    base: &ChartPoint<T>,
    axis: usize,
    length: T,
    steps: usize,
) -> Result<Curve<T>> {
    let mut delta = vec![T::zero(); manifold.dim];
    delta[axis] = length;
    Curve::straight_walk(manifold, base.clone(), &delta, steps)
}

/// Octant triangle based at the chart centre of a stereographic chart:
/// three quarter great circles meeting at right angles.
fn octant<T: Real>(manifold: &ManifoldSpec<T>, base: &ChartPoint<T>) -> Result<Curve<T>> {
    let d = manifold.dim;
    if d < 2 || !manifold.name.starts_with("sphere") {
        return Err(Error::InvalidParameter(
            "octant triangle needs a sphere of dimension ≥ 2".into(),
        ));
    }
    let q = T::FRAC_PI_4();
    let h = T::FRAC_PI_2();
    let n = LOOP_STEPS / 4;
    let mut e0 = vec![T::zero(); d];
    e0[0] = q;
    let leg1 = Curve::geodesic(manifold, base.clone(), &e0, n, 4)?;
    let mut e1 = vec![T::zero(); d];
    e1[1] = h;
    let leg2 = Curve::geodesic(manifold, leg1.end().clone(), &e1, n, 4)?;
    // back to the base along the meridian through e_1
    let mut e2 = vec![T::zero(); d];
    e2[1] = -h;
    let leg3 = Curve::geodesic(manifold, leg2.end().clone(), &e2, n, 4)?;
    Ok(leg1.concat(&leg2).concat(&leg3))
}

fn generator_loops<T: Real>(manifold: &ManifoldSpec<T>, base: &ChartPoint<T>) -> Result<Vec<Curve<T>>> {
    let name = manifold.name.as_str();
    if name.starts_with("torus") || name.starts_with("klein_bottle") {
        return (0..manifold.dim)
            .map(|a| axis_walk(manifold, base, a, T::one(), LOOP_STEPS))
            .collect();
    }
    if name.starts_with("cylinder") {
        return Ok(vec![axis_walk(manifold, base, 0, T::TAU(), LOOP_STEPS)?]);
    }
    if name.starts_with("sphere") && manifold.dim >= 2 {
        return Ok(vec![octant(manifold, base)?]);
    }
    let side = T::c(0.5);
    let square = (0..4).try_fold(None::<Curve<T>>, |acc, k| {
        let start = acc.as_ref().map(|c| c.end().clone()).unwrap_or_else(|| base.clone());
        let axis = k % 2;
        let sign = if k < 2 { T::one() } else { -T::one() };
        let leg = axis_walk(manifold, &start, axis.min(manifold.dim - 1), sign * side, LOOP_STEPS / 4)?;
        Ok::<_, Error>(Some(match acc {
            Some(c) => c.concat(&leg),
            None => leg,
        }))
    })?;
    Ok(vec![square.expect("four legs")])
}

/// Transport matrices `τ_γ` (in the coordinate basis of the base chart) for
/// `n_loops` loops of the family, all based at `base`.
pub fn holonomy_estimate<T: Real>(
    manifold: &ManifoldSpec<T>,
    base: &ChartPoint<T>,
    loops: &LoopFamily<T>,
    n_loops: usize,
) -> Result<Vec<Matrix<T>>> {
    let r0 = Matrix::identity(manifold.dim);
    let curves: Vec<Curve<T>> = match loops {
        LoopFamily::Generators => generator_loops(manifold, base)?,
        LoopFamily::OctantTriangle => vec![octant(manifold, base)?],
        LoopFamily::Curves(c) => c.clone(),
        LoopFamily::Wraps => {
            let period = if manifold.name.starts_with("cylinder") { T::TAU() } else { T::one() };
            let mut out = Vec::with_capacity(n_loops);
            for k in 0..n_loops {
                if k == 0 {
                    out.push(r0.clone());
                    continue;
                }
                let c = axis_walk(manifold, base, 0, period * T::from_usize_lossy(k), k * LOOP_STEPS)?;
                out.push(loop_transport(manifold, &c, &r0)?);
            }
            return Ok(out);
        }
    };
    if curves.is_empty() {
        return Err(Error::InvalidParameter("empty loop family".into()));
    }
    let mut cache: Vec<Option<Matrix<T>>> = vec![None; curves.len()];
    let mut out = Vec::with_capacity(n_loops);
    for i in 0..n_loops {
        let k = i % curves.len();
        if cache[k].is_none() {
            cache[k] = Some(loop_transport(manifold, &curves[k], &r0)?);
        }
        out.push(cache[k].clone().expect("filled"));
    }
    Ok(out)
}

/// Rotation angle of a 2×2 transport matrix.
pub fn rotation_angle<T: Real>(m: &Matrix<T>) -> T {
    m[(1, 0)].atan2(m[(0, 0)])
}
