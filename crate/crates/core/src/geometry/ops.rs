use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{add, axpy, sub, to_f64_vec, Real};

use super::ode::{horizontal_velocity, integrate_horizontal};
use super::{ChartPoint, Christoffel, Curve, FramePoint, ManifoldSpec, TangentAtFrame};

/// `Γ^k_{ij}(x)` in chart `chart`.
pub fn christoffel_at<T: Real>(
    manifold: &ManifoldSpec<T>,
    chart: usize,
    x: &[T],
) -> Result<Christoffel<T>> {
    let c = manifold.chart(chart)?;
    if x.len() != manifold.dim || !c.safe_region.contains(x) {
        return Err(Error::ChartDomain {
            chart,
            x: to_f64_vec(x),
        });
    }
    Ok(manifold.christoffel_raw(chart, x))
}

fn check_steps(steps: usize) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    Ok(())
}

/// Geodesic exponential `Exp_p(v)`, integrated as the flow of the geodesic
/// spray over unit time with `steps` RK4 steps.
pub fn geodesic_exp<T: Real>(
    manifold: &ManifoldSpec<T>,
    p: &ChartPoint<T>,
    v: &[T],
    steps: usize,
) -> Result<ChartPoint<T>> {
    check_steps(steps)?;
    christoffel_at(manifold, p.chart, &p.x)?;
    let col = Matrix::column_vector(v);
    let (chart, x, _) =
        integrate_horizontal(manifold, p.chart, p.x.clone(), col, &[T::one()], steps, false)?;
    Ok(ChartPoint::new(chart, x))
}

/// Flow exponential `exp(H_c)(u)`: time one flow of the horizontal field `H_c`.
pub fn flow_exp<T: Real>(
    manifold: &ManifoldSpec<T>,
    u: &FramePoint<T>,
    c: &[T],
    steps: usize,
) -> Result<FramePoint<T>> {
    check_steps(steps)?;
    christoffel_at(manifold, u.chart, &u.x)?;
    let (chart, x, r) =
        integrate_horizontal(manifold, u.chart, u.x.clone(), u.r.clone(), c, steps, true)?;
    Ok(FramePoint::new(chart, x, r))
}

/// `H_e(u)` in chart coordinates.
pub fn horizontal_field<T: Real>(
    manifold: &ManifoldSpec<T>,
    u: &FramePoint<T>,
    e: &[T],
) -> Result<TangentAtFrame<T>> {
    let gamma = christoffel_at(manifold, u.chart, &u.x)?;
    let (dx, dr) = horizontal_velocity(&gamma, &u.r, e);
    Ok(TangentAtFrame { dx, dr })
}

/// `‖exp(H_c)(u) − u − H_c(u)‖`, the remainder of the first order expansion.
pub fn taylor_remainder<T: Real>(
    manifold: &ManifoldSpec<T>,
    u: &FramePoint<T>,
    c: &[T],
    steps: usize,
) -> Result<T> {
    let h = horizontal_field(manifold, u, c)?;
    let end = flow_exp(manifold, u, c, steps)?;
    let end = if end.chart == u.chart {
        end
    } else {
        let (p, r) = chart_transition(manifold, &end.point(), u.chart, Some(&end.r))?;
        FramePoint::new(p.chart, p.x, r.expect("frame supplied"))
    };
    let ex = sub(&sub(&end.x, &u.x), &h.dx);
    let er = end.r.sub(&u.r).sub(&h.dr);
    let sq = ex.iter().map(|&v| v * v).sum::<T>() + er.frobenius_norm().powi(2);
    Ok(sq.sqrt())
}

/// Moves `p` to chart `to_chart` through the declared transition, carrying an
/// optional frame by the transition Jacobian.
pub fn chart_transition<T: Real>(
    manifold: &ManifoldSpec<T>,
    p: &ChartPoint<T>,
    to_chart: usize,
    frame: Option<&Matrix<T>>,
) -> Result<(ChartPoint<T>, Option<Matrix<T>>)> {
    let from = manifold.chart(p.chart)?;
    manifold.chart(to_chart)?;
    if !from.safe_region.contains(&p.x) {
        return Err(Error::ChartDomain {
            chart: p.chart,
            x: to_f64_vec(&p.x),
        });
    }
    if to_chart == p.chart {
        return Ok((p.clone(), frame.cloned()));
    }
    let tr = from.transition_to(to_chart).ok_or(Error::NoTransition {
        from: p.chart,
        to: to_chart,
    })?;
    let y = (tr.map)(&p.x);
    if !manifold.charts[to_chart].safe_region.contains(&y) {
        return Err(Error::ChartDomain {
            chart: to_chart,
            x: to_f64_vec(&y),
        });
    }
    let r = frame.map(|f| (tr.jacobian)(&p.x).mul(f));
    Ok((ChartPoint::new(to_chart, y), r))
}

/// Coordinates of `p` in `chart`, allowing one intermediate chart.
pub(crate) fn coordinates_in<T: Real>(manifold: &ManifoldSpec<T>, p: &ChartPoint<T>, chart: usize) -> Result<Vec<T>> {
    if p.chart == chart {
        return Ok(p.x.clone());
    }
    if let Some(q) = manifold.express_in(p, chart) {
        return Ok(q.x);
    }
    for tr in &manifold.chart(p.chart)?.neighbors {
        let mid = ChartPoint::new(tr.to, (tr.map)(&p.x));
        if let Some(q) = manifold.express_in(&mid, chart) {
            return Ok(q.x);
        }
    }
    if let Some(amb) = manifold.to_ambient(p) {
        if let Some(q) = manifold.locate(&amb) {
            if let Some(q) = manifold.express_in(&q, chart) {
                return Ok(q.x);
            }
        }
    }
    Err(Error::ChartCoverage {
        chart,
        x: to_f64_vec(&p.x),
    })
}

/// One RK4 step of the joint system `ṙ = −A(Δx) r`, `ẇ = r^{-1} Δx` along the
/// segment `x(τ) = x0 + τ Δx`, `τ ∈ [0, 1]`.
fn transport_segment<T: Real>(
    manifold: &ManifoldSpec<T>,
    chart: usize,
    x0: &[T],
    dx: &[T],
    r: &Matrix<T>,
    with_w: bool,
) -> Result<(Matrix<T>, Vec<T>)> {
    let half = T::c(0.5);
    let xm = axpy(half, dx, x0);
    let x1 = add(x0, dx);
    let a0 = manifold.christoffel_raw(chart, x0).contract(dx);
    let am = manifold.christoffel_raw(chart, &xm).contract(dx);
    let a1 = manifold.christoffel_raw(chart, &x1).contract(dx);
    let neg = -T::one();
    let k1 = a0.mul(r).scale(neg);
    let r2 = r.add_scaled(half, &k1);
    let k2 = am.mul(&r2).scale(neg);
    let r3 = r.add_scaled(half, &k2);
    let k3 = am.mul(&r3).scale(neg);
    let r4 = r.add_scaled(T::one(), &k3);
    let k4 = a1.mul(&r4).scale(neg);
    let sixth = T::one() / T::c(6.0);
    let incr = k1.add(&k2.add(&k3).scale(T::c(2.0))).add(&k4).scale(sixth);
    let r_new = r.add(&incr);
    let w = if with_w {
        let singular = || Error::Explosion("frame became singular".into());
        let w1 = r.solve(dx).ok_or_else(singular)?;
        let w2 = r2.solve(dx).ok_or_else(singular)?;
        let w3 = r3.solve(dx).ok_or_else(singular)?;
        let w4 = r4.solve(dx).ok_or_else(singular)?;
        (0..dx.len())
            .map(|i| sixth * (w1[i] + T::c(2.0) * (w2[i] + w3[i]) + w4[i]))
            .collect()
    } else {
        Vec::new()
    };
    Ok((r_new, w))
}

struct Transported<T: Real> {
    frames: Vec<FramePoint<T>>,
    w: Vec<Vec<T>>,
}

/// Transports `u` along the coordinate segment to `target` (re-expressed in
/// the chart of `u`), split into `pieces` RK4 steps, then applies the chart
/// switching rule. Returns the new frame and the anti-development increment.
pub(crate) fn transport_step<T: Real>(
    manifold: &ManifoldSpec<T>,
    u: &FramePoint<T>,
    target: &ChartPoint<T>,
    pieces: usize,
    with_w: bool,
) -> Result<(FramePoint<T>, Vec<T>)> {
    let end = coordinates_in(manifold, target, u.chart)?;
    let pieces = pieces.max(1);
    let step = sub(&end, &u.x).into_iter().map(|v| v / T::from_usize_lossy(pieces)).collect::<Vec<_>>();
    let mut x = u.x.clone();
    let mut r = u.r.clone();
    let mut w = vec![T::zero(); manifold.dim];
    for k in 0..pieces {
        let (rn, dw) = transport_segment(manifold, u.chart, &x, &step, &r, with_w)?;
        if with_w {
            w = add(&w, &dw);
        }
        x = if k + 1 == pieces { end.clone() } else { add(&x, &step) };
        r = rn;
    }
    manifold.check_explosion(&x, &r, true)?;
    let (chart, x, r) = manifold.switch_chart(u.chart, x, r)?;
    Ok((FramePoint::new(chart, x, r), w))
}

fn transport_along<T: Real>(
    manifold: &ManifoldSpec<T>,
    curve: &Curve<T>,
    u0: &FramePoint<T>,
    with_w: bool,
) -> Result<Transported<T>> {
    let first = curve
        .points
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty curve".into()))?;
    let x = coordinates_in(manifold, first, u0.chart)?;
    let mut u = FramePoint::new(u0.chart, x, u0.r.clone());
    let mut w = vec![T::zero(); manifold.dim];
    let mut out = Transported {
        frames: vec![u.clone()],
        w: vec![w.clone()],
    };
    for next in &curve.points[1..] {
        let (un, dw) = transport_step(manifold, &u, next, 1, with_w)?;
        if with_w {
            w = add(&w, &dw);
        }
        u = un;
        out.frames.push(u.clone());
        out.w.push(w.clone());
    }
    Ok(out)
}

/// Parallel transport of the frame `r0` (given in the chart of the first
/// sample) along `curve`. Returns the frame at the endpoint, in whichever
/// chart the integration ended in.
pub fn parallel_transport<T: Real>(
    manifold: &ManifoldSpec<T>,
    curve: &Curve<T>,
    r0: &Matrix<T>,
) -> Result<FramePoint<T>> {
    let first = curve
        .points
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty curve".into()))?;
    if r0.det().abs() <= T::c(super::DET_FLOOR) {
        return Err(Error::InvalidParameter("initial frame is singular".into()));
    }
    let u0 = FramePoint::new(first.chart, first.x.clone(), r0.clone());
    let out = transport_along(manifold, curve, &u0, false)?;
    Ok(out.frames.into_iter().last().expect("non-empty"))
}

/// Horizontal lift of `curve` started at `u0`, one frame per sample.
pub fn horizontal_lift_smooth<T: Real>(
    manifold: &ManifoldSpec<T>,
    curve: &Curve<T>,
    u0: &FramePoint<T>,
) -> Result<Vec<FramePoint<T>>> {
    Ok(transport_along(manifold, curve, u0, false)?.frames)
}

/// Anti-development `w_t = ∫ u_s^{-1}(γ̇_s) ds`, one value per sample.
pub fn anti_development_smooth<T: Real>(
    manifold: &ManifoldSpec<T>,
    curve: &Curve<T>,
    u0: &FramePoint<T>,
) -> Result<Vec<Vec<T>>> {
    Ok(transport_along(manifold, curve, u0, true)?.w)
}

/// Transport matrix `τ = r_end r0^{-1}` of a loop, with the end frame carried
/// back into the chart of the base point.
pub fn loop_transport<T: Real>(
    manifold: &ManifoldSpec<T>,
    curve: &Curve<T>,
    r0: &Matrix<T>,
) -> Result<Matrix<T>> {
    let base = curve.points.first().expect("non-empty").clone();
    let end = parallel_transport(manifold, curve, r0)?;
    let r_end = if end.chart == base.chart {
        end.r
    } else {
        let (_, r) = chart_transition(manifold, &end.point(), base.chart, Some(&end.r))?;
        r.expect("frame supplied")
    };
    let inv = r0
        .inverse()
        .ok_or_else(|| Error::InvalidParameter("initial frame is singular".into()))?;
    Ok(r_end.mul(&inv))
}
