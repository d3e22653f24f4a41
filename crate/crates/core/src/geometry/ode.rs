//! Fixed-step integrators on the frame bundle.

use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::{axpy, Real};

use super::{Christoffel, ManifoldSpec};

/// `H_c` at `(x, r)` in chart coordinates: `dx = r c`, `dr = -A(r c) r`
/// with `A(v)^k_l = Γ^k_{jl} v^j`. `r` may have any number of columns; with
/// a single column and `c = [1]` this is the geodesic spray.
pub(crate) fn horizontal_velocity<T: Real>(
    gamma: &Christoffel<T>,
    r: &Matrix<T>,
    c: &[T],
) -> (Vec<T>, Matrix<T>) {
    let v = r.mul_vec(c);
    let dr = gamma.contract(&v).mul(r).scale(-T::one());
    (v, dr)
}

fn field<T: Real>(
    manifold: &ManifoldSpec<T>,
    chart: usize,
    x: &[T],
    r: &Matrix<T>,
    c: &[T],
) -> (Vec<T>, Matrix<T>) {
    let gamma = manifold.christoffel_raw(chart, x);
    horizontal_velocity(&gamma, r, c)
}

/// One classical RK4 step of `H_c` with step `h`, in a fixed chart.
fn rk4_step<T: Real>(
    manifold: &ManifoldSpec<T>,
    chart: usize,
    x: &[T],
    r: &Matrix<T>,
    c: &[T],
    h: T,
) -> (Vec<T>, Matrix<T>) {
    let half = h * T::c(0.5);
    let (k1x, k1r) = field(manifold, chart, x, r, c);
    let (k2x, k2r) = field(manifold, chart, &axpy(half, &k1x, x), &r.add_scaled(half, &k1r), c);
    let (k3x, k3r) = field(manifold, chart, &axpy(half, &k2x, x), &r.add_scaled(half, &k2r), c);
    let (k4x, k4r) = field(manifold, chart, &axpy(h, &k3x, x), &r.add_scaled(h, &k3r), c);
    let sixth = h / T::c(6.0);
    let x_new = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| xi + sixth * (k1x[i] + T::c(2.0) * (k2x[i] + k3x[i]) + k4x[i]))
        .collect();
    let incr = k1r
        .add(&k2r.add(&k3r).scale(T::c(2.0)))
        .add(&k4r)
        .scale(sixth);
    (x_new, r.add(&incr))
}

/// Integrates `u̇ = H_c(u)` over unit time with `steps` RK4 steps, checking
/// for explosion and applying the chart switching rule after every step.
pub(crate) fn integrate_horizontal<T: Real>(
    manifold: &ManifoldSpec<T>,
    chart: usize,
    x: Vec<T>,
    r: Matrix<T>,
    c: &[T],
    steps: usize,
    check_det: bool,
) -> Result<(usize, Vec<T>, Matrix<T>)> {
    let h = T::one() / T::from_usize_lossy(steps.max(1));
    let (mut chart, mut x, mut r) = (chart, x, r);
    if c.iter().all(|&ci| ci == T::zero()) {
        return Ok((chart, x, r));
    }
    for _ in 0..steps.max(1) {
        let (xn, rn) = rk4_step(manifold, chart, &x, &r, c, h);
        manifold.check_explosion(&xn, &rn, check_det)?;
        (chart, x, r) = manifold.switch_chart(chart, xn, rn)?;
    }
    Ok((chart, x, r))
}

/// Explicit midpoint step of `du = H_i(u) dY^i` for a driver increment `dy`,
/// followed by the explosion check and chart switching.
pub(crate) fn midpoint_step<T: Real>(
    manifold: &ManifoldSpec<T>,
    chart: usize,
    x: &[T],
    r: &Matrix<T>,
    dy: &[T],
) -> Result<(usize, Vec<T>, Matrix<T>)> {
    let half = T::c(0.5);
    let (k1x, k1r) = field(manifold, chart, x, r, dy);
    let (k2x, k2r) = field(
        manifold,
        chart,
        &axpy(half, &k1x, x),
        &r.add_scaled(half, &k1r),
        dy,
    );
    let xn: Vec<T> = axpy(T::one(), &k2x, x);
    let rn = r.add(&k2r);
    manifold.check_explosion(&xn, &rn, true)?;
    manifold.switch_chart(chart, xn, rn)
}

/// Implicit midpoint step: the midpoint corrector iterated to a fixed point,
/// starting from the explicit step. Conserves quadratic invariants of the
/// frame flow (such as `det r` for traceless connections). Falls back to the
/// explicit step when the iteration does not contract.
pub(crate) fn implicit_midpoint_step<T: Real>(
    manifold: &ManifoldSpec<T>,
    chart: usize,
    x: &[T],
    r: &Matrix<T>,
    dy: &[T],
    max_iter: usize,
) -> Result<(usize, Vec<T>, Matrix<T>)> {
    let half = T::c(0.5);
    let (k1x, k1r) = field(manifold, chart, x, r, dy);
    let (k2x, k2r) = field(manifold, chart, &axpy(half, &k1x, x), &r.add_scaled(half, &k1r), dy);
    let explicit = (axpy(T::one(), &k2x, x), r.add(&k2r));
    let (mut xn, mut rn) = explicit.clone();
    let scale = T::one() + x.iter().fold(r.max_abs(), |m, v| m.max(v.abs()));
    let tol = T::c(1e-14) * scale;
    let mut last = T::infinity();
    let mut converged = false;
    for _ in 0..max_iter {
        let xm: Vec<T> = x.iter().zip(&xn).map(|(&a, &b)| half * (a + b)).collect();
        let rm = r.add(&rn).scale(half);
        let (kx, kr) = field(manifold, chart, &xm, &rm, dy);
        let x_next = axpy(T::one(), &kx, x);
        let r_next = r.add(&kr);
        let change = x_next
            .iter()
            .zip(&xn)
            .fold(r_next.sub(&rn).max_abs(), |m, (&a, &b)| m.max((a - b).abs()));
        xn = x_next;
        rn = r_next;
        if !(change < last) && change > tol {
            break;
        }
        last = change;
        if change <= tol {
            converged = true;
            break;
        }
    }
    if !converged || !rn.is_finite() {
        (xn, rn) = explicit;
    }
    manifold.check_explosion(&xn, &rn, true)?;
    manifold.switch_chart(chart, xn, rn)
}
