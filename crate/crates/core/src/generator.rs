//! Pointwise generators of horizontal Lévy processes and their projections,
//! with a Monte Carlo weak-error check.
//!
//! Derivatives along `H_i` are central differences of the test function
//! along `exp(±h H_{e_i})`; second derivatives nest two such differences.
//! On the sphere with `a = c I` and `b = 0` the diffusion part reduces to
//! `c/2` times the Laplace–Beltrami operator (for orthonormal `v`), which
//! the weak test exercises.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{flow_exp, geodesic_exp, ChartPoint, FramePoint, ManifoldSpec, DEFAULT_STEPS};
use crate::levy::{JumpMeasureSpec, LevyTriplet};
use crate::manifolds::{parse_number, HolonomySpec};
use crate::marcus::{simulate_path, SimulationConfig};
use crate::rng::aux_stream;
use crate::scalar::{dot, norm, Real};
use crate::stats::mean_and_se;

pub type PointFn<T> = Arc<dyn Fn(&ChartPoint<T>) -> Result<T> + Send + Sync>;

/// Smooth test function on the manifold.
#[derive(Clone)]
pub struct TestFunction<T> {
    pub name: String,
    pub eval: PointFn<T>,
}

impl<T: Real> std::fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction").field("name", &self.name).finish()
    }
}

fn chart0_coordinates<T: Real>(m: &ManifoldSpec<T>, p: &ChartPoint<T>) -> Result<Vec<T>> {
    m.express_in(p, 0).map(|q| q.x).ok_or(Error::ChartCoverage {
        chart: 0,
        x: crate::scalar::to_f64_vec(&p.x),
    })
}

/// `exp(1 − 1/(1 − s))` for `s < 1`, else 0.
fn bump_profile<T: Real>(s: T) -> T {
    if s >= T::one() {
        T::zero()
    } else {
        (T::one() - T::one() / (T::one() - s)).exp()
    }
}

impl<T: Real> TestFunction<T> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&ChartPoint<T>) -> Result<T> + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn constant(c: T) -> Self {
        Self::new("constant", move |_| Ok(c))
    }

    /// Built-ins: `coordinate:<k>` and `sq_norm` in chart-0 coordinates,
    /// `bump:<c_1,…,c_n,width>` around an ambient point (chart-0 coordinates
    /// when the manifold has no embedding).
    pub fn parse(manifold: &ManifoldSpec<T>, spec: &str) -> Result<Self> {
        let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
        let m = manifold.clone();
        match kind {
            "coordinate" => {
                let k: usize = args
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coordinate index in '{spec}'")))?;
                if k >= manifold.dim {
                    return Err(Error::InvalidParameter(format!("coordinate {k} out of range")));
                }
                Ok(Self::new(spec, move |p| Ok(chart0_coordinates(&m, p)?[k])))
            }
            "sq_norm" => Ok(Self::new(spec, move |p| {
                Ok(chart0_coordinates(&m, p)?.iter().map(|&v| v * v).sum())
            })),
            "bump" => {
                let nums = args
                    .split(',')
                    .map(|s| parse_number(s.trim()).map(T::c))
                    .collect::<Result<Vec<T>>>()?;
                let (width, center) = nums
                    .split_last()
                    .ok_or_else(|| Error::Parse(format!("bump needs a centre and a width: '{spec}'")))?;
                let (width, center) = (*width, center.to_vec());
                let ambient = manifold.embedding.as_ref().map_or(manifold.dim, |e| e.ambient_dim);
                if center.len() != ambient || !(width > T::zero()) {
                    return Err(Error::InvalidParameter(format!(
                        "bump centre must have {ambient} entries and a positive width"
                    )));
                }
                Ok(Self::new(spec, move |p| {
                    let y = match m.to_ambient(p) {
                        Some(a) => a,
                        None => chart0_coordinates(&m, p)?,
                    };
                    let r2: T = y.iter().zip(&center).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
                    Ok(bump_profile(r2 / (width * width)))
                }))
            }
            _ => Err(Error::Parse(format!("unknown test function '{spec}'"))),
        }
    }

    pub fn at(&self, p: &ChartPoint<T>) -> Result<T> {
        (self.eval)(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum JumpQuadrature {
    /// Exact sum over point masses; falls back to Monte Carlo otherwise.
    Atoms,
    MonteCarlo { n: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub jumps: JumpQuadrature,
    /// Step of the central differences along `H_i`.
    pub derivative_step: f64,
    /// RK4 steps for derivative flows.
    pub derivative_ode_steps: usize,
    /// RK4 steps for jump flows and geodesics.
    pub jump_ode_steps: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            jumps: JumpQuadrature::Atoms,
            derivative_step: 1e-4,
            derivative_ode_steps: 8,
            jump_ode_steps: DEFAULT_STEPS,
        }
    }
}

impl QuadratureConfig {
    fn validate(&self) -> Result<()> {
        if !(self.derivative_step > 0.0) || self.derivative_ode_steps == 0 || self.jump_ode_steps == 0 {
            return Err(Error::InvalidParameter("quadrature parameters must be positive".into()));
        }
        if let JumpQuadrature::MonteCarlo { n: 0, .. } = self.jumps {
            return Err(Error::InvalidParameter("monte carlo needs samples".into()));
        }
        Ok(())
    }
}

/// Monte Carlo sample count used when `Atoms` is requested for a measure
/// without atoms.
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

/// Weighted jump points `(x, w)` with `Σ w g(x) ≈ ∫ g dν`.
fn jump_nodes<T: Real>(nu: &JumpMeasureSpec<T>, d: usize, quad: &QuadratureConfig) -> Vec<(Vec<T>, T)> {
    let mc = |n: usize, seed: u64| {
        let mut rng = aux_stream(seed, 7);
        let w = nu.intensity() / T::from_usize_lossy(n);
        (0..n).map(|_| (nu.sample(&mut rng, d), w)).collect()
    };
    match (nu, &quad.jumps) {
        (JumpMeasureSpec::None, _) => Vec::new(),
        (JumpMeasureSpec::PointMasses { atoms }, JumpQuadrature::Atoms) => {
            atoms.iter().map(|a| (a.x.clone(), a.weight)).collect()
        }
        (_, JumpQuadrature::Atoms) => mc(DEFAULT_MC_SAMPLES, 0),
        (_, JumpQuadrature::MonteCarlo { n, seed }) => mc(*n, *seed),
    }
}

fn unit<T: Real>(d: usize, i: usize, s: T) -> Vec<T> {
    let mut e = vec![T::zero(); d];
    e[i] = s;
    e
}

/// Differentiation machinery shared by both generator formulas.
struct Derivatives<'a, T: Real, F> {
    manifold: &'a ManifoldSpec<T>,
    f: F,
    h: T,
    steps: usize,
}

impl<T: Real, F: Fn(&FramePoint<T>) -> Result<T>> Derivatives<'_, T, F> {
    fn shift(&self, v: &FramePoint<T>, i: usize, s: T) -> Result<FramePoint<T>> {
        flow_exp(self.manifold, v, &unit(self.manifold.dim, i, s), self.steps)
    }

    /// `H_i f(v)`.
    fn first(&self, v: &FramePoint<T>, i: usize) -> Result<T> {
        let fp = (self.f)(&self.shift(v, i, self.h)?)?;
        let fm = (self.f)(&self.shift(v, i, -self.h)?)?;
        Ok((fp - fm) / (T::c(2.0) * self.h))
    }

    /// `H_i H_j f(v)`.
    fn second(&self, v: &FramePoint<T>, i: usize, j: usize) -> Result<T> {
        let gp = self.first(&self.shift(v, i, self.h)?, j)?;
        let gm = self.first(&self.shift(v, i, -self.h)?, j)?;
        Ok((gp - gm) / (T::c(2.0) * self.h))
    }

    /// `H_b f + ½ a^{ij} H_i H_j f` and the gradient `(H_i f)_i`.
    fn local_part(&self, triplet: &LevyTriplet<T>, v: &FramePoint<T>) -> Result<(T, Vec<T>)> {
        let d = self.manifold.dim;
        let grad = (0..d).map(|i| self.first(v, i)).collect::<Result<Vec<T>>>()?;
        let mut total = dot(&triplet.b, &grad);
        for i in 0..d {
            for j in 0..d {
                let a = triplet.a[(i, j)];
                if a != T::zero() {
                    total += T::c(0.5) * a * self.second(v, i, j)?;
                }
            }
        }
        Ok((total, grad))
    }
}

fn compensator<T: Real>(x: &[T], grad: &[T]) -> T {
    if norm(x) < T::one() {
        dot(x, grad)
    } else {
        T::zero()
    }
}

/// `L_U f(v) = H_b f + ½ a^{ij} H_i H_j f + ∫ (f(exp(H_x) v) − f(v) − 1(|x|<1) x^i H_i f) ν(dx)`.
pub fn horizontal_generator_apply<T: Real>(
    manifold: &ManifoldSpec<T>,
    triplet: &LevyTriplet<T>,
    f_bundle: impl Fn(&FramePoint<T>) -> Result<T>,
    v: &FramePoint<T>,
    quad: &QuadratureConfig,
) -> Result<T> {
    quad.validate()?;
    let der = Derivatives {
        manifold,
        f: &f_bundle,
        h: T::c(quad.derivative_step),
        steps: quad.derivative_ode_steps,
    };
    let (local, grad) = der.local_part(triplet, v)?;
    let f0 = f_bundle(v)?;
    let mut jump = T::zero();
    for (x, w) in jump_nodes(&triplet.nu, manifold.dim, quad) {
        let end = flow_exp(manifold, v, &x, quad.jump_ode_steps)?;
        jump += w * (f_bundle(&end)? - f0 - compensator(&x, &grad));
    }
    Ok(local + jump)
}

/// `L_X f(p)` evaluated with a frame `v` over `p`; jump endpoints are
/// `Exp_p(v x)`.
pub fn generator_apply<T: Real>(
    manifold: &ManifoldSpec<T>,
    triplet: &LevyTriplet<T>,
    f: &TestFunction<T>,
    p: &ChartPoint<T>,
    v: &FramePoint<T>,
    quad: &QuadratureConfig,
) -> Result<T> {
    quad.validate()?;
    check_over(manifold, p, v)?;
    let f_bundle = |u: &FramePoint<T>| f.at(&u.point());
    let der = Derivatives {
        manifold,
        f: f_bundle,
        h: T::c(quad.derivative_step),
        steps: quad.derivative_ode_steps,
    };
    let (local, grad) = der.local_part(triplet, v)?;
    let f0 = f.at(p)?;
    let base = v.point();
    let mut jump = T::zero();
    for (x, w) in jump_nodes(&triplet.nu, manifold.dim, quad) {
        let end = geodesic_exp(manifold, &base, &v.apply(&x), quad.jump_ode_steps)?;
        jump += w * (f.at(&end)? - f0 - compensator(&x, &grad));
    }
    Ok(local + jump)
}

fn check_over<T: Real>(manifold: &ManifoldSpec<T>, p: &ChartPoint<T>, v: &FramePoint<T>) -> Result<()> {
    let gap = manifold.distance(p, &v.point()).map_or(f64::INFINITY, |d| d.as_f64());
    if !(gap <= 1e-8) {
        return Err(Error::InvalidParameter(format!("frame is not over the point (gap {gap:e})")));
    }
    Ok(())
}

/// `½ ∫ (f(Exp_p(y)) − 2 f(p) + f(Exp_p(−y))) ν_p(dy)` with `ν_p = v_* ν`.
pub fn symmetric_jump_generator<T: Real>(
    manifold: &ManifoldSpec<T>,
    holonomy: &HolonomySpec<T>,
    nu: &JumpMeasureSpec<T>,
    f: &TestFunction<T>,
    p: &ChartPoint<T>,
    v: &FramePoint<T>,
    quad: &QuadratureConfig,
) -> Result<T> {
    quad.validate()?;
    if !holonomy.contains_negative_identity() {
        return Err(Error::SymmetryPrecondition);
    }
    check_over(manifold, p, v)?;
    let f0 = f.at(p)?;
    let base = v.point();
    let mut total = T::zero();
    for (x, w) in jump_nodes(nu, manifold.dim, quad) {
        let y = v.apply(&x);
        let minus: Vec<T> = y.iter().map(|&c| -c).collect();
        let fp = f.at(&geodesic_exp(manifold, &base, &y, quad.jump_ode_steps)?)?;
        let fm = f.at(&geodesic_exp(manifold, &base, &minus, quad.jump_ode_steps)?)?;
        total += w * T::c(0.5) * (fp - T::c(2.0) * f0 + fm);
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakErrorReport {
    pub t: f64,
    pub n_paths: usize,
    pub stopped: usize,
    /// `(Ê f(X_t) − f(p)) / t` over the paths that reached `t`.
    pub estimate: f64,
    pub std_error: f64,
    pub generator_value: f64,
    pub discrepancy: f64,
    /// More than 1% stopped paths invalidates the estimate.
    pub valid: bool,
}

/// Simulates `n_paths` paths from `v` up to `t_small` and compares the
/// difference quotient with [`generator_apply`]. The invariance gate is the
/// caller's responsibility (see [`crate::marcus::invariance_gate`]).
#[allow(clippy::too_many_arguments)]
pub fn weak_error_test<T: Real>(
    manifold: &ManifoldSpec<T>,
    triplet: &LevyTriplet<T>,
    f: &TestFunction<T>,
    v: &FramePoint<T>,
    t_small: T,
    n_paths: usize,
    config: &SimulationConfig,
    quad: &QuadratureConfig,
    seed: u64,
) -> Result<WeakErrorReport> {
    if !(t_small > T::zero()) || n_paths < 2 {
        return Err(Error::InvalidParameter("weak test needs t > 0 and at least two paths".into()));
    }
    let p = v.point();
    let f0 = f.at(&p)?;
    let generator_value = generator_apply(manifold, triplet, f, &p, v, quad)?.as_f64();
    let samples: Vec<Option<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let sim = simulate_path(manifold, triplet, v, t_small, config, seed, i)?;
            if sim.u.stopped_at.is_some() {
                return Ok(None);
            }
            Ok(Some((f.at(sim.x.last())? - f0).as_f64()))
        })
        .collect::<Result<_>>()?;
    let ok: Vec<f64> = samples.iter().flatten().map(|d| d / t_small.as_f64()).collect();
    let stopped = n_paths - ok.len();
    let (estimate, std_error) = mean_and_se(&ok);
    Ok(WeakErrorReport {
        t: t_small.as_f64(),
        n_paths,
        stopped,
        estimate,
        std_error,
        generator_value,
        discrepancy: estimate - generator_value,
        valid: stopped * 100 <= n_paths,
    })
}

/// Weak tests at several `t` with the bound `|discrepancy| ≤ 3·SE + C·t`,
/// `C ≥ 0` fitted by least squares through the origin weighted by `1/SE²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakErrorSweep {
    pub reports: Vec<WeakErrorReport>,
    pub c_fit: f64,
    /// `3·SE + C·t` per report.
    pub bounds: Vec<f64>,
    pub passed: bool,
}

/// Runs [`weak_error_test`] for every `t` in `ts` with seed `seed + k`.
/// With `grid_fraction = Some(k)` the grid step is `t / k`, otherwise the
/// step of `config` is used.
#[allow(clippy::too_many_arguments)]
pub fn weak_error_sweep<T: Real>(
    manifold: &ManifoldSpec<T>,
    triplet: &LevyTriplet<T>,
    f: &TestFunction<T>,
    v: &FramePoint<T>,
    ts: &[T],
    n_paths: usize,
    config: &SimulationConfig,
    grid_fraction: Option<usize>,
    quad: &QuadratureConfig,
    seed: u64,
) -> Result<WeakErrorSweep> {
    if ts.is_empty() || grid_fraction == Some(0) {
        return Err(Error::InvalidParameter("sweep needs times and a positive grid fraction".into()));
    }
    let mut reports = Vec::with_capacity(ts.len());
    for (k, &t) in ts.iter().enumerate() {
        let mut cfg = config.clone();
        if let Some(frac) = grid_fraction {
            cfg.grid_step = t.as_f64() / frac as f64;
        }
        let s = seed.wrapping_add(k as u64);
        reports.push(weak_error_test(manifold, triplet, f, v, t, n_paths, &cfg, quad, s)?);
    }
    let weight = |r: &WeakErrorReport| 1.0 / r.std_error.max(1e-300).powi(2);
    let num: f64 = reports.iter().map(|r| weight(r) * r.t * r.discrepancy.abs()).sum();
    let den: f64 = reports.iter().map(|r| weight(r) * r.t * r.t).sum();
    let c_fit = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    let bounds: Vec<f64> = reports.iter().map(|r| 3.0 * r.std_error + c_fit * r.t).collect();
    let passed = reports
        .iter()
        .zip(&bounds)
        .all(|(r, &b)| r.valid && r.discrepancy.abs() <= b);
    Ok(WeakErrorSweep {
        reports,
        c_fit,
        bounds,
        passed,
    })
}
