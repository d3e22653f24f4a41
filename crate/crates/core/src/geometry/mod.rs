//! Charts, connections and the frame bundle.
//!
//! A manifold is described by an atlas of charts, each with a ball-shaped
//! safe region and explicit transition maps to its neighbours, plus the
//! Christoffel symbols of the connection in every chart. Frames are stored in
//! chart coordinates `u = (x^i, r^k_m)` where column `m` of `r` holds the
//! components of `u e_m` in the coordinate basis `∂_k`.

mod curve;
pub mod json;
mod ode;
mod ops;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{to_f64_vec, Real};

pub use curve::Curve;
pub use ops::{
    anti_development_smooth, chart_transition, christoffel_at, flow_exp, geodesic_exp,
    horizontal_field, horizontal_lift_smooth, loop_transport, parallel_transport, taylor_remainder,
};
pub(crate) use ode::{implicit_midpoint_step, midpoint_step};
pub(crate) use ops::{coordinates_in, transport_step};

/// Default number of integrator steps per unit time.
pub const DEFAULT_STEPS: usize = 256;
/// Default coordinate bound beyond which a solution counts as exploded.
pub const DEFAULT_EXPLOSION_BOUND: f64 = 1e6;
/// Frames with `|det r|` below this are treated as degenerate.
pub const DET_FLOOR: f64 = 1e-12;
/// Fraction of the safe radius at which the integrators look for a better chart.
pub const SWITCH_FRACTION: f64 = 0.8;

pub type PointMap<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;
pub type JacobianMap<T> = Arc<dyn Fn(&[T]) -> Matrix<T> + Send + Sync>;
pub type ChristoffelFn<T> = Arc<dyn Fn(usize, &[T]) -> Christoffel<T> + Send + Sync>;
pub type AmbientFn<T> = Arc<dyn Fn(usize, &[T]) -> Vec<T> + Send + Sync>;
pub type LocateFn<T> = Arc<dyn Fn(&[T]) -> Option<ChartPoint<T>> + Send + Sync>;

/// Ball `|x - c| < ρ`, measured only along the axes flagged as bounded
/// (an unbounded axis such as the height of a cylinder is ignored).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SafeRegion<T> {
    pub center: Vec<T>,
    pub radius: T,
    pub bounded_axes: Vec<bool>,
}

impl<T: Real> SafeRegion<T> {
    pub fn ball(center: Vec<T>, radius: T) -> Self {
        let n = center.len();
        Self {
            center,
            radius,
            bounded_axes: vec![true; n],
        }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::ball(vec![T::zero(); dim], T::infinity())
    }

    pub fn distance(&self, x: &[T]) -> T {
        self.center
            .iter()
            .zip(x)
            .zip(&self.bounded_axes)
            .filter(|(_, &b)| b)
            .map(|((&c, &xi), _)| (xi - c) * (xi - c))
            .sum::<T>()
            .sqrt()
    }

    pub fn margin(&self, x: &[T]) -> T {
        self.radius - self.distance(x)
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter().all(|v| v.is_finite()) && self.distance(x) < self.radius
    }

    pub(crate) fn needs_switch(&self, x: &[T]) -> bool {
        self.distance(x) >= T::c(SWITCH_FRACTION) * self.radius
    }
}

/// Transition from the owning chart to chart `to`.
#[derive(Clone)]
pub struct Transition<T> {
    pub to: usize,
    pub map: PointMap<T>,
    pub jacobian: JacobianMap<T>,
}

impl<T> fmt::Debug for Transition<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transition").field("to", &self.to).finish()
    }
}

#[derive(Clone, Debug)]
pub struct Chart<T> {
    pub id: usize,
    pub dim: usize,
    pub safe_region: SafeRegion<T>,
    pub neighbors: Vec<Transition<T>>,
}

impl<T: Real> Chart<T> {
    pub fn new(id: usize, safe_region: SafeRegion<T>) -> Self {
        Self {
            id,
            dim: safe_region.center.len(),
            safe_region,
            neighbors: Vec::new(),
        }
    }

    pub fn transition_to(&self, to: usize) -> Option<&Transition<T>> {
        self.neighbors.iter().find(|t| t.to == to)
    }
}

/// Christoffel symbols `Γ^k_{ij}` stored as a full `d×d×d` array (no
/// symmetrisation, connections with torsion are allowed).
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> Christoffel<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![T::zero(); dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> T {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: T) {
        self.data[(k * self.dim + i) * self.dim + j] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    /// `A^k_l = Γ^k_{jl} v^j`: the connection matrix along direction `v`.
    pub fn contract(&self, v: &[T]) -> Matrix<T> {
        let d = self.dim;
        let mut a = Matrix::zeros(d, d);
        for k in 0..d {
            for (j, &vj) in v.iter().enumerate() {
                if vj == T::zero() {
                    continue;
                }
                for l in 0..d {
                    a[(k, l)] += self.get(k, j, l) * vj;
                }
            }
        }
        a
    }
}

/// Point of the manifold in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint<T> {
    pub chart: usize,
    pub x: Vec<T>,
}

impl<T: Real> ChartPoint<T> {
    pub fn new(chart: usize, x: Vec<T>) -> Self {
        Self { chart, x }
    }
}

/// Frame `u ∈ F(M)` in chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FramePoint<T: Real> {
    pub chart: usize,
    pub x: Vec<T>,
    pub r: Matrix<T>,
}

impl<T: Real> FramePoint<T> {
    pub fn new(chart: usize, x: Vec<T>, r: Matrix<T>) -> Self {
        Self { chart, x, r }
    }

    /// Frame given by the coordinate basis at `x`.
    pub fn coordinate(chart: usize, x: Vec<T>) -> Self {
        let d = x.len();
        Self::new(chart, x, Matrix::identity(d))
    }

    pub fn point(&self) -> ChartPoint<T> {
        ChartPoint::new(self.chart, self.x.clone())
    }

    /// Right action `u ↦ u g`.
    pub fn right_mul(&self, g: &Matrix<T>) -> Self {
        Self::new(self.chart, self.x.clone(), self.r.mul(g))
    }

    /// `u(e)`: the tangent vector with frame components `e`.
    pub fn apply(&self, e: &[T]) -> Vec<T> {
        self.r.mul_vec(e)
    }

    /// `u^{-1}(v)` for a coordinate tangent vector `v`.
    pub fn solve(&self, v: &[T]) -> Option<Vec<T>> {
        self.r.solve(v)
    }

    pub fn validate(&self, manifold: &ManifoldSpec<T>) -> Result<()> {
        let chart = manifold.chart(self.chart)?;
        if self.x.len() != manifold.dim || self.r.rows() != manifold.dim || !self.r.is_square() {
            return Err(Error::InvalidParameter(format!(
                "frame dimensions do not match manifold dimension {}",
                manifold.dim
            )));
        }
        if !chart.safe_region.contains(&self.x) {
            return Err(Error::ChartDomain {
                chart: self.chart,
                x: to_f64_vec(&self.x),
            });
        }
        if self.r.det().abs() <= T::c(DET_FLOOR) {
            return Err(Error::InvalidParameter("frame matrix is singular".into()));
        }
        Ok(())
    }
}

/// Value of a vector field on the frame bundle at a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentAtFrame<T: Real> {
    pub dx: Vec<T>,
    pub dr: Matrix<T>,
}

/// Optional chart-independent description of the manifold used for
/// comparing points across charts and for test functions.
#[derive(Clone)]
pub struct Embedding<T> {
    pub ambient_dim: usize,
    pub to_ambient: AmbientFn<T>,
    pub locate: Option<LocateFn<T>>,
}

/// Complete geometric input: atlas and connection.
#[derive(Clone)]
pub struct ManifoldSpec<T> {
    pub name: String,
    pub dim: usize,
    pub charts: Vec<Chart<T>>,
    christoffel: ChristoffelFn<T>,
    pub holonomy_generators: Option<Vec<Matrix<T>>>,
    pub embedding: Option<Embedding<T>>,
    pub explosion_bound: T,
}

impl<T: Real> fmt::Debug for ManifoldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ManifoldSpec")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("charts", &self.charts.len())
            .finish()
    }
}

impl<T: Real> ManifoldSpec<T> {
    /// Charts must be listed in id order starting at zero.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        charts: Vec<Chart<T>>,
        christoffel: ChristoffelFn<T>,
    ) -> Result<Self> {
        for (i, c) in charts.iter().enumerate() {
            if c.id != i {
                return Err(Error::InvalidParameter(format!(
                    "chart at position {i} has id {}",
                    c.id
                )));
            }
            if c.dim != dim || c.safe_region.bounded_axes.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "chart {i} has dimension {} but manifold has {dim}",
                    c.dim
                )));
            }
            if let Some(t) = c.neighbors.iter().find(|t| t.to >= charts.len()) {
                return Err(Error::NoTransition { from: i, to: t.to });
            }
        }
        if charts.is_empty() {
            return Err(Error::InvalidParameter("atlas has no charts".into()));
        }
        Ok(Self {
            name: name.into(),
            dim,
            charts,
            christoffel,
            holonomy_generators: None,
            embedding: None,
            explosion_bound: T::c(DEFAULT_EXPLOSION_BOUND),
        })
    }

    pub fn with_embedding(mut self, embedding: Embedding<T>) -> Self {
        self.embedding = Some(embedding);
        self
    }

    pub fn with_holonomy_generators(mut self, gens: Vec<Matrix<T>>) -> Self {
        self.holonomy_generators = Some(gens);
        self
    }

    pub fn with_explosion_bound(mut self, bound: T) -> Self {
        self.explosion_bound = bound;
        self
    }

    pub fn christoffel_fn(&self) -> ChristoffelFn<T> {
        Arc::clone(&self.christoffel)
    }

    pub fn chart(&self, id: usize) -> Result<&Chart<T>> {
        self.charts.get(id).ok_or(Error::NoTransition { from: id, to: id })
    }

    /// Christoffel symbols without the safe-region check (used inside
    /// integrator stages which may briefly overshoot the switching radius).
    pub(crate) fn christoffel_raw(&self, chart: usize, x: &[T]) -> Christoffel<T> {
        (self.christoffel)(chart, x)
    }

    pub fn to_ambient(&self, p: &ChartPoint<T>) -> Option<Vec<T>> {
        self.embedding.as_ref().map(|e| (e.to_ambient)(p.chart, &p.x))
    }

    pub fn locate(&self, ambient: &[T]) -> Option<ChartPoint<T>> {
        self.embedding
            .as_ref()
            .and_then(|e| e.locate.as_ref())
            .and_then(|f| f(ambient))
    }

    /// Re-expresses `p` in `chart`, if the transition is defined there.
    pub fn express_in(&self, p: &ChartPoint<T>, chart: usize) -> Option<ChartPoint<T>> {
        if p.chart == chart {
            return Some(p.clone());
        }
        chart_transition(self, p, chart, None).ok().map(|(q, _)| q)
    }

    /// Distance between two points: coordinate distance in a common chart,
    /// falling back to the ambient embedding.
    pub fn distance(&self, a: &ChartPoint<T>, b: &ChartPoint<T>) -> Option<T> {
        if let Some(a2) = self.express_in(a, b.chart) {
            return Some(crate::scalar::dist(&a2.x, &b.x));
        }
        if let Some(b2) = self.express_in(b, a.chart) {
            return Some(crate::scalar::dist(&a.x, &b2.x));
        }
        let (ea, eb) = (self.to_ambient(a)?, self.to_ambient(b)?);
        Some(crate::scalar::dist(&ea, &eb))
    }

    /// Applies the deterministic chart switching rule: once `x` is at least
    /// `0.8ρ` from the chart centre, move to the neighbour containing `x` with
    /// the largest margin (lowest id on ties), if that margin beats the
    /// current one. `r` is carried along by the transition Jacobian.
    pub fn switch_chart(&self, chart: usize, x: Vec<T>, r: Matrix<T>) -> Result<(usize, Vec<T>, Matrix<T>)> {
        let c = self.chart(chart)?;
        if !c.safe_region.needs_switch(&x) {
            return Ok((chart, x, r));
        }
        let here = c.safe_region.margin(&x);
        let mut best: Option<(T, &Transition<T>, Vec<T>)> = None;
        for tr in &c.neighbors {
            let y = (tr.map)(&x);
            let region = &self.charts[tr.to].safe_region;
            if !region.contains(&y) {
                continue;
            }
            let m = region.margin(&y);
            let better = match &best {
                None => true,
                Some((bm, bt, _)) => m > *bm || (m == *bm && tr.to < bt.to),
            };
            if better {
                best = Some((m, tr, y));
            }
        }
        match best {
            Some((m, tr, y)) if m > here => {
                let jac = (tr.jacobian)(&x);
                Ok((tr.to, y, jac.mul(&r)))
            }
            _ if here > T::zero() => Ok((chart, x, r)),
            _ => Err(Error::ChartCoverage {
                chart,
                x: to_f64_vec(&x),
            }),
        }
    }

    pub(crate) fn check_explosion(&self, x: &[T], r: &Matrix<T>, check_det: bool) -> Result<()> {
        let bound = self.explosion_bound;
        if x.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::Explosion(format!(
                "coordinates {:?} exceed bound {}",
                to_f64_vec(x),
                bound
            )));
        }
        if !r.is_finite() || r.max_abs() > bound {
            return Err(Error::Explosion("frame entries exceed bound".into()));
        }
        if check_det && r.det().abs() < T::c(DET_FLOOR) {
            return Err(Error::Explosion("frame became singular".into()));
        }
        Ok(())
    }
}
