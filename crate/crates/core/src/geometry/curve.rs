use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{add, scale, Real};

use super::ode::integrate_horizontal;
use super::{ChartPoint, ManifoldSpec};

/// Densely sampled curve; velocity between samples is reconstructed linearly
/// in whichever chart the consumer is working in.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve<T> {
    pub times: Vec<T>,
    pub points: Vec<ChartPoint<T>>,
}

impl<T: Real> Curve<T> {
    pub fn new(times: Vec<T>, points: Vec<ChartPoint<T>>) -> Result<Self> {
        if times.len() != points.len() || times.is_empty() {
            return Err(Error::InvalidParameter(
                "curve needs matching, non-empty times and points".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("curve times must be non-decreasing".into()));
        }
        Ok(Self { times, points })
    }

    fn uniform_times(n: usize, duration: T) -> Vec<T> {
        let n = n.max(1);
        (0..=n)
            .map(|k| duration * T::from_usize_lossy(k) / T::from_usize_lossy(n))
            .collect()
    }

    pub fn constant(p: ChartPoint<T>, samples: usize) -> Self {
        let times = Self::uniform_times(samples, T::one());
        let points = vec![p; times.len()];
        Self { times, points }
    }

    /// Samples `t ↦ f(t)` in a single chart on `[0, duration]`.
    pub fn from_chart_fn(chart: usize, n: usize, duration: T, f: impl Fn(T) -> Vec<T>) -> Self {
        let times = Self::uniform_times(n, duration);
        let points = times.iter().map(|&t| ChartPoint::new(chart, f(t))).collect();
        Self { times, points }
    }

    /// Straight line with constant coordinate velocity `delta` over unit time,
    /// split into `n` steps. The walk switches charts with the integrator rule
    /// and its velocity follows the transition Jacobians, so it can wrap
    /// around compact quotients.
    pub fn straight_walk(
        manifold: &ManifoldSpec<T>,
        start: ChartPoint<T>,
        delta: &[T],
        n: usize,
    ) -> Result<Self> {
        let n = n.max(1);
        let step_scale = T::one() / T::from_usize_lossy(n);
        let mut chart = start.chart;
        let mut x = start.x.clone();
        let mut v = Matrix::column_vector(delta);
        let mut points = vec![start];
        for _ in 0..n {
            let xn = add(&x, &scale(step_scale, &v.column(0)));
            (chart, x, v) = manifold.switch_chart(chart, xn, v)?;
            points.push(ChartPoint::new(chart, x.clone()));
        }
        Ok(Self {
            times: Self::uniform_times(n, T::one()),
            points,
        })
    }

    /// Geodesic `t ↦ Exp_p(t v)` for `t ∈ [0, 1]`, sampled at `n + 1` points
    /// with `steps_per_sample` RK4 steps in between.
    pub fn geodesic(
        manifold: &ManifoldSpec<T>,
        p: ChartPoint<T>,
        v: &[T],
        n: usize,
        steps_per_sample: usize,
    ) -> Result<Self> {
        let n = n.max(1);
        let dt = T::one() / T::from_usize_lossy(n);
        let mut chart = p.chart;
        let mut x = p.x.clone();
        let mut col = Matrix::column_vector(v);
        let mut points = vec![p];
        for _ in 0..n {
            (chart, x, col) =
                integrate_horizontal(manifold, chart, x, col, &[dt], steps_per_sample.max(1), false)?;
            points.push(ChartPoint::new(chart, x.clone()));
        }
        Ok(Self {
            times: Self::uniform_times(n, T::one()),
            points,
        })
    }

    /// Curve through ambient points, located with the manifold embedding.
    pub fn from_ambient(manifold: &ManifoldSpec<T>, times: Vec<T>, ambient: &[Vec<T>]) -> Result<Self> {
        let mut points = Vec::with_capacity(ambient.len());
        for a in ambient {
            let p = manifold.locate(a).ok_or_else(|| {
                Error::InvalidParameter("manifold has no embedding to locate points".into())
            })?;
            points.push(p);
        }
        Self::new(times, points)
    }

    /// Appends `other`, whose first point is assumed to coincide with the
    /// last point of `self`.
    pub fn concat(&self, other: &Self) -> Self {
        let offset = *self.times.last().expect("non-empty") - other.times[0];
        let mut times = self.times.clone();
        let mut points = self.points.clone();
        times.extend(other.times[1..].iter().map(|&t| t + offset));
        points.extend(other.points[1..].iter().cloned());
        Self { times, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn start(&self) -> &ChartPoint<T> {
        &self.points[0]
    }

    pub fn end(&self) -> &ChartPoint<T> {
        self.points.last().expect("non-empty")
    }
}
