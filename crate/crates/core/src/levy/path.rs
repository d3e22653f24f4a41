use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{add, dist, sub, Real};

use super::LevyTriplet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord<T> {
    /// Grid index of the jump time.
    pub index: usize,
    pub time: T,
    /// Left limit `Y_{s−}`.
    pub pre: Vec<T>,
    pub delta: Vec<T>,
}

/// Càdlàg path on a grid with explicit jumps. `values[i]` is the value at
/// `times[i]` (after any jump there) and `increments[i]` the continuous
/// part of the increment over `[times[i−1], times[i]]` (`increments[0] = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclidPath<T> {
    pub times: Vec<T>,
    pub values: Vec<Vec<T>>,
    pub increments: Vec<Vec<T>>,
    pub jumps: Vec<JumpRecord<T>>,
}

impl<T: Real> EuclidPath<T> {
    pub fn constant(times: Vec<T>, value: Vec<T>) -> Self {
        let d = value.len();
        let values = vec![value; times.len()];
        let increments = vec![vec![T::zero(); d]; times.len()];
        Self {
            times,
            values,
            increments,
            jumps: Vec::new(),
        }
    }

    /// Builds a path from a start value, continuous increments and jumps
    /// `(index, delta)`, accumulating exactly as [`Self::reconstruct_values`].
    pub fn from_increments(
        times: Vec<T>,
        start: Vec<T>,
        increments: Vec<Vec<T>>,
        jumps: Vec<(usize, Vec<T>)>,
    ) -> Result<Self> {
        if increments.len() != times.len() || times.is_empty() {
            return Err(Error::InvalidParameter("increments must match the grid".into()));
        }
        let mut values = vec![start];
        let mut records = Vec::with_capacity(jumps.len());
        let mut jumps = jumps.into_iter().peekable();
        for i in 1..times.len() {
            let pre = add(&values[i - 1], &increments[i]);
            let post = match jumps.peek() {
                Some((k, _)) if *k == i => {
                    let (_, delta) = jumps.next().expect("peeked");
                    let post = add(&pre, &delta);
                    records.push(JumpRecord {
                        index: i,
                        time: times[i],
                        pre,
                        delta,
                    });
                    post
                }
                _ => pre,
            };
            values.push(post);
        }
        if jumps.next().is_some() {
            return Err(Error::InvalidParameter("jump indices must be increasing grid indices".into()));
        }
        Ok(Self {
            times,
            values,
            increments,
            jumps: records,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("non-empty path")
    }

    pub fn jump_at(&self, index: usize) -> Option<&JumpRecord<T>> {
        self.jumps
            .binary_search_by_key(&index, |j| j.index)
            .ok()
            .map(|k| &self.jumps[k])
    }

    /// Value just before `times[i]`.
    pub fn left_limit(&self, i: usize) -> &[T] {
        match self.jump_at(i) {
            Some(j) => &j.pre,
            None => &self.values[i],
        }
    }

    /// Continuous part of the increment over `[times[i−1], times[i]]`.
    pub fn continuous_increment(&self, i: usize) -> &[T] {
        &self.increments[i]
    }

    /// Value at time `t` (right-continuous lookup on the grid).
    pub fn value_at(&self, t: T) -> &[T] {
        let k = self.times.partition_point(|&s| s <= t);
        &self.values[k.saturating_sub(1)]
    }

    /// Rebuilds the values from the start value, the continuous increments
    /// and the jump list.
    pub fn reconstruct_values(&self) -> Vec<Vec<T>> {
        let mut out = vec![self.values[0].clone()];
        for i in 1..self.values.len() {
            let mut v = add(&out[i - 1], self.continuous_increment(i));
            if let Some(j) = self.jump_at(i) {
                v = add(&v, &j.delta);
            }
            out.push(v);
        }
        out
    }

    /// Checks `value(s) − value(s−) = Δ` at every recorded jump.
    pub fn jump_residual(&self) -> T {
        self.jumps
            .iter()
            .map(|j| dist(&sub(&self.values[j.index], &j.pre), &j.delta))
            .fold(T::zero(), T::max)
    }

    pub fn sum_squared_jumps(&self) -> T {
        self.jumps
            .iter()
            .map(|j| j.delta.iter().map(|&v| v * v).sum::<T>())
            .sum()
    }

    /// `sup_t |X_t − Y_t|` over the grid of `self`, evaluating `other` at
    /// the same times.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, v)| dist(v, other.value_at(t)))
            .fold(T::zero(), T::max)
    }

    /// Keeps the base grid points that are multiples of `factor · step`
    /// together with all jump points. Values at surviving points are
    /// unchanged, so the result samples the same realisation more coarsely.
    pub fn coarsen(&self, step: T, factor: usize) -> Self {
        let mut keep = Vec::new();
        for (i, &t) in self.times.iter().enumerate() {
            let k = (t / step).round();
            let on_grid = ((k * step) - t).abs() <= T::c(1e-9) * step;
            let last = i + 1 == self.times.len();
            let multiple = on_grid && (k.as_f64() as usize).is_multiple_of(factor);
            if i == 0 || last || multiple || self.jump_at(i).is_some() {
                keep.push(i);
            }
        }
        let times = keep.iter().map(|&i| self.times[i]).collect();
        let values = keep.iter().map(|&i| self.values[i].clone()).collect();
        let d = self.dim();
        let mut increments = vec![vec![T::zero(); d]];
        for w in keep.windows(2) {
            let inc = (w[0] + 1..=w[1]).fold(vec![T::zero(); d], |acc, i| add(&acc, &self.increments[i]));
            increments.push(inc);
        }
        let jumps = keep
            .iter()
            .enumerate()
            .filter_map(|(new, &old)| {
                self.jump_at(old).map(|j| JumpRecord {
                    index: new,
                    time: j.time,
                    pre: j.pre.clone(),
                    delta: j.delta.clone(),
                })
            })
            .collect();
        Self {
            times,
            values,
            increments,
            jumps,
        }
    }
}

/// Samples `Y_t = b_eff t + σ B_t + Σ ΔY_s` on `[0, horizon]`.
///
/// The grid is `{k h} ∪ {jump times} ∪ {horizon}`; Brownian increments are
/// exact Gaussians per cell. Jump times and sizes are drawn first, then the
/// Gaussian increments cell by cell, so the output is a deterministic
/// function of the stream state.
pub fn sample_levy_path<T: Real, R: Rng + ?Sized>(
    triplet: &LevyTriplet<T>,
    horizon: T,
    grid_step: T,
    rng: &mut R,
) -> Result<EuclidPath<T>> {
    if !(horizon > T::zero()) || !(grid_step > T::zero()) {
        return Err(Error::InvalidParameter("horizon and grid_step must be positive".into()));
    }
    let d = triplet.dim();
    let lambda = triplet.nu.intensity().as_f64();
    let h_f = horizon.as_f64();
    let mut jump_times: Vec<f64> = Vec::new();
    let mut jump_sizes: Vec<Vec<T>> = Vec::new();
    if lambda > 0.0 {
        let exp = Exp::new(lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut t = 0.0;
        loop {
            t += rng.sample::<f64, _>(exp);
            if t >= h_f {
                break;
            }
            jump_times.push(t);
            jump_sizes.push(triplet.nu.sample(rng, d));
        }
    }
    let steps = (h_f / grid_step.as_f64() - 1e-9).ceil().max(1.0) as usize;
    let mut base: Vec<T> = (0..steps)
        .map(|k| grid_step * T::from_usize_lossy(k))
        .collect();
    base.push(horizon);

    // merge base grid and jump times
    let mut times = Vec::with_capacity(base.len() + jump_times.len());
    let mut is_jump: Vec<Option<usize>> = Vec::with_capacity(times.capacity());
    let (mut bi, mut ji) = (0, 0);
    let eps = T::c(1e-12) * horizon.max(T::one());
    while bi < base.len() || ji < jump_times.len() {
        let tj = jump_times.get(ji).map(|&t| T::c(t));
        let tb = base.get(bi).copied();
        match (tb, tj) {
            (Some(b), Some(j)) if (b - j).abs() <= eps => {
                times.push(b);
                is_jump.push(Some(ji));
                bi += 1;
                ji += 1;
            }
            (Some(b), Some(j)) if j < b => {
                times.push(j);
                is_jump.push(Some(ji));
                ji += 1;
            }
            (Some(b), _) => {
                times.push(b);
                is_jump.push(None);
                bi += 1;
            }
            (None, Some(j)) => {
                times.push(j);
                is_jump.push(Some(ji));
                ji += 1;
            }
            (None, None) => unreachable!(),
        }
    }

    let drift = triplet.effective_drift();
    let diffuse = triplet.has_diffusion();
    let mut increments = vec![vec![T::zero(); d]];
    let mut jumps = Vec::new();
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        let mut inc: Vec<T> = drift.iter().map(|&b| b * dt).collect();
        if diffuse {
            let z: Vec<T> = (0..d)
                .map(|_| T::c(rng.sample::<f64, _>(StandardNormal)))
                .collect();
            let bm = triplet.sigma.mul_vec(&z);
            let s = dt.sqrt();
            for (p, w) in inc.iter_mut().zip(bm) {
                *p += s * w;
            }
        }
        increments.push(inc);
        if let Some(k) = is_jump[i] {
            jumps.push((i, jump_sizes[k].clone()));
        }
    }
    EuclidPath::from_increments(times, vec![T::zero(); d], increments, jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{Atom, JumpMeasureSpec};
    use crate::linalg::Matrix;
    use crate::rng::stream;

    #[test]
    fn pure_drift_is_linear() {
        let t = LevyTriplet::<f64>::drift(vec![1.5, -0.5]);
        let p = sample_levy_path(&t, 1.0, 0.1, &mut stream(0, 0)).unwrap();
        assert_eq!(p.times.len(), 11);
        for (s, v) in p.times.iter().zip(&p.values) {
            assert!((v[0] - 1.5 * s).abs() < 1e-14 && (v[1] + 0.5 * s).abs() < 1e-14);
        }
    }

    #[test]
    fn jumps_are_grid_points_and_bookkept() {
        let nu = JumpMeasureSpec::PointMasses {
            atoms: vec![Atom { x: vec![1.0, 0.0], weight: 3.0 }],
        };
        let t = LevyTriplet::new(Matrix::identity(2), vec![0.2, 0.0], nu).unwrap();
        let p = sample_levy_path(&t, 2.0, 0.05, &mut stream(9, 4)).unwrap();
        assert!(!p.jumps.is_empty());
        for j in &p.jumps {
            assert_eq!(p.times[j.index], j.time);
        }
        assert!(p.jump_residual() < 1e-14);
        assert_eq!(p.reconstruct_values(), p.values);
    }

    #[test]
    fn coarsening_keeps_values() {
        let nu = JumpMeasureSpec::GaussianRadial { intensity: 4.0, scale: 0.3 };
        let t = LevyTriplet::new(Matrix::identity(1), vec![0.0], nu).unwrap();
        let p = sample_levy_path(&t, 1.0, 0.01, &mut stream(2, 0)).unwrap();
        let c = p.coarsen(0.01, 2);
        assert_eq!(c.jumps.len(), p.jumps.len());
        for (t, v) in c.times.iter().zip(&c.values) {
            assert_eq!(p.value_at(*t), &v[..]);
        }
        assert!(c.times.len() < p.times.len());
    }
}
