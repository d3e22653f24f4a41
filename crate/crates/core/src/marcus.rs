//! Jump-adapted Marcus integrator on the frame bundle.
//!
//! Between driver jumps the horizontal SDE `dU = H_i(U) ∘ dY^i` is advanced
//! with the implicit midpoint rule on each continuous increment; at a jump
//! `ΔY_s` the frame follows the time-one flow `U_s = exp(H_{ΔY_s})(U_{s−})`.
//! Explosion or loss of chart coverage stops the path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{flow_exp, implicit_midpoint_step, midpoint_step, ChartPoint, FramePoint, ManifoldSpec};
use crate::levy::{check_invariance_with, sample_levy_path, EuclidPath, InvarianceConfig, InvarianceReport, LevyTriplet};
use crate::linalg::Matrix;
use crate::rng::path_stream;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Midpoint corrector iterated to a fixed point; keeps `det r` on
    /// volume-preserving connections.
    #[default]
    ImplicitMidpoint,
    /// Single predictor-corrector pass.
    ExplicitMidpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarcusConfig {
    /// Midpoint steps per driver cell. With more than one, every substep is
    /// recorded as a grid point of the output.
    pub diffusion_substeps: usize,
    /// RK4 steps for each jump flow.
    pub jump_ode_steps: usize,
    pub explosion_bound: f64,
    pub scheme: Scheme,
}

impl Default for MarcusConfig {
    fn default() -> Self {
        Self {
            diffusion_substeps: 1,
            jump_ode_steps: crate::geometry::DEFAULT_STEPS,
            explosion_bound: crate::geometry::DEFAULT_EXPLOSION_BOUND,
            scheme: Scheme::ImplicitMidpoint,
        }
    }
}

impl MarcusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.diffusion_substeps == 0 || self.jump_ode_steps == 0 || !(self.explosion_bound > 0.0) {
            return Err(Error::InvalidParameter("marcus config values must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopInfo {
    pub time: f64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BundleJump<T: Real> {
    pub index: usize,
    pub time: T,
    pub pre: FramePoint<T>,
    pub post: FramePoint<T>,
    pub delta_y: Vec<T>,
}

/// Frame-bundle path `U`, possibly stopped before the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BundlePath<T: Real> {
    pub times: Vec<T>,
    pub frames: Vec<FramePoint<T>>,
    pub jumps: Vec<BundleJump<T>>,
    pub stopped_at: Option<StopInfo>,
}

impl<T: Real> BundlePath<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &FramePoint<T> {
        self.frames.last().expect("non-empty path")
    }

    pub fn jump_at(&self, index: usize) -> Option<&BundleJump<T>> {
        self.jumps
            .binary_search_by_key(&index, |j| j.index)
            .ok()
            .map(|k| &self.jumps[k])
    }

    /// Frame just before `times[i]`.
    pub fn left_limit(&self, i: usize) -> &FramePoint<T> {
        self.jump_at(i).map_or(&self.frames[i], |j| &j.pre)
    }

    /// Frame at time `t` (right-continuous lookup).
    pub fn frame_at(&self, t: T) -> &FramePoint<T> {
        let k = self.times.partition_point(|&s| s <= t);
        &self.frames[k.saturating_sub(1)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ManifoldJump<T: Real> {
    pub index: usize,
    pub time: T,
    pub pre: ChartPoint<T>,
    pub post: ChartPoint<T>,
    /// Jump data relative to a section; empty until filled in.
    pub j: Vec<T>,
}

/// Manifold path `X = π(U)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ManifoldPath<T: Real> {
    pub times: Vec<T>,
    pub points: Vec<ChartPoint<T>>,
    pub jumps: Vec<ManifoldJump<T>>,
    pub stopped_at: Option<StopInfo>,
}

impl<T: Real> ManifoldPath<T> {
    pub fn jump_at(&self, index: usize) -> Option<&ManifoldJump<T>> {
        self.jumps
            .binary_search_by_key(&index, |j| j.index)
            .ok()
            .map(|k| &self.jumps[k])
    }

    pub fn left_limit(&self, i: usize) -> &ChartPoint<T> {
        self.jump_at(i).map_or(&self.points[i], |j| &j.pre)
    }

    pub fn last(&self) -> &ChartPoint<T> {
        self.points.last().expect("non-empty path")
    }

    pub fn point_at(&self, t: T) -> &ChartPoint<T> {
        let k = self.times.partition_point(|&s| s <= t);
        &self.points[k.saturating_sub(1)]
    }
}

fn stop_reason(e: &Error) -> Option<String> {
    match e {
        Error::Explosion(m) => Some(format!("explosion: {m}")),
        Error::ChartCoverage { .. } => Some(format!("coverage: {e}")),
        _ => None,
    }
}

/// Solves the horizontal Marcus SDE driven by `driver` from `u0`.
pub fn marcus_solve<T: Real>(
    manifold: &ManifoldSpec<T>,
    driver: &EuclidPath<T>,
    u0: &FramePoint<T>,
    config: &MarcusConfig,
) -> Result<BundlePath<T>> {
    solve_with_fields(manifold, driver, u0, None, config)
}

/// Solves with the transformed fields `H_{g e_i}` in place of `H_{e_i}`.
pub fn marcus_solve_transformed<T: Real>(
    manifold: &ManifoldSpec<T>,
    driver: &EuclidPath<T>,
    u0: &FramePoint<T>,
    g: &Matrix<T>,
    config: &MarcusConfig,
) -> Result<BundlePath<T>> {
    solve_with_fields(manifold, driver, u0, Some(g), config)
}

fn solve_with_fields<T: Real>(
    manifold: &ManifoldSpec<T>,
    driver: &EuclidPath<T>,
    u0: &FramePoint<T>,
    g: Option<&Matrix<T>>,
    config: &MarcusConfig,
) -> Result<BundlePath<T>> {
    config.validate()?;
    u0.validate(manifold)?;
    if driver.dim() != manifold.dim {
        return Err(Error::InvalidParameter(format!(
            "driver has dimension {} but manifold has {}",
            driver.dim(),
            manifold.dim
        )));
    }
    let manifold = &manifold.clone().with_explosion_bound(T::c(config.explosion_bound));
    let map = |v: &[T]| match g {
        Some(g) => g.mul_vec(v),
        None => v.to_vec(),
    };
    let k = config.diffusion_substeps;
    let kf = T::from_usize_lossy(k);
    let mut out = BundlePath {
        times: vec![driver.times[0]],
        frames: vec![u0.clone()],
        jumps: Vec::new(),
        stopped_at: None,
    };
    let mut u = u0.clone();
    for i in 1..driver.times.len() {
        let (t0, t1) = (driver.times[i - 1], driver.times[i]);
        let dy = map(driver.continuous_increment(i));
        let moving = dy.iter().any(|&v| v != T::zero());
        let sub_dy: Vec<T> = dy.iter().map(|&v| v / kf).collect();
        for s in 1..=k {
            if moving {
                let step = match config.scheme {
                    Scheme::ImplicitMidpoint => implicit_midpoint_step(manifold, u.chart, &u.x, &u.r, &sub_dy, 50),
                    Scheme::ExplicitMidpoint => midpoint_step(manifold, u.chart, &u.x, &u.r, &sub_dy),
                };
                match step {
                    Ok((chart, x, r)) => u = FramePoint::new(chart, x, r),
                    Err(e) => {
                        let reason = stop_reason(&e).ok_or(e)?;
                        out.stopped_at = Some(StopInfo { time: t1.as_f64(), reason });
                        return Ok(out);
                    }
                }
            }
            if s < k {
                out.times.push(t0 + (t1 - t0) * T::from_usize_lossy(s) / kf);
                out.frames.push(u.clone());
            }
        }
        if let Some(j) = driver.jump_at(i) {
            let c = map(&j.delta);
            match flow_exp(manifold, &u, &c, config.jump_ode_steps) {
                Ok(post) => {
                    out.jumps.push(BundleJump {
                        index: out.times.len(),
                        time: t1,
                        pre: u.clone(),
                        post: post.clone(),
                        delta_y: j.delta.clone(),
                    });
                    u = post;
                }
                Err(e) => {
                    let reason = stop_reason(&e).ok_or(e)?;
                    out.stopped_at = Some(StopInfo { time: t1.as_f64(), reason });
                    return Ok(out);
                }
            }
        }
        out.times.push(t1);
        out.frames.push(u.clone());
    }
    Ok(out)
}

/// `X = π(U)`; jump data is left empty.
pub fn project<T: Real>(path: &BundlePath<T>) -> ManifoldPath<T> {
    ManifoldPath {
        times: path.times.clone(),
        points: path.frames.iter().map(FramePoint::point).collect(),
        jumps: path
            .jumps
            .iter()
            .map(|j| ManifoldJump {
                index: j.index,
                time: j.time,
                pre: j.pre.point(),
                post: j.post.point(),
                j: Vec::new(),
            })
            .collect(),
        stopped_at: path.stopped_at.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub grid_step: f64,
    pub marcus: MarcusConfig,
    /// Simulate even if the triplet fails the holonomy invariance check.
    pub override_invariance: bool,
    pub invariance: InvarianceConfig,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            marcus: MarcusConfig::default(),
            override_invariance: false,
            invariance: InvarianceConfig::default(),
        }
    }
}

/// All layers of one simulated path.
#[derive(Clone, Debug)]
pub struct Simulation<T: Real> {
    pub x: ManifoldPath<T>,
    pub u: BundlePath<T>,
    pub y: EuclidPath<T>,
}

/// Checks the triplet against the manifold's declared holonomy generators.
/// Returns `None` when nothing is declared.
pub fn invariance_gate<T: Real>(
    manifold: &ManifoldSpec<T>,
    triplet: &LevyTriplet<T>,
    config: &SimulationConfig,
) -> Result<Option<InvarianceReport>> {
    let Some(gens) = &manifold.holonomy_generators else {
        return Ok(None);
    };
    let report = check_invariance_with(triplet, gens, &config.invariance)?;
    if !report.passed() && !config.override_invariance {
        return Err(Error::Invariance(report.failures().join("; ")));
    }
    Ok(Some(report))
}

/// Simulates path `index` of the experiment `seed` without the invariance
/// gate (the caller is expected to have run [`invariance_gate`]).
pub fn simulate_path<T: Real>(
    manifold: &ManifoldSpec<T>,
    triplet: &LevyTriplet<T>,
    u0: &FramePoint<T>,
    horizon: T,
    config: &SimulationConfig,
    seed: u64,
    index: usize,
) -> Result<Simulation<T>> {
    let mut rng = path_stream(seed, index);
    let y = sample_levy_path(triplet, horizon, T::c(config.grid_step), &mut rng)?;
    let u = marcus_solve(manifold, &y, u0, &config.marcus)?;
    let x = project(&u);
    Ok(Simulation { x, u, y })
}

/// Gated single-path simulation: `(X, U, Y)` for path index 0 of `seed`.
pub fn simulate_levy_on_manifold<T: Real>(
    manifold: &ManifoldSpec<T>,
    triplet: &LevyTriplet<T>,
    u0: &FramePoint<T>,
    horizon: T,
    config: &SimulationConfig,
    seed: u64,
) -> Result<Simulation<T>> {
    invariance_gate(manifold, triplet, config)?;
    simulate_path(manifold, triplet, u0, horizon, config, seed, 0)
}

/// Gated multi-path simulation in parallel; results are in path order.
pub fn simulate_paths<T: Real>(
    manifold: &ManifoldSpec<T>,
    triplet: &LevyTriplet<T>,
    u0: &FramePoint<T>,
    horizon: T,
    config: &SimulationConfig,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<Simulation<T>>> {
    invariance_gate(manifold, triplet, config)?;
    (0..n_paths)
        .into_par_iter()
        .map(|i| simulate_path(manifold, triplet, u0, horizon, config, seed, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::{Atom, JumpMeasureSpec};
    use crate::manifolds::build;
    use crate::rng::stream;
    use crate::scalar::dist;

    #[test]
    fn zero_driver_keeps_u0() {
        let (m, _) = build::<f64>("cylinder:0.5").unwrap();
        let u0 = FramePoint::coordinate(0, vec![0.3, 0.0]);
        let y = EuclidPath::constant(vec![0.0, 0.5, 1.0], vec![0.0, 0.0]);
        let u = marcus_solve(&m, &y, &u0, &MarcusConfig::default()).unwrap();
        assert!(u.frames.iter().all(|f| *f == u0));
    }

    #[test]
    fn flat_space_is_affine_in_the_driver() {
        let (m, _) = build::<f64>("flat:2").unwrap();
        let nu = JumpMeasureSpec::PointMasses {
            atoms: vec![Atom { x: vec![0.5, 1.5], weight: 3.0 }],
        };
        let t = LevyTriplet::new(Matrix::identity(2), vec![0.1, 0.2], nu).unwrap();
        let y = sample_levy_path(&t, 1.0, 0.01, &mut stream(4, 0)).unwrap();
        let r0 = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 1.0]]);
        let u0 = FramePoint::new(0, vec![0.0, 0.0], r0.clone());
        let u = marcus_solve(&m, &y, &u0, &MarcusConfig::default()).unwrap();
        assert_eq!(u.len(), y.times.len());
        for (f, v) in u.frames.iter().zip(&y.values) {
            assert!(dist(&f.x, &r0.mul_vec(v)) < 1e-12);
            assert!(f.r.sub(&r0).max_abs() < 1e-12);
        }
    }

    #[test]
    fn pure_drift_matches_the_flow() {
        let (m, _) = build::<f64>("sphere:2").unwrap();
        let u0 = FramePoint::coordinate(0, vec![0.2, -0.1]);
        let e = [0.7, 0.4];
        let y = sample_levy_path(&LevyTriplet::drift(e.to_vec()), 1.0, 1e-3, &mut stream(0, 0)).unwrap();
        let u = marcus_solve(&m, &y, &u0, &MarcusConfig::default()).unwrap();
        let exact = flow_exp(&m, &u0, &e, 1000).unwrap();
        let end = u.last();
        assert_eq!(end.chart, exact.chart);
        assert!(dist(&end.x, &exact.x) < 1e-5, "{}", dist(&end.x, &exact.x));
        assert!(end.r.sub(&exact.r).max_abs() < 1e-5);
    }

    #[test]
    fn explosion_is_a_stop() {
        let (m, _) = build::<f64>("flat:1").unwrap();
        let y = sample_levy_path(&LevyTriplet::drift(vec![10.0]), 1.0, 0.1, &mut stream(0, 0)).unwrap();
        let cfg = MarcusConfig { explosion_bound: 5.0, ..MarcusConfig::default() };
        let u = marcus_solve(&m, &y, &FramePoint::coordinate(0, vec![0.0]), &cfg).unwrap();
        let stop = u.stopped_at.clone().expect("stopped");
        assert!((stop.time - 0.6).abs() < 1e-9);
        assert_eq!(u.len(), 6);
    }

    #[test]
    fn klein_gate_rejects_lopsided_jumps() {
        let (m, _) = build::<f64>("klein_bottle:2").unwrap();
        let nu = JumpMeasureSpec::PointMasses {
            atoms: vec![Atom { x: vec![0.3, 0.0], weight: 1.0 }],
        };
        let t = LevyTriplet::new(Matrix::zeros(2, 2), vec![0.0, 0.0], nu).unwrap();
        let u0 = FramePoint::coordinate(0, vec![0.0, 0.0]);
        let cfg = SimulationConfig::default();
        let r = simulate_levy_on_manifold(&m, &t, &u0, 1.0, &cfg, 1);
        assert!(matches!(r, Err(Error::Invariance(_))));
        let cfg = SimulationConfig { override_invariance: true, ..cfg };
        assert!(simulate_levy_on_manifold(&m, &t, &u0, 1.0, &cfg, 1).is_ok());
    }
}
