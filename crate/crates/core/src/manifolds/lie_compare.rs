//! Marcus simulation on a Lie group against the direct increment product
//! `X ← X exp(V_i ΔY^i)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::levy::{sample_levy_path, LevyTriplet};
use crate::linalg::Matrix;
use crate::marcus::{marcus_solve, MarcusConfig};
use crate::rng::{aux_stream, path_stream};
use crate::scalar::Real;
use crate::stats::{chi_square_two_sample, energy_test, TestOutcome};

use super::LieGroupSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LieComparisonConfig {
    pub grid_step: f64,
    pub marcus: MarcusConfig,
    /// Paths per side entering the energy test.
    pub max_energy_samples: usize,
    pub n_permutations: usize,
    pub level: f64,
    pub jump_bins: usize,
}

impl Default for LieComparisonConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            marcus: MarcusConfig::default(),
            max_energy_samples: 1500,
            n_permutations: 199,
            level: 0.01,
            jump_bins: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieComparison {
    pub n_paths: usize,
    pub marcus_stopped: usize,
    pub jump_count: usize,
    /// `max ‖X_s − X_{s−} exp(V_i ΔY^i_s)‖` over all Marcus jumps.
    pub max_jump_residual: f64,
    pub terminal_test: Option<TestOutcome>,
    pub jump_law_test: Option<TestOutcome>,
}

impl LieComparison {
    pub fn passed(&self, jump_tol: f64) -> bool {
        self.max_jump_residual <= jump_tol
            && self.terminal_test.as_ref().is_none_or(TestOutcome::passed)
            && self.jump_law_test.as_ref().is_none_or(TestOutcome::passed)
    }
}

struct MarcusRun {
    terminal: Option<Vec<f64>>,
    jumps: Vec<Matrix<f64>>,
    residual: f64,
}

fn flat_entries<T: Real>(m: &Matrix<T>) -> Vec<f64> {
    m.as_slice().iter().map(|v| v.as_f64()).collect()
}

fn distance_from_identity(m: &Matrix<f64>) -> f64 {
    m.sub(&Matrix::identity(m.rows())).frobenius_norm()
}

fn histogram(values: &[f64], top: f64, bins: usize) -> Vec<u64> {
    let mut out = vec![0u64; bins];
    for &v in values {
        let k = ((v / top * bins as f64) as usize).min(bins - 1);
        out[k] += 1;
    }
    out
}

/// Simulates `n_paths` paths from the identity both ways. Marcus paths use
/// streams `0..n`, increment products use the independent streams
/// `n..2n` of the same seed.
pub fn lie_marcus_vs_increment<T: Real>(
    group: &LieGroupSpec<T>,
    triplet: &LevyTriplet<T>,
    horizon: T,
    n_paths: usize,
    seed: u64,
    config: &LieComparisonConfig,
) -> Result<LieComparison> {
    let manifold = &group.manifold;
    let start = group.from_group(&group.identity());
    let u0 = group.left_invariant_frame(&start);
    let h = T::c(config.grid_step);
    let marcus: Vec<MarcusRun> = (0..n_paths)
        .into_par_iter()
        .map(|i| -> Result<MarcusRun> {
            let y = sample_levy_path(triplet, horizon, h, &mut path_stream(seed, i))?;
            let u = marcus_solve(manifold, &y, &u0, &config.marcus)?;
            let mut residual = 0.0f64;
            let mut jumps = Vec::with_capacity(u.jumps.len());
            for j in &u.jumps {
                let pre = group.to_group(&j.pre.point());
                let post = group.to_group(&j.post.point());
                let expected = pre.mul(&group.exp(&j.delta_y));
                residual = residual.max(post.sub(&expected).max_abs().as_f64());
                let inc = pre.inverse().expect("group element").mul(&post);
                jumps.push(inc.to_f64());
            }
            let terminal = u
                .stopped_at
                .is_none()
                .then(|| flat_entries(&group.to_group(&u.last().point())));
            Ok(MarcusRun { terminal, jumps, residual })
        })
        .collect::<Result<_>>()?;
    let products: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let y = sample_levy_path(triplet, horizon, h, &mut path_stream(seed, n_paths + i))?;
            let mut g = group.identity();
            for k in 1..y.times.len() {
                g = g.mul(&group.exp(y.continuous_increment(k)));
                if let Some(j) = y.jump_at(k) {
                    g = g.mul(&group.exp(&j.delta));
                }
            }
            Ok(flat_entries(&g))
        })
        .collect::<Result<_>>()?;

    let finished: Vec<Vec<f64>> = marcus.iter().filter_map(|r| r.terminal.clone()).collect();
    let marcus_stopped = n_paths - finished.len();
    let take = config.max_energy_samples.min(finished.len()).min(products.len());
    let constant = |s: &[Vec<f64>]| s.windows(2).all(|w| w[0] == w[1]);
    let terminal_test = (take >= 2 && !(constant(&finished) && constant(&products))).then(|| {
        energy_test(
            &finished[..take],
            &products[..take],
            config.n_permutations,
            config.level,
            seed,
        )
    });

    let jump_mats: Vec<&Matrix<f64>> = marcus.iter().flat_map(|r| &r.jumps).collect();
    let jump_count = jump_mats.len();
    let max_jump_residual = marcus.iter().map(|r| r.residual).fold(0.0, f64::max);
    let jump_law_test = (jump_count >= 2).then(|| {
        let mut rng = aux_stream(seed, 11);
        let d = group.dim();
        let fresh: Vec<f64> = (0..jump_count)
            .map(|_| distance_from_identity(&group.exp(&triplet.nu.sample(&mut rng, d)).to_f64()))
            .collect();
        let seen: Vec<f64> = jump_mats.iter().map(|m| distance_from_identity(m)).collect();
        let top = seen.iter().chain(&fresh).copied().fold(0.0, f64::max) * (1.0 + 1e-12) + 1e-300;
        chi_square_two_sample(
            &histogram(&seen, top, config.jump_bins),
            &histogram(&fresh, top, config.jump_bins),
            config.level,
        )
    });
    Ok(LieComparison {
        n_paths,
        marcus_stopped,
        jump_count,
        max_jump_residual,
        terminal_test,
        jump_law_test,
    })
}
