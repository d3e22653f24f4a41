use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{norm, Real};
use crate::stats::{chi_square, TestOutcome};

use super::JumpMeasureSpec;

/// Atom `(t, x)` of a Poisson random measure on `[0, T] × R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonAtom<T> {
    pub t: T,
    pub x: Vec<T>,
}

/// Atoms of a Poisson random measure with intensity `Leb ⊗ ν` on `[0, horizon]`.
pub fn sample_poisson_atoms<T: Real, R: Rng + ?Sized>(
    nu: &JumpMeasureSpec<T>,
    d: usize,
    horizon: T,
    rng: &mut R,
) -> Result<Vec<PoissonAtom<T>>> {
    nu.validate(d)?;
    let lambda = nu.intensity().as_f64();
    if lambda <= 0.0 {
        return Ok(Vec::new());
    }
    let exp = Exp::new(lambda).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += rng.sample::<f64, _>(exp);
        if t >= horizon.as_f64() {
            return Ok(out);
        }
        out.push(PoissonAtom {
            t: T::c(t),
            x: nu.sample(rng, d),
        });
    }
}

/// `(t, x) ↦ (t, g_t x)` with times unchanged.
pub fn pushforward_atoms<T: Real, G>(atoms: &[PoissonAtom<T>], g: G) -> Vec<PoissonAtom<T>>
where
    G: Fn(T) -> Matrix<T>,
{
    atoms
        .iter()
        .map(|a| PoissonAtom {
            t: a.t,
            x: g(a.t).mul_vec(&a.x),
        })
        .collect()
}

fn angle_bin<T: Real>(x: &[T], bins: usize) -> usize {
    let tau = std::f64::consts::TAU;
    let a = x[1].as_f64().atan2(x[0].as_f64()).rem_euclid(tau);
    ((a / tau * bins as f64) as usize).min(bins - 1)
}

/// Counts of planar points by angle sector and radius shell
/// (`radius_edges` increasing; points beyond the last edge fall in the last
/// shell). Row-major: angle outer, radius inner.
pub fn angle_radius_bins<T: Real>(points: &[Vec<T>], angle_bins: usize, radius_edges: &[T]) -> Vec<u64> {
    let shells = radius_edges.len() + 1;
    let mut counts = vec![0u64; angle_bins * shells];
    for p in points {
        let r = norm(p);
        let s = radius_edges.partition_point(|&e| e <= r);
        counts[angle_bin(p, angle_bins) * shells + s] += 1;
    }
    counts
}

/// Pearson test of binned `(time, angle)` counts against the uniform law of
/// `Leb ⊗ ν` for planar isotropic `ν`, conditionally on the atom count.
pub fn time_angle_chi_square<T: Real>(
    atoms: &[PoissonAtom<T>],
    horizon: T,
    time_bins: usize,
    angle_bins: usize,
    level: f64,
) -> Result<TestOutcome> {
    if time_bins == 0 || angle_bins == 0 {
        return Err(Error::InvalidParameter("bin counts must be positive".into()));
    }
    if atoms.iter().any(|a| a.x.len() != 2) {
        return Err(Error::InvalidParameter("time-angle binning needs planar atoms".into()));
    }
    let mut counts = vec![0u64; time_bins * angle_bins];
    let h = horizon.as_f64();
    for a in atoms {
        let tb = ((a.t.as_f64() / h * time_bins as f64) as usize).min(time_bins - 1);
        counts[tb * angle_bins + angle_bin(&a.x, angle_bins)] += 1;
    }
    let expected = vec![atoms.len() as f64 / counts.len() as f64; counts.len()];
    Ok(chi_square(&counts, &expected, 0, level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::chi_square_two_sample;

    fn shell() -> JumpMeasureSpec<f64> {
        JumpMeasureSpec::GaussianRadial { intensity: 1.0e4, scale: 1.0 }
    }

    #[test]
    fn identity_keeps_atoms() {
        let atoms = sample_poisson_atoms(&shell(), 2, 0.01, &mut stream(1, 0)).unwrap();
        let same = pushforward_atoms(&atoms, |_| Matrix::identity(2));
        assert_eq!(same, atoms);
    }

    #[test]
    fn fixed_rotation_keeps_the_histogram() {
        let edges = [0.5, 1.0, 1.5, 2.0];
        let pts = |a: &[PoissonAtom<f64>]| a.iter().map(|p| p.x.clone()).collect::<Vec<_>>();
        let passes = (1..=5)
            .filter(|&seed| {
                let atoms = sample_poisson_atoms(&shell(), 2, 1.0, &mut stream(seed, 0)).unwrap();
                let moved = pushforward_atoms(&atoms, |_| Matrix::rotation2(0.9));
                assert_eq!(moved.len(), atoms.len());
                let fresh = sample_poisson_atoms(&shell(), 2, 1.0, &mut stream(seed, 1)).unwrap();
                chi_square_two_sample(
                    &angle_radius_bins(&pts(&moved), 8, &edges),
                    &angle_radius_bins(&pts(&fresh), 8, &edges),
                    0.01,
                )
                .passed()
            })
            .count();
        assert!(passes >= 4, "{passes} of 5");
    }

    #[test]
    fn time_dependent_rotation_is_uniform() {
        let atoms = sample_poisson_atoms(&shell(), 2, 1.0, &mut stream(3, 0)).unwrap();
        let moved = pushforward_atoms(&atoms, |t| Matrix::rotation2(5.0 * t));
        let out = time_angle_chi_square(&moved, 1.0, 10, 12, 0.01).unwrap();
        assert!(out.passed(), "{out:?}");
        // non-isotropic atoms are detected
        let skew: Vec<_> = moved
            .iter()
            .map(|a| PoissonAtom { t: a.t, x: vec![a.x[0].abs(), a.x[1]] })
            .collect();
        assert!(!time_angle_chi_square(&skew, 1.0, 10, 12, 0.01).unwrap().passed());
    }
}
