use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{norm, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom<T> {
    pub x: Vec<T>,
    pub weight: T,
}

/// Lévy measure `ν`.
///
/// `truncated_stable` has radial density `scale · r^{-1-alpha}` on
/// `(0, max)` (total over directions; directions uniform, or the positive
/// half-line when `one_sided`). Only jumps of size at least `epsilon` are
/// simulated; the compensated part below `epsilon` is dropped and its size is
/// reported by [`JumpMeasureSpec::small_jump_bias`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpMeasureSpec<T> {
    #[default]
    None,
    PointMasses {
        atoms: Vec<Atom<T>>,
    },
    UniformSphereShell {
        intensity: T,
        radius: T,
    },
    GaussianRadial {
        intensity: T,
        scale: T,
    },
    TruncatedStable {
        alpha: T,
        scale: T,
        epsilon: T,
        #[serde(default)]
        max: Option<T>,
        #[serde(default)]
        one_sided: bool,
    },
}

fn unit_direction<T: Real, R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<T> {
    if d == 1 {
        return vec![if rng.random::<bool>() { T::one() } else { -T::one() }];
    }
    loop {
        let v: Vec<T> = (0..d)
            .map(|_| T::c(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        let n = norm(&v);
        if n > T::c(1e-12) {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl<T: Real> JumpMeasureSpec<T> {
    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            Self::None => Ok(()),
            Self::PointMasses { atoms } => {
                for a in atoms {
                    if a.x.len() != d {
                        return bad(format!("atom {:?} has wrong dimension", a.x));
                    }
                    if !(a.weight > T::zero()) || !a.weight.is_finite() {
                        return bad("atom weights must be positive and finite".into());
                    }
                    if norm(&a.x) == T::zero() {
                        return bad("Lévy measures carry no mass at the origin".into());
                    }
                }
                Ok(())
            }
            Self::UniformSphereShell { intensity, radius } => {
                if !(*intensity > T::zero()) || !(*radius > T::zero()) {
                    return bad("shell needs positive intensity and radius".into());
                }
                Ok(())
            }
            Self::GaussianRadial { intensity, scale } => {
                if !(*intensity > T::zero()) || !(*scale > T::zero()) {
                    return bad("gaussian_radial needs positive intensity and scale".into());
                }
                Ok(())
            }
            Self::TruncatedStable {
                alpha,
                scale,
                epsilon,
                max,
                one_sided,
            } => {
                if !(*alpha > T::zero() && *alpha < T::c(2.0)) {
                    return bad("stable index must lie in (0, 2)".into());
                }
                if !(*scale > T::zero()) || !(*epsilon > T::zero()) {
                    return bad("truncated_stable needs positive scale and epsilon".into());
                }
                if max.is_some_and(|m| !(m > *epsilon)) {
                    return bad("truncated_stable max must exceed epsilon".into());
                }
                if *one_sided && d != 1 {
                    return bad("one_sided is only defined in dimension 1".into());
                }
                Ok(())
            }
        }
    }

    /// Total rate of the simulated (finite activity) part.
    pub fn intensity(&self) -> T {
        match self {
            Self::None => T::zero(),
            Self::PointMasses { atoms } => atoms.iter().map(|a| a.weight).sum(),
            Self::UniformSphereShell { intensity, .. } | Self::GaussianRadial { intensity, .. } => *intensity,
            Self::TruncatedStable {
                alpha,
                scale,
                epsilon,
                max,
                ..
            } => {
                let upper = max.map(|m| m.powf(-*alpha)).unwrap_or(T::zero());
                *scale * (epsilon.powf(-*alpha) - upper) / *alpha
            }
        }
    }

    pub fn is_truncated(&self) -> bool {
        matches!(self, Self::TruncatedStable { .. })
    }

    /// Invariant under every orthogonal map.
    pub fn is_isotropic(&self) -> bool {
        match self {
            Self::None | Self::UniformSphereShell { .. } | Self::GaussianRadial { .. } => true,
            Self::TruncatedStable { one_sided, .. } => !one_sided,
            Self::PointMasses { atoms } => atoms.is_empty(),
        }
    }

    /// One jump distributed as `ν/ν(R^d)` restricted to the simulated part.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, d: usize) -> Vec<T> {
        match self {
            Self::None => vec![T::zero(); d],
            Self::PointMasses { atoms } => {
                let total = self.intensity().as_f64();
                let mut u = rng.random::<f64>() * total;
                for a in atoms {
                    u -= a.weight.as_f64();
                    if u < 0.0 {
                        return a.x.clone();
                    }
                }
                atoms.last().expect("non-empty").x.clone()
            }
            Self::UniformSphereShell { radius, .. } => unit_direction::<T, _>(rng, d)
                .into_iter()
                .map(|v| v * *radius)
                .collect(),
            Self::GaussianRadial { scale, .. } => (0..d)
                .map(|_| *scale * T::c(rng.sample::<f64, _>(StandardNormal)))
                .collect(),
            Self::TruncatedStable {
                alpha,
                epsilon,
                max,
                one_sided,
                ..
            } => {
                let lo = epsilon.powf(-*alpha);
                let hi = max.map(|m| m.powf(-*alpha)).unwrap_or(T::zero());
                let u = T::c(rng.random::<f64>());
                let r = (lo - u * (lo - hi)).powf(-T::one() / *alpha);
                if *one_sided {
                    vec![r]
                } else {
                    unit_direction::<T, _>(rng, d)
                        .into_iter()
                        .map(|v| v * r)
                        .collect()
                }
            }
        }
    }

    /// `∫_{|x|<1} x ν(dx)` over the simulated part; converts the triplet drift
    /// into the drift of the simulated process.
    pub fn compensator(&self, d: usize) -> Vec<T> {
        match self {
            Self::PointMasses { atoms } => {
                let mut out = vec![T::zero(); d];
                for a in atoms.iter().filter(|a| norm(&a.x) < T::one()) {
                    for (o, &x) in out.iter_mut().zip(&a.x) {
                        *o += a.weight * x;
                    }
                }
                out
            }
            Self::TruncatedStable {
                alpha,
                scale,
                epsilon,
                max,
                one_sided: true,
            } => {
                let top = max.map(|m| m.min(T::one())).unwrap_or(T::one());
                if top <= *epsilon {
                    return vec![T::zero()];
                }
                let one_m = T::one() - *alpha;
                let v = if one_m.abs() < T::c(1e-12) {
                    *scale * (top / *epsilon).ln()
                } else {
                    *scale * (top.powf(one_m) - epsilon.powf(one_m)) / one_m
                };
                vec![v]
            }
            _ => vec![T::zero(); d],
        }
    }

    /// `∫_{|x|<ε} |x|² ν(dx)`, the L² size per unit time of the jumps below
    /// `ε` (for truncated kinds this includes the part that is not simulated).
    pub fn small_jump_bias(&self, eps: T, d: usize) -> Result<T> {
        if !(eps > T::zero()) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        Ok(match self {
            Self::None => T::zero(),
            Self::PointMasses { atoms } => atoms
                .iter()
                .filter(|a| norm(&a.x) < eps)
                .map(|a| a.weight * a.x.iter().map(|&v| v * v).sum::<T>())
                .sum(),
            Self::UniformSphereShell { intensity, radius } => {
                if *radius < eps {
                    *intensity * *radius * *radius
                } else {
                    T::zero()
                }
            }
            Self::GaussianRadial { intensity, scale } => {
                // |X|² = s² χ²_d and E[χ²_d; χ²_d < q] = d P(χ²_{d+2} < q)
                let q = (eps / *scale).powi(2).as_f64();
                let chi = ChiSquared::new((d + 2) as f64).expect("positive dof");
                *intensity * *scale * *scale * T::from_usize_lossy(d) * T::c(chi.cdf(q))
            }
            Self::TruncatedStable { alpha, scale, max, .. } => {
                let top = max.map(|m| m.min(eps)).unwrap_or(eps);
                let e = T::c(2.0) - *alpha;
                *scale * top.powf(e) / e
            }
        })
    }

    /// Image measure `g_*ν` for kinds closed under linear maps.
    pub fn push_forward(&self, g: &Matrix<T>) -> Option<Self> {
        match self {
            Self::None => Some(Self::None),
            Self::PointMasses { atoms } => Some(Self::PointMasses {
                atoms: atoms
                    .iter()
                    .map(|a| Atom {
                        x: g.mul_vec(&a.x),
                        weight: a.weight,
                    })
                    .collect(),
            }),
            _ => None,
        }
    }
}
