//! Euclidean Lévy processes: triplets, path sampling, invariance checks and
//! Poisson random measures.

mod invariance;
mod measure;
mod path;
mod pushforward;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub use invariance::{
    check_invariance, check_invariance_with, ConditionCheck, ElementReport, InvarianceConfig,
    InvarianceReport, Outcome,
};
pub use measure::{Atom, JumpMeasureSpec};
pub use path::{sample_levy_path, EuclidPath, JumpRecord};
pub use pushforward::{
    angle_radius_bins, pushforward_atoms, sample_poisson_atoms, time_angle_chi_square, PoissonAtom,
};

/// Generating triplet `(a, ν, b)` with respect to the cutoff `1(|x| < 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripletDoc<T>", into = "TripletDoc<T>")]
#[serde(bound = "T: Real")]
pub struct LevyTriplet<T: Real> {
    pub a: Matrix<T>,
    /// `σ σ^⊤ = a`, the symmetric square root.
    pub sigma: Matrix<T>,
    pub b: Vec<T>,
    pub nu: JumpMeasureSpec<T>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
struct TripletDoc<T: Real> {
    a: Matrix<T>,
    b: Vec<T>,
    #[serde(default)]
    nu: JumpMeasureSpec<T>,
}

impl<T: Real> TryFrom<TripletDoc<T>> for LevyTriplet<T> {
    type Error = Error;

    fn try_from(d: TripletDoc<T>) -> Result<Self> {
        LevyTriplet::new(d.a, d.b, d.nu)
    }
}

impl<T: Real> From<LevyTriplet<T>> for TripletDoc<T> {
    fn from(t: LevyTriplet<T>) -> Self {
        TripletDoc {
            a: t.a,
            b: t.b,
            nu: t.nu,
        }
    }
}

impl<T: Real> LevyTriplet<T> {
    pub fn new(a: Matrix<T>, b: Vec<T>, nu: JumpMeasureSpec<T>) -> Result<Self> {
        let d = b.len();
        if a.rows() != d || a.cols() != d {
            return Err(Error::InvalidParameter(format!(
                "covariance is {}x{} but drift has length {d}",
                a.rows(),
                a.cols()
            )));
        }
        let scale = a.max_abs().max(T::one());
        if a.sub(&a.transpose()).max_abs() > T::c(1e-10) * scale {
            return Err(Error::InvalidParameter("covariance must be symmetric".into()));
        }
        let (vals, _) = a.symmetric_eigen();
        if vals.iter().any(|&v| v < T::c(-1e-12) * scale) {
            return Err(Error::InvalidParameter("covariance must be positive semidefinite".into()));
        }
        nu.validate(d)?;
        let sigma = a.psd_sqrt();
        if sigma.mul(&sigma.transpose()).sub(&a).max_abs() > T::c(1e-10) * scale {
            return Err(Error::InvalidParameter("covariance square root failed".into()));
        }
        Ok(Self { a, sigma, b, nu })
    }

    pub fn zero(d: usize) -> Self {
        Self::new(Matrix::zeros(d, d), vec![T::zero(); d], JumpMeasureSpec::None).expect("valid")
    }

    /// `(c I, none, 0)`.
    pub fn brownian(d: usize, c: T) -> Self {
        Self::new(Matrix::identity(d).scale(c), vec![T::zero(); d], JumpMeasureSpec::None).expect("valid")
    }

    pub fn drift(b: Vec<T>) -> Self {
        let d = b.len();
        Self::new(Matrix::zeros(d, d), b, JumpMeasureSpec::None).expect("valid")
    }

    pub fn with_jumps(mut self, nu: JumpMeasureSpec<T>) -> Result<Self> {
        nu.validate(self.dim())?;
        self.nu = nu;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Drift of the simulated process: `b − ∫_{|x|<1} x ν(dx)` over the
    /// simulated part of `ν`.
    pub fn effective_drift(&self) -> Vec<T> {
        let c = self.nu.compensator(self.dim());
        self.b.iter().zip(&c).map(|(&b, &c)| b - c).collect()
    }

    pub fn has_diffusion(&self) -> bool {
        self.a.max_abs() > T::zero()
    }
}
