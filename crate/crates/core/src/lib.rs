//! Lévy processes on manifolds with a connection.
//!
//! Processes are built by solving Marcus SDEs on the frame bundle: a
//! Euclidean Lévy driver `Y` rolls a frame `U` along horizontal vector
//! fields, jumps follow the time-one flows of the jump-scaled fields, and
//! the manifold process is the projection `X = π(U)`. The crate also
//! reconstructs the lift and anti-development of a given path from its jump
//! data, evaluates generators pointwise and ships a catalog of manifolds
//! with known holonomy.
//!
//! Everything is generic over the scalar via [`Real`] (`f32` or `f64`);
//! the `*F64` aliases cover the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generator;
pub mod geometry;
pub mod io;
pub mod levy;
pub mod lift;
pub mod linalg;
pub mod manifolds;
pub mod marcus;
pub mod rng;
pub mod scalar;
pub mod stats;

pub use error::{Error, Result};
pub use levy as euclid_levy;
pub use linalg::Matrix;
pub use scalar::Real;

pub type MatrixF64 = linalg::Matrix<f64>;
pub type ManifoldSpecF64 = geometry::ManifoldSpec<f64>;
pub type FramePointF64 = geometry::FramePoint<f64>;
pub type ChartPointF64 = geometry::ChartPoint<f64>;
pub type CurveF64 = geometry::Curve<f64>;
pub type LevyTripletF64 = levy::LevyTriplet<f64>;
pub type EuclidPathF64 = levy::EuclidPath<f64>;
pub type BundlePathF64 = marcus::BundlePath<f64>;
pub type ManifoldPathF64 = marcus::ManifoldPath<f64>;
pub type JumpDataF64 = lift::JumpData<f64>;
