//! Matrix Lie groups with the left-invariant connection `∇_{V_i}V_j = 0`.
//!
//! SO(3) is covered by four charts `g = g_c exp(hat x)` centred at `I` and
//! the half turns about the coordinate axes; the Heisenberg group uses its
//! matrix entries `(a, b, c)` as a single global chart.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{Chart, ChartPoint, Christoffel, Embedding, FramePoint, ManifoldSpec, SafeRegion, Transition};
use crate::linalg::Matrix;
use crate::scalar::Real;

pub const SO3_RADIUS: f64 = 2.8;

type ToGroup<T> = Arc<dyn Fn(&ChartPoint<T>) -> Matrix<T> + Send + Sync>;
type FromGroup<T> = Arc<dyn Fn(&Matrix<T>) -> ChartPoint<T> + Send + Sync>;
type FrameFn<T> = Arc<dyn Fn(usize, &[T]) -> Matrix<T> + Send + Sync>;

/// Matrix group together with the manifold carrying its left-invariant
/// connection.
#[derive(Clone)]
pub struct LieGroupSpec<T> {
    pub name: String,
    pub matrix_dim: usize,
    /// Lie algebra basis `V_1..V_d`.
    pub basis: Vec<Matrix<T>>,
    pub manifold: ManifoldSpec<T>,
    to_group: ToGroup<T>,
    from_group: FromGroup<T>,
    frame: FrameFn<T>,
}

impl<T: Real> fmt::Debug for LieGroupSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LieGroupSpec")
            .field("name", &self.name)
            .field("matrix_dim", &self.matrix_dim)
            .finish()
    }
}

impl<T: Real> LieGroupSpec<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn identity(&self) -> Matrix<T> {
        Matrix::identity(self.matrix_dim)
    }

    /// `Σ x^i V_i`.
    pub fn algebra_element(&self, x: &[T]) -> Matrix<T> {
        let n = self.matrix_dim;
        self.basis
            .iter()
            .zip(x)
            .fold(Matrix::zeros(n, n), |acc, (v, &c)| acc.add_scaled(c, v))
    }

    /// Group exponential of `Σ x^i V_i`.
    pub fn exp(&self, x: &[T]) -> Matrix<T> {
        self.algebra_element(x).expm()
    }

    pub fn product(&self, a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
        a.mul(b)
    }

    pub fn to_group(&self, p: &ChartPoint<T>) -> Matrix<T> {
        (self.to_group)(p)
    }

    pub fn from_group(&self, g: &Matrix<T>) -> ChartPoint<T> {
        (self.from_group)(g)
    }

    /// Left-invariant frame `(V_1, …, V_d)` at `p` in chart coordinates.
    pub fn left_invariant_frame(&self, p: &ChartPoint<T>) -> FramePoint<T> {
        FramePoint::new(p.chart, p.x.clone(), (self.frame)(p.chart, &p.x))
    }
}

pub fn hat<T: Real>(v: &[T]) -> Matrix<T> {
    let z = T::zero();
    Matrix::from_rows(&[
        vec![z, -v[2], v[1]],
        vec![v[2], z, -v[0]],
        vec![-v[1], v[0], z],
    ])
}

/// Rodrigues formula.
pub fn so3_exp<T: Real>(v: &[T]) -> Matrix<T> {
    let th2: T = v.iter().map(|&a| a * a).sum();
    let th = th2.sqrt();
    let (a, b) = if th < T::c(1e-4) {
        (T::one() - th2 / T::c(6.0), T::c(0.5) - th2 / T::c(24.0))
    } else {
        (th.sin() / th, (T::one() - th.cos()) / th2)
    };
    let k = hat(v);
    Matrix::identity(3).add_scaled(a, &k).add_scaled(b, &k.mul(&k))
}

/// Rotation vector of `r` with angle in `[0, π]`, via the unit quaternion.
pub fn so3_log<T: Real>(r: &Matrix<T>) -> Vec<T> {
    let m = |i, j| r[(i, j)];
    let tr = m(0, 0) + m(1, 1) + m(2, 2);
    let one = T::one();
    let quarter = T::c(0.25);
    let (w, x, y, z);
    if tr > m(0, 0).max(m(1, 1)).max(m(2, 2)) {
        let s = (one + tr).sqrt() * T::c(2.0);
        w = quarter * s;
        x = (m(2, 1) - m(1, 2)) / s;
        y = (m(0, 2) - m(2, 0)) / s;
        z = (m(1, 0) - m(0, 1)) / s;
    } else if m(0, 0) >= m(1, 1) && m(0, 0) >= m(2, 2) {
        let s = (one + m(0, 0) - m(1, 1) - m(2, 2)).sqrt() * T::c(2.0);
        w = (m(2, 1) - m(1, 2)) / s;
        x = quarter * s;
        y = (m(0, 1) + m(1, 0)) / s;
        z = (m(0, 2) + m(2, 0)) / s;
    } else if m(1, 1) >= m(2, 2) {
        let s = (one + m(1, 1) - m(0, 0) - m(2, 2)).sqrt() * T::c(2.0);
        w = (m(0, 2) - m(2, 0)) / s;
        x = (m(0, 1) + m(1, 0)) / s;
        y = quarter * s;
        z = (m(1, 2) + m(2, 1)) / s;
    } else {
        let s = (one + m(2, 2) - m(0, 0) - m(1, 1)).sqrt() * T::c(2.0);
        w = (m(1, 0) - m(0, 1)) / s;
        x = (m(0, 2) + m(2, 0)) / s;
        y = (m(1, 2) + m(2, 1)) / s;
        z = quarter * s;
    }
    let (w, x, y, z) = if w < T::zero() { (-w, -x, -y, -z) } else { (w, x, y, z) };
    let vn = (x * x + y * y + z * z).sqrt();
    if vn < T::c(1e-300).max(T::min_positive_value()) {
        return vec![T::zero(); 3];
    }
    let angle = T::c(2.0) * vn.atan2(w);
    let f = angle / vn;
    vec![f * x, f * y, f * z]
}

/// `A(θ) = 1/θ² − (1 + cos θ)/(2θ sin θ)` and its derivative.
fn jinv_coeff<T: Real>(th: T) -> (T, T) {
    if th < T::c(0.1) {
        let t2 = th * th;
        let a = T::c(1.0 / 12.0)
            + t2 * (T::c(1.0 / 720.0) + t2 * (T::c(1.0 / 30240.0) + t2 * T::c(1.0 / 1209600.0)));
        let da = th * (T::c(1.0 / 360.0) + t2 * (T::c(1.0 / 7560.0) + t2 * T::c(1.0 / 201600.0)));
        (a, da)
    } else {
        let half = th / T::c(2.0);
        let cot = half.cos() / half.sin();
        let csc2 = T::one() / (half.sin() * half.sin());
        let a = T::one() / (th * th) - cot / (T::c(2.0) * th);
        let da = -T::c(2.0) / (th * th * th) + csc2 / (T::c(4.0) * th) + cot / (T::c(2.0) * th * th);
        (a, da)
    }
}

/// Inverse right Jacobian `J_r^{-1}(x) = I + ½ hat x + A(θ) hat x²`: its
/// columns are the left-invariant fields in exponential coordinates.
pub fn right_jacobian_inv<T: Real>(x: &[T]) -> Matrix<T> {
    let th = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    let (a, _) = jinv_coeff(th);
    let k = hat(x);
    Matrix::identity(3)
        .add_scaled(T::c(0.5), &k)
        .add_scaled(a, &k.mul(&k))
}

/// Right Jacobian `J_r(x) = I − (1 − cos θ)/θ² hat x + (θ − sin θ)/θ³ hat x²`.
pub fn right_jacobian<T: Real>(x: &[T]) -> Matrix<T> {
    let th2: T = x.iter().map(|&v| v * v).sum();
    let th = th2.sqrt();
    let (b, c) = if th < T::c(1e-3) {
        (T::c(0.5) - th2 / T::c(24.0), T::c(1.0 / 6.0) - th2 / T::c(120.0))
    } else {
        ((T::one() - th.cos()) / th2, (th - th.sin()) / (th2 * th))
    };
    let k = hat(x);
    Matrix::identity(3).add_scaled(-b, &k).add_scaled(c, &k.mul(&k))
}

/// `Γ^k_{il} = −∂_i E^k_m (E^{-1})^m_l` for the frame `E = J_r^{-1}`.
pub fn so3_christoffel<T: Real>(x: &[T]) -> Christoffel<T> {
    let th = x.iter().map(|&v| v * v).sum::<T>().sqrt();
    let (a, da) = jinv_coeff(th);
    let k = hat(x);
    let k2 = k.mul(&k);
    let e_inv = right_jacobian(x);
    let mut g = Christoffel::zeros(3);
    for i in 0..3 {
        let mut ei = [T::zero(); 3];
        ei[i] = T::one();
        let hi = hat(&ei);
        // ∂_i (A hat x²) = A' x_i/θ hat x² + A (hat e_i hat x + hat x hat e_i)
        let radial = if th > T::zero() { da * x[i] / th } else { T::zero() };
        let d = hi
            .scale(T::c(0.5))
            .add_scaled(radial, &k2)
            .add_scaled(a, &hi.mul(&k).add(&k.mul(&hi)));
        let prod = d.mul(&e_inv);
        for kk in 0..3 {
            for l in 0..3 {
                g.set(kk, i, l, -prod[(kk, l)]);
            }
        }
    }
    g
}

fn half_turn<T: Real>(axis: usize) -> Matrix<T> {
    let mut d = [-T::one(); 3];
    d[axis] = T::one();
    Matrix::from_diag(&d)
}

fn so3_centers<T: Real>() -> Vec<Matrix<T>> {
    vec![Matrix::identity(3), half_turn(0), half_turn(1), half_turn(2)]
}

fn so3_from_group<T: Real>(centers: &[Matrix<T>], g: &Matrix<T>) -> ChartPoint<T> {
    let mut best: Option<(T, usize, Vec<T>)> = None;
    for (i, c) in centers.iter().enumerate() {
        let x = so3_log(&c.transpose().mul(g));
        let n = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        if best.as_ref().is_none_or(|(bn, _, _)| n < *bn) {
            best = Some((n, i, x));
        }
    }
    let (_, i, x) = best.expect("four charts");
    ChartPoint::new(i, x)
}

pub fn so3<T: Real>() -> Result<LieGroupSpec<T>> {
    let centers = so3_centers::<T>();
    let mut charts: Vec<Chart<T>> = (0..4)
        .map(|i| Chart::new(i, SafeRegion::ball(vec![T::zero(); 3], T::c(SO3_RADIUS))))
        .collect();
    for (i, chart) in charts.iter_mut().enumerate() {
        for j in 0..4 {
            if i == j {
                continue;
            }
            // centres are symmetric, so g_j^T g_i is again a half turn
            let rel = centers[j].transpose().mul(&centers[i]);
            let rel2 = rel.clone();
            chart.neighbors.push(Transition {
                to: j,
                map: Arc::new(move |x: &[T]| so3_log(&rel.mul(&so3_exp(x)))),
                jacobian: Arc::new(move |x: &[T]| {
                    let y = so3_log(&rel2.mul(&so3_exp(x)));
                    right_jacobian_inv(&y).mul(&right_jacobian(x))
                }),
            });
        }
    }
    let c_amb = centers.clone();
    let c_loc = centers.clone();
    let manifold = ManifoldSpec::new("lie:so3", 3, charts, Arc::new(|_, x: &[T]| so3_christoffel(x)))?
        .with_holonomy_generators(vec![Matrix::identity(3)])
        .with_embedding(Embedding {
            ambient_dim: 9,
            to_ambient: Arc::new(move |c, x: &[T]| c_amb[c].mul(&so3_exp(x)).as_slice().to_vec()),
            locate: Some(Arc::new(move |a: &[T]| {
                let g = Matrix::from_rows(&a.chunks(3).map(|r| r.to_vec()).collect::<Vec<_>>());
                Some(so3_from_group(&c_loc, &g))
            })),
        });
    let basis = (0..3)
        .map(|i| {
            let mut e = [T::zero(); 3];
            e[i] = T::one();
            hat(&e)
        })
        .collect();
    let c_to = centers.clone();
    let c_from = centers;
    Ok(LieGroupSpec {
        name: "so3".into(),
        matrix_dim: 3,
        basis,
        manifold,
        to_group: Arc::new(move |p| c_to[p.chart].mul(&so3_exp(&p.x))),
        from_group: Arc::new(move |g| so3_from_group(&c_from, g)),
        frame: Arc::new(|_, x: &[T]| right_jacobian_inv(x)),
    })
}

fn heis_matrix<T: Real>(a: T, b: T, c: T) -> Matrix<T> {
    let (z, o) = (T::zero(), T::one());
    Matrix::from_rows(&[vec![o, a, c], vec![z, o, b], vec![z, z, o]])
}

/// Heisenberg group of unipotent 3×3 matrices, basis `E12, E23, E13`.
pub fn heisenberg<T: Real>() -> Result<LieGroupSpec<T>> {
    let charts = vec![Chart::new(0, SafeRegion::unbounded(3))];
    let mut gamma = Christoffel::zeros(3);
    gamma.set(2, 0, 1, -T::one());
    let manifold = ManifoldSpec::new("lie:heisenberg", 3, charts, Arc::new(move |_, _| gamma.clone()))?
        .with_holonomy_generators(vec![Matrix::identity(3)])
        .with_embedding(Embedding {
            ambient_dim: 3,
            to_ambient: Arc::new(|_, x: &[T]| x.to_vec()),
            locate: Some(Arc::new(|a: &[T]| Some(ChartPoint::new(0, a.to_vec())))),
        });
    let (z, o) = (T::zero(), T::one());
    let basis = vec![heis_matrix(o, z, z), heis_matrix(z, o, z), heis_matrix(z, z, o)]
        .into_iter()
        .map(|m| m.sub(&Matrix::identity(3)))
        .collect();
    Ok(LieGroupSpec {
        name: "heisenberg".into(),
        matrix_dim: 3,
        basis,
        manifold,
        to_group: Arc::new(|p| heis_matrix(p.x[0], p.x[1], p.x[2])),
        from_group: Arc::new(|g| ChartPoint::new(0, vec![g[(0, 1)], g[(1, 2)], g[(0, 2)]])),
        frame: Arc::new(|_, x: &[T]| {
            let mut e = Matrix::identity(3);
            e[(2, 1)] = x[0];
            e
        }),
    })
}

pub fn lie_group<T: Real>(name: &str) -> Result<LieGroupSpec<T>> {
    match name {
        "so3" => so3(),
        "heisenberg" => heisenberg(),
        other => Err(Error::UnknownManifold(format!("lie:{other}"))),
    }
}
