//! Flat space and its lattice quotients: the torus `R^n/Z^n` and the Klein
//! bottle `R^{n+1}/⟨(x, y) ↦ ((−1)^w x + z, y + w)⟩`.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::{Chart, ChartPoint, Christoffel, Embedding, ManifoldSpec, SafeRegion, Transition};
use crate::linalg::Matrix;
use crate::scalar::Real;

/// Safe radius of every lattice chart (below ½ so each ball embeds).
pub const LATTICE_RADIUS: f64 = 0.49;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Quotient {
    Torus,
    Klein,
}

/// Lattice points per axis: the smallest `k ≥ 2` for which every point is
/// well inside the switching radius of some chart.
fn per_axis(dim: usize) -> usize {
    let need = (dim as f64).sqrt() / (2.0 * 0.37);
    (need.ceil() as usize).max(2)
}

fn centers(dim: usize, k: usize) -> Vec<Vec<f64>> {
    let total = k.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            let mut c = vec![0.0; dim];
            for slot in c.iter_mut().rev() {
                *slot = (idx % k) as f64 / k as f64;
                idx /= k;
            }
            c
        })
        .collect()
}

/// Deck transformation `x ↦ (−1)^w x + z` (Klein: sign on the first `n`
/// axes, shift `w` on the last) that carries `x` nearest to `target`.
fn deck<T: Real>(q: Quotient, x: &[T], target: &[T]) -> (Vec<T>, bool) {
    let d = x.len();
    match q {
        Quotient::Torus => (
            x.iter()
                .zip(target)
                .map(|(&xi, &bi)| xi + (bi - xi).round())
                .collect(),
            false,
        ),
        Quotient::Klein => {
            let w = (target[d - 1] - x[d - 1]).round();
            let flip = (w.as_f64() as i64).rem_euclid(2) == 1;
            let mut y: Vec<T> = x.to_vec();
            for (yi, &bi) in y.iter_mut().zip(target).take(d - 1) {
                let s = if flip { -*yi } else { *yi };
                *yi = s + (bi - s).round();
            }
            y[d - 1] = x[d - 1] + w;
            (y, flip)
        }
    }
}

fn lattice_manifold<T: Real>(name: String, dim: usize, q: Quotient) -> Result<ManifoldSpec<T>> {
    let k = per_axis(dim);
    let cs: Vec<Vec<T>> = centers(dim, k)
        .into_iter()
        .map(|c| c.into_iter().map(T::c).collect())
        .collect();
    let mut charts: Vec<Chart<T>> = cs
        .iter()
        .enumerate()
        .map(|(i, c)| Chart::new(i, SafeRegion::ball(c.clone(), T::c(LATTICE_RADIUS))))
        .collect();
    for (i, chart) in charts.iter_mut().enumerate() {
        for (j, target) in cs.iter().enumerate() {
            if i == j {
                continue;
            }
            let tm = target.clone();
            let tj = target.clone();
            chart.neighbors.push(Transition {
                to: j,
                map: Arc::new(move |x: &[T]| deck(q, x, &tm).0),
                jacobian: Arc::new(move |x: &[T]| {
                    let (_, flip) = deck(q, x, &tj);
                    let d = x.len();
                    let mut m = Matrix::identity(d);
                    if flip {
                        for a in 0..d - 1 {
                            m[(a, a)] = -T::one();
                        }
                    }
                    m
                }),
            });
        }
    }
    let flat: crate::geometry::ChristoffelFn<T> = Arc::new(move |_, _| Christoffel::zeros(dim));
    let spec = ManifoldSpec::new(name, dim, charts, flat)?;
    let embedding = match q {
        Quotient::Torus => torus_embedding(dim, cs),
        Quotient::Klein => klein_embedding(dim),
    };
    Ok(spec.with_embedding(embedding))
}

/// Chart whose centre is closest to the point with coordinates `x` modulo
/// the torus lattice, together with the coordinates in that chart.
fn nearest_chart<T: Real>(cs: &[Vec<T>], x: &[T]) -> ChartPoint<T> {
    let mut best: Option<(T, usize, Vec<T>)> = None;
    for (i, c) in cs.iter().enumerate() {
        let (y, _) = deck(Quotient::Torus, x, c);
        let dist = crate::scalar::dist(&y, c);
        if best.as_ref().is_none_or(|(bd, _, _)| dist < *bd) {
            best = Some((dist, i, y));
        }
    }
    let (_, i, y) = best.expect("at least one chart");
    ChartPoint::new(i, y)
}

fn torus_embedding<T: Real>(dim: usize, cs: Vec<Vec<T>>) -> Embedding<T> {
    let two_pi = T::TAU();
    Embedding {
        ambient_dim: 2 * dim,
        to_ambient: Arc::new(move |_, x: &[T]| {
            x.iter()
                .flat_map(|&v| [(two_pi * v).cos(), (two_pi * v).sin()])
                .collect()
        }),
        locate: Some(Arc::new(move |a: &[T]| {
            let x: Vec<T> = a
                .chunks(2)
                .map(|p| p[1].atan2(p[0]) / two_pi)
                .collect();
            Some(nearest_chart(&cs, &x))
        })),
    }
}

/// Immersion by functions invariant under the deck group.
fn klein_embedding<T: Real>(dim: usize) -> Embedding<T> {
    let two_pi = T::TAU();
    let pi = T::PI();
    Embedding {
        ambient_dim: 3 * (dim - 1) + 2,
        to_ambient: Arc::new(move |_, x: &[T]| {
            let y = x[dim - 1];
            let mut out = Vec::with_capacity(3 * (dim - 1) + 2);
            for &v in &x[..dim - 1] {
                let s = (two_pi * v).sin();
                out.push((two_pi * v).cos());
                out.push(s * (pi * y).cos());
                out.push(s * (pi * y).sin());
            }
            out.push((two_pi * y).cos());
            out.push((two_pi * y).sin());
            out
        }),
        locate: None,
    }
}

pub fn flat<T: Real>(dim: usize) -> Result<ManifoldSpec<T>> {
    let charts = vec![Chart::new(0, SafeRegion::unbounded(dim))];
    let spec = ManifoldSpec::new(
        format!("flat:d={dim}"),
        dim,
        charts,
        Arc::new(move |_, _| Christoffel::zeros(dim)),
    )?;
    Ok(spec.with_embedding(Embedding {
        ambient_dim: dim,
        to_ambient: Arc::new(|_, x: &[T]| x.to_vec()),
        locate: Some(Arc::new(|a: &[T]| Some(ChartPoint::new(0, a.to_vec())))),
    }))
}

pub fn torus<T: Real>(n: usize) -> Result<ManifoldSpec<T>> {
    lattice_manifold(format!("torus:n={n}"), n, Quotient::Torus)
}

/// Klein bottle `K^{dim}`: the first `dim − 1` axes are flipped by the deck
/// step along the last axis.
pub fn klein_bottle<T: Real>(dim: usize) -> Result<ManifoldSpec<T>> {
    lattice_manifold(format!("klein_bottle:dim={dim}"), dim, Quotient::Klein)
}

/// `diag(−I_n, 1)`.
pub fn klein_generator<T: Real>(dim: usize) -> Matrix<T> {
    let mut g = Matrix::identity(dim);
    for a in 0..dim - 1 {
        g[(a, a)] = -T::one();
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_counts() {
        assert_eq!(torus::<f64>(2).unwrap().charts.len(), 4);
        assert_eq!(torus::<f64>(1).unwrap().charts.len(), 2);
        assert_eq!(klein_bottle::<f64>(3).unwrap().charts.len(), 27);
    }

    #[test]
    fn every_point_has_a_comfortable_chart() {
        for dim in 1..=4 {
            let k = per_axis(dim);
            let worst = (dim as f64).sqrt() / (2.0 * k as f64);
            assert!(worst < 0.8 * LATTICE_RADIUS, "dim {dim}");
        }
    }

    #[test]
    fn klein_deck_flips_on_odd_steps() {
        let (y, flip) = deck(Quotient::Klein, &[0.1_f64, 0.95], &[0.0, 0.0]);
        assert!(flip);
        assert!((y[0] + 0.1).abs() < 1e-15 && (y[1] + 0.05).abs() < 1e-15);
        let (y, flip) = deck(Quotient::Klein, &[0.4_f64, 0.1], &[0.5, 0.0]);
        assert!(!flip);
        assert_eq!(y, vec![0.4, 0.1]);
    }
}
