//! User-defined manifolds in JSON.
//!
//! ```json
//! {
//!   "name": "strip",
//!   "dim": 2,
//!   "charts": [
//!     {"id": 0, "center": [0, 0], "radius": null,
//!      "neighbors": [{"to": 1, "matrix": [[1, 0], [0, 1]], "offset": [1, 0]}]}
//!   ],
//!   "christoffel": [{"chart": 0, "terms": [{"k": 1, "i": 0, "j": 0, "coeff": -1.0, "powers": [0, 0]}]}]
//! }
//! ```
//!
//! Transitions are affine (`x' = M x + offset`) or `"kind": "inversion"`
//! (`x' = x/|x|²`). A `null` radius makes the chart global. `"christoffel"`
//! is either a list of per-chart polynomial tables or `"builtin:<name>"`,
//! which borrows the connection of a catalog manifold chart by chart.

use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;

use super::{Chart, Christoffel, ChristoffelFn, ManifoldSpec, SafeRegion, Transition};

#[derive(Debug, Deserialize)]
struct ManifoldDoc {
    #[serde(default)]
    name: Option<String>,
    dim: usize,
    charts: Vec<ChartDoc>,
    christoffel: ChristoffelDoc,
    #[serde(default)]
    holonomy_generators: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Deserialize)]
struct ChartDoc {
    id: usize,
    center: Vec<f64>,
    radius: Option<f64>,
    #[serde(default)]
    bounded_axes: Option<Vec<bool>>,
    #[serde(default)]
    neighbors: Vec<NeighborDoc>,
}

#[derive(Debug, Deserialize)]
struct NeighborDoc {
    to: usize,
    #[serde(default)]
    kind: Option<String>,
    #[serde(default)]
    matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    offset: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ChristoffelDoc {
    Builtin(String),
    Tables(Vec<ChartTable>),
}

#[derive(Debug, Deserialize, Clone)]
struct ChartTable {
    chart: usize,
    terms: Vec<Term>,
}

#[derive(Debug, Deserialize, Clone)]
struct Term {
    k: usize,
    i: usize,
    j: usize,
    coeff: f64,
    #[serde(default)]
    powers: Vec<u32>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn transition<T: Real>(dim: usize, n: &NeighborDoc) -> Result<Transition<T>> {
    match n.kind.as_deref().unwrap_or("affine") {
        "affine" => {
            let m = match &n.matrix {
                Some(rows) => Matrix::try_from_rows(
                    &rows
                        .iter()
                        .map(|r| r.iter().map(|&v| T::c(v)).collect())
                        .collect::<Vec<_>>(),
                )
                .ok_or_else(|| parse_err("ragged transition matrix"))?,
                None => Matrix::identity(dim),
            };
            if m.rows() != dim || m.cols() != dim {
                return Err(parse_err("transition matrix has wrong shape"));
            }
            let off: Vec<T> = n
                .offset
                .clone()
                .unwrap_or_else(|| vec![0.0; dim])
                .into_iter()
                .map(T::c)
                .collect();
            if off.len() != dim {
                return Err(parse_err("transition offset has wrong length"));
            }
            let m2 = m.clone();
            Ok(Transition {
                to: n.to,
                map: Arc::new(move |x: &[T]| {
                    m.mul_vec(x).iter().zip(&off).map(|(&a, &b)| a + b).collect()
                }),
                jacobian: Arc::new(move |_: &[T]| m2.clone()),
            })
        }
        "inversion" => Ok(Transition {
            to: n.to,
            map: Arc::new(|x: &[T]| {
                let s: T = x.iter().map(|&v| v * v).sum();
                x.iter().map(|&v| v / s).collect()
            }),
            jacobian: Arc::new(|x: &[T]| inversion_jacobian(x)),
        }),
        other => Err(parse_err(format!("unknown transition kind '{other}'"))),
    }
}

/// Jacobian of `x ↦ x/|x|²`: `(δ_ij |x|² − 2 x_i x_j)/|x|⁴`.
pub(crate) fn inversion_jacobian<T: Real>(x: &[T]) -> Matrix<T> {
    let d = x.len();
    let s: T = x.iter().map(|&v| v * v).sum();
    let mut j = Matrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let delta = if a == b { s } else { T::zero() };
            j[(a, b)] = (delta - T::c(2.0) * x[a] * x[b]) / (s * s);
        }
    }
    j
}

fn polynomial_christoffel<T: Real>(dim: usize, n_charts: usize, tables: Vec<ChartTable>) -> Result<ChristoffelFn<T>> {
    let mut per_chart: Vec<Vec<Term>> = vec![Vec::new(); n_charts];
    for t in tables {
        if t.chart >= n_charts {
            return Err(parse_err(format!("christoffel table for unknown chart {}", t.chart)));
        }
        for term in &t.terms {
            if term.k >= dim || term.i >= dim || term.j >= dim {
                return Err(parse_err("christoffel index out of range"));
            }
            if !term.powers.is_empty() && term.powers.len() != dim {
                return Err(parse_err("christoffel powers have wrong length"));
            }
        }
        per_chart[t.chart].extend(t.terms);
    }
    Ok(Arc::new(move |chart: usize, x: &[T]| {
        let mut g = Christoffel::zeros(dim);
        for term in per_chart.get(chart).into_iter().flatten() {
            let mono = term
                .powers
                .iter()
                .zip(x)
                .fold(T::one(), |acc, (&p, &xi)| acc * xi.powi(p as i32));
            let v = g.get(term.k, term.i, term.j) + T::c(term.coeff) * mono;
            g.set(term.k, term.i, term.j, v);
        }
        g
    }))
}

/// Parses a manifold document.
pub fn manifold_from_json<T: Real>(text: &str) -> Result<ManifoldSpec<T>> {
    let doc: ManifoldDoc = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    manifold_from_value(doc)
}

fn manifold_from_value<T: Real>(doc: ManifoldDoc) -> Result<ManifoldSpec<T>> {
    let dim = doc.dim;
    let mut charts = Vec::with_capacity(doc.charts.len());
    for c in &doc.charts {
        if c.center.len() != dim {
            return Err(parse_err(format!("chart {} centre has wrong length", c.id)));
        }
        let mut region = SafeRegion::ball(
            c.center.iter().map(|&v| T::c(v)).collect(),
            c.radius.map(T::c).unwrap_or_else(T::infinity),
        );
        if let Some(axes) = &c.bounded_axes {
            if axes.len() != dim {
                return Err(parse_err("bounded_axes has wrong length"));
            }
            region.bounded_axes = axes.clone();
        }
        let mut chart = Chart::new(c.id, region);
        for n in &c.neighbors {
            chart.neighbors.push(transition(dim, n)?);
        }
        charts.push(chart);
    }
    let christoffel = match doc.christoffel {
        ChristoffelDoc::Tables(t) => polynomial_christoffel(dim, charts.len(), t)?,
        ChristoffelDoc::Builtin(s) => {
            let name = s
                .strip_prefix("builtin:")
                .ok_or_else(|| parse_err(format!("christoffel string '{s}' lacks builtin: prefix")))?;
            let (m, _) = crate::manifolds::build::<T>(name)?;
            m.christoffel_fn()
        }
    };
    let mut spec = ManifoldSpec::new(doc.name.unwrap_or_else(|| "custom".into()), dim, charts, christoffel)?;
    if let Some(gens) = doc.holonomy_generators {
        let mats = gens
            .iter()
            .map(|g| {
                Matrix::try_from_rows(
                    &g.iter()
                        .map(|r| r.iter().map(|&v| T::c(v)).collect())
                        .collect::<Vec<_>>(),
                )
                .ok_or_else(|| parse_err("ragged holonomy generator"))
            })
            .collect::<Result<Vec<_>>>()?;
        spec = spec.with_holonomy_generators(mats);
    }
    Ok(spec)
}
