//! Catalog of built-in manifolds.
//!
//! Names follow `name[:key=value,...]`, for example `torus:n=2`,
//! `cylinder:alpha=1/3`, `klein_bottle:dim=3`, `sphere:d=2`, `flat:d=3`,
//! `lie:so3`. A bare value is bound to the main parameter (`torus:2`).

pub mod cylinder;
pub mod holonomy;
pub mod lattice;
pub mod lie;
pub mod lie_compare;
pub mod sphere;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ManifoldSpec;
use crate::linalg::Matrix;
use crate::scalar::Real;

pub use holonomy::{holonomy_estimate, LoopFamily};
pub use lie::{lie_group, LieGroupSpec};
pub use lie_compare::{lie_marcus_vs_increment, LieComparison, LieComparisonConfig};

/// Closure enumeration stops after this many elements.
pub const CLOSURE_LIMIT: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HolonomyKind {
    Trivial,
    FiniteCyclic { order: usize },
    Z2Reflection,
    SpecialOrthogonal { dim: usize },
    DenseCyclic { alpha: f64 },
}

/// Declared holonomy group: generators plus a structural description.
#[derive(Clone, Debug, PartialEq)]
pub struct HolonomySpec<T: Real> {
    pub generators: Vec<Matrix<T>>,
    pub description: HolonomyKind,
}

impl<T: Real> HolonomySpec<T> {
    /// Elements of the group generated by `generators`, or `None` when it has
    /// more than `limit` elements (as found within `tol`).
    pub fn closure(&self, limit: usize, tol: T) -> Option<Vec<Matrix<T>>> {
        let d = self
            .generators
            .first()
            .map(|g| g.rows())
            .unwrap_or(1);
        let mut elems = vec![Matrix::identity(d)];
        let mut frontier = elems.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for a in &frontier {
                for g in &self.generators {
                    let p = a.mul(g);
                    if !elems.iter().any(|e| e.sub(&p).max_abs() <= tol) {
                        if elems.len() >= limit {
                            return None;
                        }
                        elems.push(p.clone());
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        Some(elems)
    }

    /// Checks the description against the generators; finite kinds are
    /// verified by enumerating the closure.
    pub fn is_consistent(&self) -> bool {
        if self.generators.iter().any(|g| g.inverse().is_none()) {
            return false;
        }
        let tol = T::c(1e-9);
        let closure = self.closure(CLOSURE_LIMIT, tol);
        match &self.description {
            HolonomyKind::Trivial => closure.is_some_and(|c| c.len() == 1),
            HolonomyKind::FiniteCyclic { order } => closure.is_some_and(|c| c.len() == *order),
            HolonomyKind::Z2Reflection => closure.is_some_and(|c| c.len() == 2),
            HolonomyKind::SpecialOrthogonal { .. } => self
                .generators
                .iter()
                .all(|g| g.is_orthogonal(tol) && g.det() > T::zero()),
            HolonomyKind::DenseCyclic { .. } => closure.is_none(),
        }
    }

    /// Whether `−I` belongs to the declared group.
    pub fn contains_negative_identity(&self) -> bool {
        let d = self.generators.first().map(|g| g.rows()).unwrap_or(1);
        match self.description {
            HolonomyKind::SpecialOrthogonal { dim } => dim % 2 == 0,
            _ => {
                let minus = Matrix::<T>::identity(d).scale(-T::one());
                self.closure(CLOSURE_LIMIT, T::c(1e-9))
                    .is_some_and(|c| c.iter().any(|g| g.sub(&minus).max_abs() <= T::c(1e-9)))
            }
        }
    }
}

/// Parsed `name:key=value` string.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldName {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl ManifoldName {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n.trim().to_string(), r.trim()),
            None => (s.to_string(), ""),
        };
        let mut params = BTreeMap::new();
        if name == "lie" {
            params.insert("group".to_string(), rest.to_string());
            return Ok(Self { name, params });
        }
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => {
                    params.insert(k.trim().to_string(), v.trim().to_string());
                }
                None => {
                    params.insert(String::new(), part.to_string());
                }
            }
        }
        Ok(Self { name, params })
    }

    fn get(&self, keys: &[&str]) -> Option<&str> {
        keys.iter()
            .chain(std::iter::once(&""))
            .find_map(|k| self.params.get(*k).map(String::as_str))
    }

    fn number(&self, keys: &[&str], default: f64) -> Result<f64> {
        match self.get(keys) {
            None => Ok(default),
            Some(v) => parse_number(v),
        }
    }

    fn count(&self, keys: &[&str], default: usize) -> Result<usize> {
        let v = self.number(keys, default as f64)?;
        if v < 1.0 || v.fract() != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{} expects a positive integer, got {v}",
                self.name
            )));
        }
        Ok(v as usize)
    }
}

/// Parses `0.5`, `1/3` or `-2`.
pub fn parse_number(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("not a number: '{s}'"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

/// Smallest denominator `q ≤ limit` with `α q` within `1e-9` of an integer.
fn rational_order(alpha: f64, limit: usize) -> Option<usize> {
    (1..=limit).find(|&q| {
        let v = alpha * q as f64;
        (v - v.round()).abs() < 1e-9
    })
}

/// Builds a catalog manifold and its declared holonomy.
pub fn build<T: Real>(spec: &str) -> Result<(ManifoldSpec<T>, HolonomySpec<T>)> {
    let n = ManifoldName::parse(spec)?;
    let (manifold, hol) = match n.name.as_str() {
        "flat" => {
            let d = n.count(&["d", "dim", "n"], 2)?;
            let hol = HolonomySpec {
                generators: vec![Matrix::identity(d)],
                description: HolonomyKind::Trivial,
            };
            (lattice::flat(d)?, hol)
        }
        "torus" => {
            let d = n.count(&["n", "dim", "d"], 2)?;
            let hol = HolonomySpec {
                generators: vec![Matrix::identity(d)],
                description: HolonomyKind::Trivial,
            };
            (lattice::torus(d)?, hol)
        }
        "klein_bottle" | "klein" => {
            let dim = match n.params.get("n") {
                Some(v) => parse_number(v)? as usize + 1,
                None => n.count(&["dim", "d"], 2)?,
            };
            if dim < 2 {
                return Err(Error::InvalidParameter("klein_bottle needs dim ≥ 2".into()));
            }
            let hol = HolonomySpec {
                generators: vec![lattice::klein_generator(dim)],
                description: HolonomyKind::Z2Reflection,
            };
            (lattice::klein_bottle(dim)?, hol)
        }
        "sphere" => {
            let d = n.count(&["d", "dim", "n"], 2)?;
            let hol = HolonomySpec {
                generators: sphere::rotation_generators(d),
                description: if d == 1 {
                    HolonomyKind::Trivial
                } else {
                    HolonomyKind::SpecialOrthogonal { dim: d }
                },
            };
            (sphere::sphere(d)?, hol)
        }
        "cylinder" => {
            let alpha = n.number(&["alpha", "a"], 0.5)?;
            let g = cylinder::holonomy_generator(T::c(alpha));
            let description = match rational_order(alpha, CLOSURE_LIMIT) {
                Some(1) => HolonomyKind::Trivial,
                Some(q) => HolonomyKind::FiniteCyclic { order: q },
                None => HolonomyKind::DenseCyclic { alpha },
            };
            let hol = HolonomySpec {
                generators: vec![g],
                description,
            };
            (cylinder::cylinder(T::c(alpha))?, hol)
        }
        "lie" => {
            let g = lie::lie_group::<T>(n.get(&["group"]).unwrap_or(""))?;
            let hol = HolonomySpec {
                generators: vec![Matrix::identity(3)],
                description: HolonomyKind::Trivial,
            };
            (g.manifold, hol)
        }
        other => return Err(Error::UnknownManifold(other.to_string())),
    };
    let manifold = manifold.with_holonomy_generators(hol.generators.clone());
    Ok((manifold, hol))
}
