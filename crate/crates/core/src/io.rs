//! JSON Lines and CSV export of paths, one record per grid point.

use std::io::Write;

use serde::Serialize;

use crate::levy::EuclidPath;
use crate::marcus::{BundlePath, ManifoldPath};
use crate::scalar::Real;

#[derive(Serialize)]
struct PointRef<'a, T> {
    chart: usize,
    x: &'a [T],
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<Vec<Vec<T>>>,
}

#[derive(Serialize)]
struct JumpOut<'a, T> {
    pre: PointRef<'a, T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_y: Option<&'a [T]>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    j: Option<&'a [T]>,
}

#[derive(Serialize)]
struct Record<'a, T> {
    t: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    chart: Option<usize>,
    x: &'a [T],
    #[serde(skip_serializing_if = "Option::is_none")]
    r: Option<Vec<Vec<T>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    jump: Option<JumpOut<'a, T>>,
}

fn line<W: Write, S: Serialize>(w: &mut W, rec: &S) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, rec)?;
    w.write_all(b"\n")
}

pub fn write_bundle_jsonl<T: Real, W: Write>(path: &BundlePath<T>, w: &mut W) -> std::io::Result<()> {
    for (i, (t, f)) in path.times.iter().zip(&path.frames).enumerate() {
        let jump = path.jump_at(i).map(|j| JumpOut {
            pre: PointRef {
                chart: j.pre.chart,
                x: &j.pre.x,
                r: Some(j.pre.r.to_rows()),
            },
            delta_y: Some(&j.delta_y),
            j: None,
        });
        line(
            w,
            &Record {
                t: *t,
                chart: Some(f.chart),
                x: &f.x,
                r: Some(f.r.to_rows()),
                jump,
            },
        )?;
    }
    Ok(())
}

pub fn write_manifold_jsonl<T: Real, W: Write>(path: &ManifoldPath<T>, w: &mut W) -> std::io::Result<()> {
    for (i, (t, p)) in path.times.iter().zip(&path.points).enumerate() {
        let jump = path.jump_at(i).map(|j| JumpOut {
            pre: PointRef {
                chart: j.pre.chart,
                x: &j.pre.x,
                r: None,
            },
            delta_y: None,
            j: Some(&j.j),
        });
        line(
            w,
            &Record {
                t: *t,
                chart: Some(p.chart),
                x: &p.x,
                r: None,
                jump,
            },
        )?;
    }
    Ok(())
}

pub fn write_euclid_jsonl<T: Real, W: Write>(path: &EuclidPath<T>, w: &mut W) -> std::io::Result<()> {
    for (i, (t, v)) in path.times.iter().zip(&path.values).enumerate() {
        let jump = path.jump_at(i).map(|j| JumpOut {
            pre: PointRef {
                chart: 0,
                x: &j.pre,
                r: None,
            },
            delta_y: Some(&j.delta),
            j: None,
        });
        line(
            w,
            &Record {
                t: *t,
                chart: None,
                x: v,
                r: None,
                jump,
            },
        )?;
    }
    Ok(())
}

fn csv_header<W: Write>(w: &mut W, d: usize, with_chart: bool) -> std::io::Result<()> {
    let mut cols = vec!["t".to_string()];
    if with_chart {
        cols.push("chart".into());
    }
    cols.extend((0..d).map(|k| format!("x{k}")));
    cols.push("jump".into());
    writeln!(w, "{}", cols.join(","))
}

fn csv_row<T: Real, W: Write>(w: &mut W, t: T, chart: Option<usize>, x: &[T], jump: bool) -> std::io::Result<()> {
    let mut cols = vec![t.as_f64().to_string()];
    if let Some(c) = chart {
        cols.push(c.to_string());
    }
    cols.extend(x.iter().map(|v| v.as_f64().to_string()));
    cols.push(u8::from(jump).to_string());
    writeln!(w, "{}", cols.join(","))
}

/// CSV of a manifold path (frames are dropped).
pub fn write_manifold_csv<T: Real, W: Write>(path: &ManifoldPath<T>, w: &mut W) -> std::io::Result<()> {
    csv_header(w, path.points.first().map_or(0, |p| p.x.len()), true)?;
    for (i, (t, p)) in path.times.iter().zip(&path.points).enumerate() {
        csv_row(w, *t, Some(p.chart), &p.x, path.jump_at(i).is_some())?;
    }
    Ok(())
}

pub fn write_euclid_csv<T: Real, W: Write>(path: &EuclidPath<T>, w: &mut W) -> std::io::Result<()> {
    csv_header(w, path.dim(), false)?;
    for (i, (t, v)) in path.times.iter().zip(&path.values).enumerate() {
        csv_row(w, *t, None, v, path.jump_at(i).is_some())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FramePoint;
    use crate::levy::{sample_levy_path, Atom, JumpMeasureSpec, LevyTriplet};
    use crate::linalg::Matrix;
    use crate::manifolds::build;
    use crate::marcus::{marcus_solve, project, MarcusConfig};
    use crate::rng::stream;

    #[test]
    fn records_are_one_per_grid_point() {
        let (m, _) = build::<f64>("torus:2").unwrap();
        let nu = JumpMeasureSpec::PointMasses {
            atoms: vec![Atom { x: vec![0.2, 0.1], weight: 4.0 }],
        };
        let t = LevyTriplet::new(Matrix::identity(2).scale(0.1), vec![0.0, 0.0], nu).unwrap();
        let y = sample_levy_path(&t, 1.0, 0.1, &mut stream(1, 0)).unwrap();
        let u = marcus_solve(&m, &y, &FramePoint::coordinate(0, vec![0.0, 0.0]), &MarcusConfig::default()).unwrap();
        let mut buf = Vec::new();
        write_bundle_jsonl(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), u.len());
        let jumps = text
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap())
            .filter(|v| v.get("jump").is_some())
            .count();
        assert_eq!(jumps, y.jumps.len());
        let mut csv = Vec::new();
        write_manifold_csv(&project(&u), &mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("t,chart,x0,x1,jump\n"));
    }
}
