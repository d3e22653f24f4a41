mod common;

use common::{chart0_point, manifold, CATALOG};
use manifold_levy::geometry::{chart_transition, christoffel_at, loop_transport, ChartPoint, Curve};
use manifold_levy::levy::{Atom, JumpMeasureSpec, LevyTriplet};
use manifold_levy::manifolds::holonomy::rotation_angle;
use manifold_levy::manifolds::lie::so3_exp;
use manifold_levy::manifolds::{build, holonomy_estimate, lie_group, LieGroupSpec, LoopFamily};
use manifold_levy::marcus::{simulate_path, SimulationConfig};
use manifold_levy::Matrix;
use proptest::prelude::*;

#[test]
fn charts_round_trip_and_christoffels_are_finite() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
    for name in CATALOG {
        let m = manifold(name);
        for chart in &m.charts {
            let region = &chart.safe_region;
            let r = if region.radius.is_finite() { region.radius } else { 3.0 };
            for _ in 0..50 {
                let x: Vec<f64> = region
                    .center
                    .iter()
                    .map(|c| c + rng.random_range(-0.95..0.95) * r / (m.dim as f64).sqrt())
                    .collect();
                let p = ChartPoint::new(chart.id, x);
                assert!(christoffel_at(&m, p.chart, &p.x).unwrap().is_finite(), "{name}");
                for tr in &chart.neighbors {
                    let Ok((q, _)) = chart_transition(&m, &p, tr.to, None) else { continue };
                    let (back, _) = chart_transition(&m, &q, p.chart, None).unwrap();
                    let err = back.x.iter().zip(&p.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    assert!(err <= 1e-10, "{name}: chart {} → {} round trip {err}", p.chart, tr.to);
                }
            }
        }
    }
}

#[test]
fn abelian_holonomy_commutes_with_declared_generators() {
    for name in ["torus:2", "cylinder:0.25", "cylinder:1/3", "cylinder:0.3"] {
        let (m, hol) = build::<f64>(name).unwrap();
        let base = chart0_point(&m, &[0.2, -0.1], 0.3);
        let mats = holonomy_estimate(&m, &base, &LoopFamily::Wraps, 4).unwrap();
        for t in &mats {
            for g in &hol.generators {
                assert!(t.mul(g).sub(&g.mul(t)).max_abs() <= 1e-6, "{name}");
            }
        }
    }
}

#[test]
fn cylinder_wraps_rotate_by_multiples() {
    let m = manifold("cylinder:1/3");
    let base = chart0_point(&m, &[0.0, 0.0], 0.0);
    let mats = holonomy_estimate(&m, &base, &LoopFamily::Wraps, 3).unwrap();
    for (k, t) in mats.iter().enumerate() {
        let expected = Matrix::rotation2(std::f64::consts::TAU * k as f64 / 3.0);
        assert!(t.sub(&expected).frobenius_norm() <= 1e-6, "k = {k}");
    }
}

#[test]
fn octant_triangle_rotates_by_a_right_angle() {
    let m = manifold("sphere:2");
    let base = ChartPoint::new(0, vec![0.0, 0.0]);
    let t = &holonomy_estimate(&m, &base, &LoopFamily::OctantTriangle, 1).unwrap()[0];
    let angle = rotation_angle(t).abs();
    assert!((angle - std::f64::consts::FRAC_PI_2).abs() <= 1e-4, "angle {angle}");
}

fn square(m: &manifold_levy::ManifoldSpecF64, base: &ChartPoint<f64>, side: f64) -> Curve<f64> {
    let legs = [[side, 0.0], [0.0, side], [-side, 0.0], [0.0, -side]];
    let mut curve: Option<Curve<f64>> = None;
    for leg in legs {
        let start = curve.as_ref().map_or_else(|| base.clone(), |c| c.end().clone());
        let piece = Curve::straight_walk(m, start, &leg, 500).unwrap();
        curve = Some(match curve {
            Some(c) => c.concat(&piece),
            None => piece,
        });
    }
    curve.unwrap()
}

#[test]
fn loop_transports_compose() {
    for name in ["sphere:2", "cylinder:0.3", "klein_bottle:2"] {
        let m = manifold(name);
        let base = chart0_point(&m, &[0.1, 0.2], 0.3);
        let a = square(&m, &base, 0.4);
        let b = match name {
            "sphere:2" => square(&m, &base, -0.3),
            "cylinder:0.3" => Curve::straight_walk(&m, base.clone(), &[std::f64::consts::TAU, 0.0], 4000).unwrap(),
            _ => Curve::straight_walk(&m, base.clone(), &[1.0, 0.0], 2000).unwrap(),
        };
        let r0 = Matrix::identity(2);
        let ta = loop_transport(&m, &a, &r0).unwrap();
        let tb = loop_transport(&m, &b, &r0).unwrap();
        let tab = loop_transport(&m, &a.concat(&b), &r0).unwrap();
        assert!(tab.sub(&tb.mul(&ta)).max_abs() <= 1e-6, "{name}");
    }
}

fn lie_triplet() -> LevyTriplet<f64> {
    let nu = JumpMeasureSpec::PointMasses {
        atoms: vec![
            Atom { x: vec![0.5, -0.3, 0.8], weight: 2.0 },
            Atom { x: vec![-0.2, 0.9, 0.1], weight: 1.5 },
        ],
    };
    LevyTriplet::new(Matrix::identity(3).scale(0.3), vec![0.2, 0.0, -0.1], nu).unwrap()
}

fn left_translation_gap(group: &LieGroupSpec<f64>, g0: &Matrix<f64>, seed: u64, grid_step: f64) -> f64 {
    let m = &group.manifold;
    let cfg = SimulationConfig { grid_step, ..SimulationConfig::default() };
    let t = lie_triplet();
    let from_id = group.left_invariant_frame(&group.from_group(&group.identity()));
    let from_g0 = group.left_invariant_frame(&group.from_group(g0));
    let a = simulate_path(m, &t, &from_id, 1.0, &cfg, seed, 0).unwrap();
    let b = simulate_path(m, &t, &from_g0, 1.0, &cfg, seed, 0).unwrap();
    assert_eq!(a.x.points.len(), b.x.points.len());
    a.x.points
        .iter()
        .zip(&b.x.points)
        .map(|(p, q)| g0.mul(&group.to_group(p)).sub(&group.to_group(q)).max_abs())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn heisenberg_dynamics_commute_with_left_translation(seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0) {
        let group = lie_group::<f64>("heisenberg").unwrap();
        let g0 = group.exp(&[a, b, c]);
        prop_assert!(left_translation_gap(&group, &g0, seed, 0.01) <= 1e-6);
    }

    #[test]
    fn so3_dynamics_commute_with_left_translation(seed in any::<u64>(), axis in 0usize..3) {
        let group = lie_group::<f64>("so3").unwrap();
        let mut v = [0.0; 3];
        v[axis] = std::f64::consts::PI;
        let g0 = so3_exp(&v);
        prop_assert!(left_translation_gap(&group, &g0, seed, 0.01) <= 1e-6);
    }
}

/// Off the chart-centre group the gap is discretisation error of the
/// exponential-coordinate charts and shrinks with the grid.
#[test]
fn so3_general_left_translation_converges() {
    let group = lie_group::<f64>("so3").unwrap();
    let g0 = so3_exp(&[0.4, -1.1, 0.7]);
    let gaps: Vec<f64> = [0.01, 0.0025, 0.000625]
        .iter()
        .map(|&h| (0..4).map(|s| left_translation_gap(&group, &g0, s, h)).sum::<f64>() / 4.0)
        .collect();
    assert!(gaps[0] <= 1e-3, "{gaps:?}");
    assert!(gaps[1] < 0.6 * gaps[0] && gaps[2] < 0.6 * gaps[1], "{gaps:?}");
}
