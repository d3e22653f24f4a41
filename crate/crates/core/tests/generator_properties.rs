mod common;

use common::manifold;
use manifold_levy::generator::{
    generator_apply, horizontal_generator_apply, weak_error_test, QuadratureConfig, TestFunction,
};
use manifold_levy::geometry::{ChartPoint, FramePoint, ManifoldSpec};
use manifold_levy::levy::{check_invariance, Atom, JumpMeasureSpec, LevyTriplet};
use manifold_levy::marcus::SimulationConfig;
use manifold_levy::manifolds::build;
use manifold_levy::Matrix;
use proptest::prelude::*;
use std::f64::consts::TAU;

fn cylinder_wave() -> TestFunction<f64> {
    TestFunction::new("wave", |p: &ChartPoint<f64>| Ok(p.x[0].cos() + 0.3 * p.x[1] + 0.1 * p.x[0].sin() * p.x[1]))
}

fn klein_wave() -> TestFunction<f64> {
    TestFunction::new("klein", |p: &ChartPoint<f64>| {
        let (c, s) = ((TAU * p.x[0]).cos(), (TAU * p.x[1]).sin());
        Ok(c + 0.3 * s + 0.2 * c * s)
    })
}

fn atoms(points: &[([f64; 2], f64)]) -> JumpMeasureSpec<f64> {
    JumpMeasureSpec::PointMasses {
        atoms: points.iter().map(|(x, w)| Atom { x: x.to_vec(), weight: *w }).collect(),
    }
}

fn frame_at(m: &ManifoldSpec<f64>, x: [f64; 2], r: [f64; 4]) -> FramePoint<f64> {
    let u = FramePoint::new(0, x.to_vec(), Matrix::from_rows(&[vec![r[0], r[1]], vec![r[2], r[3]]]));
    u.validate(m).unwrap();
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generator_is_linear(x in prop::array::uniform2(-0.3f64..0.3), r in prop::array::uniform4(-0.3f64..0.3), k in -2.0f64..2.0) {
        let (m, _) = build::<f64>("cylinder:1/3").unwrap();
        let v = frame_at(&m, x, [1.0 + r[0], r[1], r[2], 1.0 + r[3]]);
        let quad = QuadratureConfig::default();
        let nu1 = atoms(&[([0.4, 0.2], 1.5), ([1.3, -0.5], 0.7)]);
        let nu2 = atoms(&[([-0.2, 0.6], 2.0)]);
        let both = atoms(&[([0.4, 0.2], 1.5), ([1.3, -0.5], 0.7), ([-0.2, 0.6], 2.0)]);
        let a = Matrix::from_rows(&[vec![0.5, 0.1], vec![0.1, 0.3]]);
        let t1 = LevyTriplet::new(a.clone(), vec![0.2, -0.4], nu1).unwrap();
        let t2 = LevyTriplet::new(Matrix::zeros(2, 2), vec![0.0, 0.0], nu2).unwrap();
        let t12 = LevyTriplet::new(a, vec![0.2, -0.4], both).unwrap();
        let f = cylinder_wave();
        let g = TestFunction::new("height", |p: &ChartPoint<f64>| Ok(p.x[1] * p.x[1]));
        let fg = TestFunction::new("mix", move |p: &ChartPoint<f64>| {
            Ok(p.x[0].cos() + 0.3 * p.x[1] + 0.1 * p.x[0].sin() * p.x[1] + k * p.x[1] * p.x[1])
        });
        let p = v.point();
        let l = |t: &LevyTriplet<f64>, f: &TestFunction<f64>| generator_apply(&m, t, f, &p, &v, &quad).unwrap();
        prop_assert!((l(&t1, &fg) - l(&t1, &f) - k * l(&t1, &g)).abs() <= 1e-6);
        prop_assert!((l(&t12, &f) - l(&t1, &f) - l(&t2, &f)).abs() <= 1e-12);
    }

    #[test]
    fn generator_ignores_holonomy_frame_changes(x in prop::array::uniform2(-0.2f64..0.2), r in prop::array::uniform4(-0.3f64..0.3)) {
        let cases: [(&str, LevyTriplet<f64>, TestFunction<f64>); 2] = [
            (
                "cylinder:0.5",
                LevyTriplet::new(Matrix::identity(2).scale(0.4), vec![0.0, 0.0], atoms(&[([0.7, 0.2], 1.0), ([-0.7, -0.2], 1.0)])).unwrap(),
                cylinder_wave(),
            ),
            (
                "klein_bottle:2",
                LevyTriplet::new(Matrix::from_diag(&[0.05, 0.02]), vec![0.0, 0.1], atoms(&[([0.2, 0.1], 1.0), ([-0.2, 0.1], 1.0)])).unwrap(),
                klein_wave(),
            ),
        ];
        for (name, t, f) in cases {
            let (m, hol) = build::<f64>(name).unwrap();
            prop_assert!(check_invariance(&t, &hol.generators, 500, 1e-10).unwrap().passed(), "{}", name);
            let c = &m.charts[0].safe_region.center;
            let v = frame_at(&m, [c[0] + x[0], c[1] + x[1]], [1.0 + r[0], r[1], r[2], 1.0 + r[3]]);
            let quad = QuadratureConfig::default();
            let base = generator_apply(&m, &t, &f, &v.point(), &v, &quad).unwrap();
            for g in &hol.generators {
                let moved = v.right_mul(g);
                let other = generator_apply(&m, &t, &f, &v.point(), &moved, &quad).unwrap();
                prop_assert!((base - other).abs() <= 1e-6, "{}: {} vs {}", name, base, other);
            }
        }
    }

    #[test]
    fn point_and_bundle_formulas_agree(x in prop::array::uniform2(-0.5f64..0.5), r in prop::array::uniform4(-0.3f64..0.3)) {
        let m = manifold("sphere:2");
        let v = frame_at(&m, x, [1.0 + r[0], r[1], r[2], 1.0 + r[3]]);
        let nu = atoms(&[([0.9, 0.3], 1.0), ([-0.4, 1.2], 0.5), ([0.1, -0.2], 2.0)]);
        let t = LevyTriplet::new(Matrix::identity(2).scale(0.5), vec![0.3, -0.1], nu).unwrap();
        let f = TestFunction::parse(&m, "bump:0,0,1,1.2").unwrap();
        let quad = QuadratureConfig::default();
        let on_m = generator_apply(&m, &t, &f, &v.point(), &v, &quad).unwrap();
        let on_bundle = horizontal_generator_apply(&m, &t, |u: &FramePoint<f64>| f.at(&u.point()), &v, &quad).unwrap();
        prop_assert!((on_m - on_bundle).abs() <= 1e-10, "{} vs {}", on_m, on_bundle);
    }
}

#[test]
fn flat_brownian_square_norm_oracle() {
    let m = manifold("flat:2");
    let f = TestFunction::parse(&m, "sq_norm").unwrap();
    let v = FramePoint::coordinate(0, vec![0.3, -0.2]);
    let t = LevyTriplet::brownian(2, 1.0);
    let r = weak_error_test(&m, &t, &f, &v, 0.01, 100_000, &SimulationConfig::default(), &QuadratureConfig::default(), 11).unwrap();
    assert!((r.generator_value - 2.0).abs() <= 1e-6, "{}", r.generator_value);
    assert!((r.estimate - 2.0).abs() <= 3.0 * r.std_error, "{r:?}");
}
