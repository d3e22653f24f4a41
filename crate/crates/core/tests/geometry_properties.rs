mod common;

use common::{chart0_point, frame, manifold, max_diff, near_identity, CATALOG};
use manifold_levy::geometry::{
    flow_exp, geodesic_exp, horizontal_field, parallel_transport, taylor_remainder, Curve, FramePoint,
};
use manifold_levy::stats::log_log_slope;
use manifold_levy::Matrix;
use proptest::prelude::*;

fn unit_cube(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn horizontal_field_is_right_equivariant(off in unit_cube(3), r in unit_cube(9), g in unit_cube(9), e in unit_cube(3)) {
        for name in CATALOG {
            let m = manifold(name);
            let d = m.dim;
            let u = frame(&m, &off[..d], &r[..d * d]);
            let gm = near_identity(d, &g[..d * d], 0.4);
            prop_assume!(gm.det().abs() > 0.1);
            let lhs = horizontal_field(&m, &u.right_mul(&gm), &e[..d]).unwrap();
            let rhs = horizontal_field(&m, &u, &gm.mul_vec(&e[..d])).unwrap();
            prop_assert!(max_diff(&lhs.dx, &rhs.dx) <= 1e-10, "{name}");
            prop_assert!(lhs.dr.sub(&rhs.dr.mul(&gm)).max_abs() <= 1e-10, "{name}");
        }
    }

    #[test]
    fn flow_exp_is_right_equivariant(off in unit_cube(3), r in unit_cube(9), g in unit_cube(9), e in unit_cube(3)) {
        for name in CATALOG {
            let m = manifold(name);
            let d = m.dim;
            let u = frame(&m, &off[..d], &r[..d * d]);
            let gm = near_identity(d, &g[..d * d], 0.4);
            prop_assume!(gm.det().abs() > 0.1);
            let c: Vec<f64> = e[..d].iter().map(|v| v / (d as f64).sqrt()).collect();
            let lhs = flow_exp(&m, &u.right_mul(&gm), &c, 1000).unwrap();
            let rhs = flow_exp(&m, &u, &gm.mul_vec(&c), 1000).unwrap().right_mul(&gm);
            prop_assert_eq!(lhs.chart, rhs.chart);
            prop_assert!(max_diff(&lhs.x, &rhs.x) <= 1e-6, "{name}");
            prop_assert!(lhs.r.sub(&rhs.r).max_abs() <= 1e-6, "{name}");
        }
    }

    #[test]
    fn flow_projects_to_the_geodesic(off in unit_cube(3), r in unit_cube(9), e in unit_cube(3)) {
        for name in CATALOG {
            let m = manifold(name);
            let d = m.dim;
            let u = frame(&m, &off[..d], &r[..d * d]);
            let c: Vec<f64> = e[..d].iter().map(|v| v / (d as f64).sqrt()).collect();
            let end = flow_exp(&m, &u, &c, 1000).unwrap();
            let geo = geodesic_exp(&m, &u.point(), &u.apply(&c), 1000).unwrap();
            let gap = m.distance(&end.point(), &geo).unwrap();
            prop_assert!(gap <= 1e-6, "{name}: {gap}");
        }
    }

    #[test]
    fn transport_is_linear_in_the_frame(off in unit_cube(3), r0 in unit_cube(9), r1 in unit_cube(9), v in unit_cube(3), a in -2.0f64..2.0) {
        for name in CATALOG {
            let m = manifold(name);
            let d = m.dim;
            let p = chart0_point(&m, &off[..d], 0.3);
            let curve = Curve::straight_walk(&m, p, &v[..d], 200).unwrap();
            let f0 = near_identity(d, &r0[..d * d], 0.3);
            let f1 = near_identity(d, &r1[..d * d], 0.3);
            let mix = f0.add(&f1.scale(a));
            prop_assume!(mix.det().abs() > 0.1);
            let t0 = parallel_transport(&m, &curve, &f0).unwrap();
            let t1 = parallel_transport(&m, &curve, &f1).unwrap();
            let tm = parallel_transport(&m, &curve, &mix).unwrap();
            prop_assert!(tm.r.sub(&t0.r.add(&t1.r.scale(a))).max_abs() <= 1e-10, "{name}");
            prop_assert!(tm.r.det().abs() > 1e-3, "{name}");
        }
    }
}

#[test]
fn flat_space_matches_closed_forms() {
    let m = manifold("flat:3");
    let r = Matrix::from_rows(&[vec![1.0, 0.5, 0.0], vec![0.0, 2.0, -1.0], vec![0.3, 0.0, 1.0]]);
    let u = FramePoint::new(0, vec![1.0, -2.0, 0.5], r.clone());
    let c = [0.7, -0.4, 1.3];
    let end = flow_exp(&m, &u, &c, 256).unwrap();
    let exact: Vec<f64> = u.x.iter().zip(r.mul_vec(&c)).map(|(x, v)| x + v).collect();
    assert!(max_diff(&end.x, &exact) <= 1e-12);
    assert!(end.r.sub(&r).max_abs() <= 1e-12);
    assert!(taylor_remainder(&m, &u, &c, 256).unwrap() <= 1e-12);
    let curve = Curve::straight_walk(&m, u.point(), &[3.0, 1.0, -1.0], 50).unwrap();
    assert!(parallel_transport(&m, &curve, &r).unwrap().r.sub(&r).max_abs() <= 1e-12);
}

#[test]
fn taylor_remainder_is_second_order() {
    let m = manifold("cylinder:1");
    let u = FramePoint::new(0, vec![0.2, 0.4], Matrix::from_rows(&[vec![1.0, 0.2], vec![-0.1, 0.9]]));
    let dir = [0.6, -0.8];
    let scales = [1e-1, 1e-2, 1e-3, 1e-4];
    let rem: Vec<f64> = scales
        .iter()
        .map(|s| taylor_remainder(&m, &u, &[s * dir[0], s * dir[1]], 256).unwrap())
        .collect();
    let slope = log_log_slope(&scales, &rem);
    assert!((slope - 2.0).abs() <= 0.1, "slope {slope}");
}

#[test]
fn geodesics_integrate_to_time_ten() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(17);
    for name in CATALOG {
        let m = manifold(name);
        let d = m.dim;
        for _ in 0..100 {
            let off: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = chart0_point(&m, &off, 0.5);
            let mut v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
            v.iter_mut().for_each(|x| *x *= 10.0 / n);
            let end = geodesic_exp(&m, &p, &v, 2560);
            assert!(end.is_ok(), "{name}: {:?}", end.err());
        }
    }
}
