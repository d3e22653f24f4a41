mod common;

use common::{manifold, max_diff};
use manifold_levy::geometry::{chart_transition, FramePoint};
use manifold_levy::levy::{sample_levy_path, EuclidPath, JumpMeasureSpec, JumpRecord, LevyTriplet};
use manifold_levy::marcus::{marcus_solve, marcus_solve_transformed, BundlePath, MarcusConfig};
use manifold_levy::rng::stream;
use manifold_levy::stats::log_log_slope;
use manifold_levy::Matrix;
use proptest::prelude::*;

fn driver_triplet(sigma: f64, lambda: f64) -> LevyTriplet<f64> {
    let nu = JumpMeasureSpec::UniformSphereShell { intensity: lambda, radius: 0.6 };
    LevyTriplet::new(Matrix::identity(2).scale(sigma * sigma), vec![0.2, -0.3], nu).unwrap()
}

fn transform(y: &EuclidPath<f64>, g: &Matrix<f64>) -> EuclidPath<f64> {
    EuclidPath {
        times: y.times.clone(),
        values: y.values.iter().map(|v| g.mul_vec(v)).collect(),
        increments: y.increments.iter().map(|v| g.mul_vec(v)).collect(),
        jumps: y
            .jumps
            .iter()
            .map(|j| JumpRecord {
                index: j.index,
                time: j.time,
                pre: g.mul_vec(&j.pre),
                delta: g.mul_vec(&j.delta),
            })
            .collect(),
    }
}

fn frames_close(a: &BundlePath<f64>, b: &BundlePath<f64>, tol: f64) -> bool {
    a.len() == b.len()
        && a.frames.iter().zip(&b.frames).all(|(f, g)| {
            f.chart == g.chart && max_diff(&f.x, &g.x) <= tol && f.r.sub(&g.r).max_abs() <= tol
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transformed_fields_equal_transformed_driver(seed in any::<u64>(), entries in prop::collection::vec(-1.0f64..1.0, 4)) {
        let m = manifold("sphere:2");
        let g = Matrix::from_rows(&[vec![1.0 + 0.4 * entries[0], 0.4 * entries[1]], vec![0.4 * entries[2], 1.0 + 0.4 * entries[3]]]);
        prop_assume!(g.det().abs() > 0.2);
        let y = sample_levy_path(&driver_triplet(0.5, 3.0), 1.0, 0.02, &mut stream(seed, 0)).unwrap();
        let u0 = FramePoint::coordinate(0, vec![0.3, 0.1]);
        let cfg = MarcusConfig::default();
        let a = marcus_solve_transformed(&m, &y, &u0, &g, &cfg).unwrap();
        let b = marcus_solve(&m, &transform(&y, &g), &u0, &cfg).unwrap();
        prop_assert_eq!(a.stopped_at.is_some(), b.stopped_at.is_some());
        prop_assert!(frames_close(&a, &b, 1e-10));
    }

    #[test]
    fn cylinder_frames_keep_unit_determinant(seed in any::<u64>(), alpha in prop::sample::select(vec![0.25, 1.0 / 3.0, 0.5, 0.7])) {
        let m = manifold(&format!("cylinder:{alpha}"));
        let y = sample_levy_path(&driver_triplet(0.7, 4.0), 2.0, 0.01, &mut stream(seed, 0)).unwrap();
        let u = marcus_solve(&m, &y, &FramePoint::coordinate(0, vec![0.0, 0.0]), &MarcusConfig::default()).unwrap();
        prop_assert!(u.stopped_at.is_none());
        for f in u.frames.iter().chain(u.jumps.iter().map(|j| &j.pre)) {
            prop_assert!((f.r.det() - 1.0).abs() <= 1e-6, "det {}", f.r.det());
        }
    }

    #[test]
    fn solution_is_deterministic(seed in any::<u64>()) {
        let m = manifold("torus:2");
        let y = sample_levy_path(&driver_triplet(1.0, 5.0), 1.0, 0.05, &mut stream(seed, 2)).unwrap();
        let u0 = FramePoint::coordinate(0, vec![0.1, 0.2]);
        let a = marcus_solve(&m, &y, &u0, &MarcusConfig::default()).unwrap();
        let b = marcus_solve(&m, &y, &u0, &MarcusConfig::default()).unwrap();
        prop_assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}

/// `|Σ_k (x_{k+1} − x_k − ½ (r_k + r_{k+1}^−) ΔY^c_k)|` over the continuous
/// cells, with every pair of grid points compared in the chart of the first.
fn chain_rule_residual(u: &BundlePath<f64>, y: &EuclidPath<f64>) -> f64 {
    let m = manifold("sphere:2");
    let mut total = [0.0f64; 2];
    for k in 1..u.len() {
        let (a, b) = (&u.frames[k - 1], u.left_limit(k));
        let (a, b) = match chart_transition(&m, &b.point(), a.chart, Some(&b.r)) {
            Ok((p, r)) => (a.clone(), FramePoint::new(p.chart, p.x, r.unwrap())),
            Err(_) => {
                let (p, r) = chart_transition(&m, &a.point(), b.chart, Some(&a.r)).unwrap();
                (FramePoint::new(p.chart, p.x, r.unwrap()), b.clone())
            }
        };
        let dy = y.continuous_increment(k);
        let (ra, rb) = (a.r.mul_vec(dy), b.r.mul_vec(dy));
        for i in 0..2 {
            total[i] += b.x[i] - a.x[i] - 0.5 * (ra[i] + rb[i]);
        }
    }
    total.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn coordinate_chain_rule_residual_is_first_order() {
    let m = manifold("sphere:2");
    let t = driver_triplet(0.8, 3.0);
    let u0 = FramePoint::coordinate(0, vec![0.2, -0.2]);
    let base = 0.04;
    let steps = [base, base / 2.0, base / 4.0];
    let mut mean = [0.0; 3];
    let n = 40;
    for seed in 0..n {
        let fine = sample_levy_path(&t, 1.0, base / 4.0, &mut stream(seed, 0)).unwrap();
        for (k, factor) in [4, 2, 1].into_iter().enumerate() {
            let y = fine.coarsen(base / 4.0, factor);
            let u = marcus_solve(&m, &y, &u0, &MarcusConfig::default()).unwrap();
            mean[k] += chain_rule_residual(&u, &y) / n as f64;
        }
    }
    let slope = log_log_slope(&steps, &mean);
    assert!(slope >= 0.9, "slope {slope}, residuals {mean:?}");
}
