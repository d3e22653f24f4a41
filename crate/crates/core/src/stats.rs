//! Two-sample and goodness-of-fit tests used by the verification harnesses.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::rng::stream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    /// Critical value of the statistic at `level`.
    pub threshold: f64,
    pub p_value: f64,
    pub level: f64,
}

impl TestOutcome {
    pub fn passed(&self) -> bool {
        self.p_value > self.level
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Energy distance `2E|X−Y| − E|X−X'| − E|Y−Y'|` (V-statistic form).
pub fn energy_distance(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let mean = |a: &[Vec<f64>], b: &[Vec<f64>]| {
        a.par_iter()
            .map(|p| b.iter().map(|q| euclid(p, q)).sum::<f64>())
            .sum::<f64>()
            / (a.len() * b.len()) as f64
    };
    2.0 * mean(x, y) - mean(x, x) - mean(y, y)
}

/// Permutation test of equal distributions based on the scaled energy
/// statistic `nm/(n+m) · E`. Deterministic given `seed`.
pub fn energy_test(x: &[Vec<f64>], y: &[Vec<f64>], n_perm: usize, level: f64, seed: u64) -> TestOutcome {
    let (n, m) = (x.len(), y.len());
    let pooled: Vec<&Vec<f64>> = x.iter().chain(y).collect();
    let total = n + m;
    let dist: Vec<Vec<f64>> = (0..total)
        .into_par_iter()
        .map(|i| (0..total).map(|j| euclid(pooled[i], pooled[j])).collect())
        .collect();
    let stat_for = |labels: &[bool]| -> f64 {
        let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
        for i in 0..total {
            let row = &dist[i];
            let (mut ra, mut rb) = (0.0, 0.0);
            for j in 0..total {
                if labels[j] {
                    ra += row[j];
                } else {
                    rb += row[j];
                }
            }
            if labels[i] {
                saa += ra;
                sab += rb;
            } else {
                sbb += rb;
            }
        }
        let (nf, mf) = (n as f64, m as f64);
        let e = 2.0 * sab / (nf * mf) - saa / (nf * nf) - sbb / (mf * mf);
        nf * mf / (nf + mf) * e
    };
    let base: Vec<bool> = (0..total).map(|i| i < n).collect();
    let observed = stat_for(&base);
    let mut perm_stats: Vec<f64> = (0..n_perm)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(seed, k as u64);
            let mut labels = base.clone();
            labels.shuffle(&mut rng);
            stat_for(&labels)
        })
        .collect();
    let exceed = perm_stats.iter().filter(|&&s| s >= observed).count();
    let p_value = (1 + exceed) as f64 / (1 + n_perm) as f64;
    perm_stats.sort_by(f64::total_cmp);
    let idx = (((1.0 - level) * n_perm as f64).ceil() as usize).min(n_perm.saturating_sub(1));
    let threshold = perm_stats.get(idx).copied().unwrap_or(f64::INFINITY);
    TestOutcome {
        statistic: observed,
        threshold,
        p_value,
        level,
    }
}

/// Pearson chi-square of observed counts against expected counts, with
/// `dof = bins − 1 − fitted`.
pub fn chi_square(observed: &[u64], expected: &[f64], fitted: usize, level: f64) -> TestOutcome {
    let statistic: f64 = observed
        .iter()
        .zip(expected)
        .filter(|(_, &e)| e > 0.0)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dof = (observed.len().saturating_sub(1 + fitted)).max(1) as f64;
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    TestOutcome {
        statistic,
        threshold: dist.inverse_cdf(1.0 - level),
        p_value: dist.sf(statistic),
        level,
    }
}

/// Two-sample chi-square homogeneity test on binned counts.
pub fn chi_square_two_sample(a: &[u64], b: &[u64], level: f64) -> TestOutcome {
    let (na, nb): (u64, u64) = (a.iter().sum(), b.iter().sum());
    let n = (na + nb) as f64;
    let mut statistic = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        let tot = (x + y) as f64;
        if tot == 0.0 {
            continue;
        }
        bins += 1;
        let ea = tot * na as f64 / n;
        let eb = tot * nb as f64 / n;
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let dof = (bins.saturating_sub(1)).max(1) as f64;
    let dist = ChiSquared::new(dof).expect("positive degrees of freedom");
    TestOutcome {
        statistic,
        threshold: dist.inverse_cdf(1.0 - level),
        p_value: dist.sf(statistic),
        level,
    }
}

/// Sample mean and its standard error.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn sample(seed: u64, n: usize, shift: f64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, 0);
        (0..n)
            .map(|_| vec![rng.random::<f64>() + shift, rng.random::<f64>()])
            .collect()
    }

    #[test]
    fn energy_test_separates_shifted_samples() {
        let a = sample(1, 200, 0.0);
        let b = sample(2, 200, 0.0);
        let c = sample(3, 200, 0.4);
        assert!(energy_test(&a, &b, 99, 0.01, 5).passed());
        assert!(!energy_test(&a, &c, 99, 0.01, 5).passed());
        assert!(energy_distance(&a, &a).abs() < 1e-12);
    }

    #[test]
    fn chi_square_matches_table_value() {
        let out = chi_square(&[10, 10, 10, 10], &[10.0; 4], 0, 0.05);
        assert_eq!(out.statistic, 0.0);
        assert!((out.threshold - 7.814727903251178).abs() < 1e-9);
        assert!((out.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fits() {
        let x = [1.0, 2.0, 3.0];
        let y = [3.0, 5.0, 7.0];
        let (s, b) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let y2: Vec<f64> = x.iter().map(|v: &f64| 4.0 * v.powi(2)).collect();
        assert!((log_log_slope(&x, &y2) - 2.0).abs() < 1e-12);
    }
}
