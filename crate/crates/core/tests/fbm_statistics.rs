use std::time::Instant;

use fcir::experiments::{compare_terminal_marginals, sampler_covariance_check, terminal_values};
use fcir::fbm::{
    batch_seed, coarsen_path, sample_fbm_cholesky, sample_fbm_circulant, CholeskySampler, CirculantSampler,
    FbmSampler, GridSpec, HurstParameter,
};
use fcir::stats::{mean_variance, quantile};

fn hurst(h: f64) -> HurstParameter {
    HurstParameter::new(h).unwrap()
}

fn unit_variance_within_three_se(sampler: &dyn FbmSampler) {
    let m = 100_000;
    let values = terminal_values(sampler, m, 1);
    let (mean, var) = mean_variance(&values);
    // Var of the sample variance of N(0,1) is 2/(m-1).
    let se = (2.0 / (m as f64 - 1.0)).sqrt();
    assert!((var - 1.0).abs() < 3.0 * se, "variance {var}, se {se}");
    assert!(mean.abs() < 3.0 / (m as f64).sqrt(), "mean {mean}");
}

#[test]
fn single_step_marginal_has_unit_variance() {
    let grid = GridSpec::new(1.0, 1).unwrap();
    unit_variance_within_three_se(&CholeskySampler::new(grid, hurst(0.7)).unwrap());
    unit_variance_within_three_se(&CirculantSampler::new(grid, hurst(0.7)).unwrap());
}

#[test]
fn covariance_matches_at_h07() {
    let grid = GridSpec::new(1.0, 256).unwrap();
    let chol = CholeskySampler::new(grid, hurst(0.7)).unwrap();
    let check = sampler_covariance_check(&chol, 5000, 3).unwrap();
    assert!(check.max_abs_z <= 5.0, "{check:?}");
}

#[test]
fn samplers_agree_in_distribution_at_h06() {
    let grid = GridSpec::dyadic(1.0, 10).unwrap();
    let chol = CholeskySampler::new(grid, hurst(0.6)).unwrap();
    let circ = CirculantSampler::new(grid, hurst(0.6)).unwrap();
    let ks = compare_terminal_marginals(&chol, &circ, 5000, 5, 5 + (1 << 32));
    assert!(!ks.rejects_at(0.01), "{ks:?}");
}

#[test]
fn circulant_is_faster_than_cholesky() {
    let grid = GridSpec::dyadic(1.0, 12).unwrap();
    let start = Instant::now();
    let a = sample_fbm_circulant(grid, hurst(0.8), 9).unwrap();
    let circulant = start.elapsed();
    let start = Instant::now();
    let b = sample_fbm_cholesky(grid, hurst(0.8), 9).unwrap();
    let cholesky = start.elapsed();
    assert_eq!(a.values().len(), b.values().len());
    assert!(circulant < cholesky, "circulant {circulant:?} vs cholesky {cholesky:?}");
}

#[test]
fn samplers_are_bit_reproducible() {
    let grid = GridSpec::dyadic(2.0, 9).unwrap();
    for h in [0.55, 0.9] {
        assert_eq!(
            sample_fbm_cholesky(grid, hurst(h), 77).unwrap(),
            sample_fbm_cholesky(grid, hurst(h), 77).unwrap()
        );
        assert_eq!(
            sample_fbm_circulant(grid, hurst(h), 77).unwrap(),
            sample_fbm_circulant(grid, hurst(h), 77).unwrap()
        );
    }
}

/// `sup |B(t) − B(s)| / |t − s|^{a}` over all node pairs.
fn holder_constant(values: &[f64], step: f64, a: f64) -> f64 {
    let n = values.len() - 1;
    let weight: Vec<f64> = (0..=n).map(|k| (k as f64 * step).powf(-a)).collect();
    let mut sup = 0.0f64;
    for i in 0..n {
        let bi = values[i];
        for (k, w) in weight.iter().enumerate().skip(1).take(n - i) {
            sup = sup.max((values[i + k] - bi).abs() * w);
        }
    }
    sup
}

#[test]
fn holder_percentile_is_stable_under_refinement() {
    let h = 0.7;
    let a = h - 0.1;
    let fine = CirculantSampler::new(GridSpec::dyadic(1.0, 13).unwrap(), hurst(h)).unwrap();
    let mut coarse_sup = Vec::new();
    let mut fine_sup = Vec::new();
    for i in 0..200 {
        let path = fine.sample(batch_seed(21, i));
        let coarse = coarsen_path(&path, 2).unwrap();
        coarse_sup.push(holder_constant(coarse.values(), coarse.grid().step(), a));
        fine_sup.push(holder_constant(path.values(), path.grid().step(), a));
    }
    assert!(coarse_sup.iter().chain(&fine_sup).all(|v| v.is_finite()));
    let q_coarse = quantile(&coarse_sup, 0.99);
    let q_fine = quantile(&fine_sup, 0.99);
    let ratio = q_fine / q_coarse;
    assert!((0.5..=2.0).contains(&ratio), "99th percentiles {q_coarse} -> {q_fine}");
}
