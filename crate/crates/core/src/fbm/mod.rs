//! Fractional Brownian motion on uniform grids.
//!
//! Both samplers draw fractional Gaussian noise (the increments) and recover
//! the levels by prefix sums. Gaussian variates come from a ChaCha8 stream
//! seeded with `seed_from_u64`, transformed by the ziggurat sampler of
//! `rand_distr::StandardNormal`; for a fixed seed a path is bit-identical
//! across runs on the same platform.

mod cholesky;
mod circulant;

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, Error, Result};
use crate::fmt_f64;

pub use cholesky::CholeskySampler;
pub use circulant::CirculantSampler;

/// Hurst index `H ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParameter(f64);

impl HurstParameter {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            domain(format!("Hurst parameter must lie in (0, 1), got {value}"))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `α_H = H(2H − 1)`, positive exactly when `H > 1/2`.
    pub fn alpha(self) -> f64 {
        self.0 * (2.0 * self.0 - 1.0)
    }

    /// Rejects `H ≤ 1/2`, where the pathwise solution theory does not apply.
    pub fn require_long_memory(self) -> Result<Self> {
        if self.0 > 0.5 {
            Ok(self)
        } else {
            domain(format!("solver requires H > 1/2, got {}", self.0))
        }
    }
}

/// Uniform grid `t_n = n·h` on `[0, T]` with `h = T/N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    steps: usize,
    step: f64,
}

impl GridSpec {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return domain(format!("horizon must be positive and finite, got {horizon}"));
        }
        if steps == 0 {
            return domain("grid needs at least one step");
        }
        Ok(Self {
            horizon,
            steps,
            step: horizon / steps as f64,
        })
    }

    /// Grid with `2^exponent` steps on `[0, horizon]`.
    pub fn dyadic(horizon: f64, exponent: u32) -> Result<Self> {
        if exponent >= usize::BITS - 1 {
            return domain(format!("dyadic exponent {exponent} too large"));
        }
        Self::new(horizon, 1usize << exponent)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.step
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|n| self.node(n))
    }
}

/// A sampled fBm trajectory: `values[n] = B(t_n)`, with `values[0] = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FbmPath {
    grid: GridSpec,
    hurst: HurstParameter,
    values: Vec<f64>,
    seed: Option<u64>,
}

impl FbmPath {
    /// Builds a path from its levels. The first level must be zero.
    pub fn from_values(grid: GridSpec, hurst: HurstParameter, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.steps() + 1 {
            return domain(format!(
                "expected {} levels, got {}",
                grid.steps() + 1,
                values.len()
            ));
        }
        if values[0] != 0.0 {
            return domain("fBm path must start at 0");
        }
        Ok(Self {
            grid,
            hurst,
            values,
            seed: None,
        })
    }

    pub(crate) fn from_increments(
        grid: GridSpec,
        hurst: HurstParameter,
        increments: &[f64],
        seed: Option<u64>,
    ) -> Self {
        debug_assert_eq!(increments.len(), grid.steps());
        let mut values = Vec::with_capacity(increments.len() + 1);
        let mut level = 0.0;
        values.push(level);
        for dx in increments {
            level += dx;
            values.push(level);
        }
        Self {
            grid,
            hurst,
            values,
            seed,
        }
    }

    /// The zero path (no noise).
    pub fn zero(grid: GridSpec, hurst: HurstParameter) -> Self {
        Self {
            grid,
            hurst,
            values: vec![0.0; grid.steps() + 1],
            seed: None,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Seed the path was sampled from, if any.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Increments `ΔB_{n+1} = B(t_{n+1}) − B(t_n)`.
    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    pub fn terminal(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Writes `t,B` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,B")?;
        for (n, b) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", fmt_f64(self.grid.node(n)), fmt_f64(*b))?;
        }
        Ok(())
    }
}

/// Common interface of the exact samplers.
pub trait FbmSampler: Sync {
    fn grid(&self) -> &GridSpec;
    fn hurst(&self) -> HurstParameter;
    /// fGn increments for one seed.
    fn increments(&self, seed: u64) -> Vec<f64>;

    fn sample(&self, seed: u64) -> FbmPath {
        let inc = self.increments(seed);
        FbmPath::from_increments(*self.grid(), self.hurst(), &inc, Some(seed))
    }
}

/// `Cov(B(t), B(s)) = ½(t^{2H} + s^{2H} − |t − s|^{2H})`.
pub fn fbm_covariance(t: f64, s: f64, hurst: HurstParameter) -> Result<f64> {
    if t < 0.0 || s < 0.0 {
        return domain(format!("fBm covariance needs nonnegative times, got ({t}, {s})"));
    }
    let e = 2.0 * hurst.value();
    Ok(0.5 * (t.powf(e) + s.powf(e) - (t - s).abs().powf(e)))
}

/// Autocovariance at lag `k` of the fGn increments on a grid of step `h`.
pub fn fgn_autocovariance(lag: usize, h: f64, hurst: HurstParameter) -> f64 {
    let e = 2.0 * hurst.value();
    let k = lag as f64;
    let scale = 0.5 * h.powf(e);
    scale * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// `φ(τ, u) = α_H |u − τ|^{2H−2}`. Only defined for `H > 1/2` off the diagonal.
pub fn phi_kernel(tau: f64, u: f64, hurst: HurstParameter) -> Result<f64> {
    let hurst = hurst.require_long_memory()?;
    if tau == u {
        return Err(Error::Singularity(tau));
    }
    let h = hurst.value();
    Ok(hurst.alpha() * (u - tau).abs().powf(2.0 * h - 2.0))
}

/// Exact fBm path via Cholesky factorisation of the fGn covariance.
pub fn sample_fbm_cholesky(grid: GridSpec, hurst: HurstParameter, seed: u64) -> Result<FbmPath> {
    Ok(CholeskySampler::new(grid, hurst)?.sample(seed))
}

/// Exact fBm path via circulant embedding of the fGn covariance.
pub fn sample_fbm_circulant(grid: GridSpec, hurst: HurstParameter, seed: u64) -> Result<FbmPath> {
    Ok(CirculantSampler::new(grid, hurst)?.sample(seed))
}

/// Keeps every `factor`-th node; coarse increments are sums of fine ones.
pub fn coarsen_path(path: &FbmPath, factor: usize) -> Result<FbmPath> {
    let steps = path.grid.steps();
    if factor == 0 || steps % factor != 0 {
        return domain(format!("coarsening factor {factor} does not divide {steps} steps"));
    }
    let grid = GridSpec::new(path.grid.horizon(), steps / factor)?;
    let values = path.values.iter().step_by(factor).copied().collect();
    Ok(FbmPath {
        grid,
        hurst: path.hurst,
        values,
        seed: path.seed,
    })
}

/// Seed of path `index` in a batch started at `base`.
pub fn batch_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

pub(crate) fn gaussian_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn standard_normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn hurst(h: f64) -> HurstParameter {
        HurstParameter::new(h).unwrap()
    }

    #[test]
    fn covariance_examples() {
        assert_relative_eq!(fbm_covariance(1.0, 1.0, hurst(0.75)).unwrap(), 1.0);
        assert_eq!(fbm_covariance(0.3, 0.0, hurst(0.6)).unwrap(), 0.0);
        assert_relative_eq!(fbm_covariance(2.0, 1.0, hurst(0.5)).unwrap(), 1.0, epsilon = 1e-15);
        assert!(matches!(fbm_covariance(-1.0, 1.0, hurst(0.6)), Err(Error::Domain(_))));
    }

    #[test]
    fn covariance_diagonal_is_power() {
        for &t in &[0.0, 0.1, 0.5, 1.0, 3.7] {
            for &h in &[0.2, 0.5, 0.7, 0.9] {
                let v = fbm_covariance(t, t, hurst(h)).unwrap();
                assert_relative_eq!(v, t.powf(2.0 * h), max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn autocovariance_examples() {
        assert_relative_eq!(fgn_autocovariance(0, 1.0, hurst(0.7)), 1.0);
        assert_relative_eq!(fgn_autocovariance(0, 0.5, hurst(0.5)), 0.5);
        assert_eq!(fgn_autocovariance(1, 1.0, hurst(0.5)), 0.0);
    }

    #[test]
    fn summed_increment_covariances_match_level_variance() {
        let h = 1.0 / 64.0;
        for &hv in &[0.55, 0.7, 0.9] {
            let hp = hurst(hv);
            for n in 1..=64usize {
                let mut var = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        var += fgn_autocovariance(i.abs_diff(j), h, hp);
                    }
                }
                let t = n as f64 * h;
                assert_relative_eq!(var, fbm_covariance(t, t, hp).unwrap(), max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn phi_examples() {
        let h = hurst(0.75);
        assert_relative_eq!(phi_kernel(0.0, 1.0, h).unwrap(), 0.375);
        assert_relative_eq!(phi_kernel(1.0, 0.0, h).unwrap(), 0.375);
        assert_relative_eq!(phi_kernel(0.0, 2.0, h).unwrap(), 0.375 * 2f64.powf(-0.5), max_relative = 1e-15);
        assert!(matches!(phi_kernel(0.4, 0.4, h), Err(Error::Singularity(_))));
        assert!(phi_kernel(0.0, 1.0, hurst(0.4)).is_err());
    }

    #[test]
    fn coarsening() {
        let grid = GridSpec::new(1.0, 8).unwrap();
        let path = sample_fbm_cholesky(grid, hurst(0.7), 3).unwrap();
        assert_eq!(coarsen_path(&path, 1).unwrap(), path);
        let two = coarsen_path(&path, 8).unwrap();
        assert_eq!(two.values(), &[0.0, path.terminal()]);
        let half = coarsen_path(&path, 2).unwrap();
        assert_eq!(half.grid().steps(), 4);
        for (k, v) in half.values().iter().enumerate() {
            assert_eq!(*v, path.values()[2 * k]);
            assert_eq!(half.grid().node(k), [0.0, 0.25, 0.5, 0.75, 1.0][k]);
        }
        assert!(coarsen_path(&path, 3).is_err());
        assert!(coarsen_path(&path, 0).is_err());
    }

    #[test]
    fn grid_and_hurst_validation() {
        assert!(GridSpec::new(0.0, 4).is_err());
        assert!(GridSpec::new(1.0, 0).is_err());
        assert!(HurstParameter::new(1.0).is_err());
        assert!(HurstParameter::new(0.0).is_err());
        assert!(hurst(0.5).require_long_memory().is_err());
        let g = GridSpec::dyadic(2.0, 3).unwrap();
        assert_eq!(g.steps(), 8);
        assert_eq!(g.step(), 0.25);
        assert_eq!(g.node(8), 2.0);
    }

    #[test]
    fn csv_export() {
        let grid = GridSpec::new(1.0, 2).unwrap();
        let path = FbmPath::from_values(grid, hurst(0.7), vec![0.0, 0.1, -0.25]).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,B");
        assert_eq!(lines.len(), 4);
        let last: Vec<f64> = lines[3].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(last, vec![1.0, -0.25]);
        assert!(FbmPath::from_values(grid, hurst(0.7), vec![0.1, 0.1, 0.2]).is_err());
    }

    #[test]
    fn batch_seeds_wrap() {
        assert_eq!(batch_seed(u64::MAX, 1), 0);
        assert_eq!(batch_seed(10, 5), 15);
    }
}
