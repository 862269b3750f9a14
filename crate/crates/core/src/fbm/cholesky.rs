use nalgebra::DMatrix;

use super::{fgn_autocovariance, gaussian_rng, standard_normals, FbmSampler, GridSpec, HurstParameter};
use crate::error::{Error, Result};

/// Exact sampler that factorises the `N × N` Toeplitz fGn covariance once
/// (`O(N³)`) and draws each path with a triangular product (`O(N²)`).
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    grid: GridSpec,
    hurst: HurstParameter,
    /// Lower factor, row-major, row `i` holding `i + 1` entries.
    lower: Vec<f64>,
}

impl CholeskySampler {
    pub fn new(grid: GridSpec, hurst: HurstParameter) -> Result<Self> {
        let n = grid.steps();
        let h = grid.step();
        let acov: Vec<f64> = (0..n).map(|k| fgn_autocovariance(k, h, hurst)).collect();
        let cov = DMatrix::from_fn(n, n, |i, j| acov[i.abs_diff(j)]);
        let factor = cov.cholesky().ok_or_else(|| {
            Error::Numerical(format!(
                "fGn covariance is not numerically positive definite (N = {n}, H = {}, lag-0 variance {:e})",
                hurst.value(),
                acov[0]
            ))
        })?;
        let l = factor.l();
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(l[(i, j)]);
            }
        }
        Ok(Self { grid, hurst, lower })
    }
}

impl FbmSampler for CholeskySampler {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    fn increments(&self, seed: u64) -> Vec<f64> {
        let n = self.grid.steps();
        let z = standard_normals(&mut gaussian_rng(seed), n);
        let mut out = Vec::with_capacity(n);
        let mut offset = 0;
        for i in 0..n {
            let row = &self.lower[offset..offset + i + 1];
            out.push(row.iter().zip(&z).map(|(a, b)| a * b).sum());
            offset += i + 1;
        }
        out
    }
}
