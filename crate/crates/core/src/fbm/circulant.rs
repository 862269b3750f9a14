use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{
    fgn_autocovariance, gaussian_rng, standard_normals, CholeskySampler, FbmSampler, GridSpec,
    HurstParameter,
};
use crate::error::Result;

/// Eigenvalues in `[-EIGEN_TOLERANCE·λ_max, 0)` are treated as rounding noise.
pub const EIGEN_TOLERANCE: f64 = 1e-8;

/// Davies–Harte sampler: embeds the fGn covariance in a circulant matrix of
/// size `2N`, diagonalised by the FFT. Each path costs one FFT of length `2N`.
///
/// If the embedding has an eigenvalue below tolerance the sampler falls back
/// to [`CholeskySampler`] and records a warning.
pub struct CirculantSampler {
    grid: GridSpec,
    hurst: HurstParameter,
    engine: Engine,
    warning: Option<String>,
}

enum Engine {
    Fft {
        /// `sqrt(λ_k / 2N)`
        scale: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Fallback(CholeskySampler),
}

impl CirculantSampler {
    pub fn new(grid: GridSpec, hurst: HurstParameter) -> Result<Self> {
        let n = grid.steps();
        let h = grid.step();
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
        for k in 0..=n {
            row.push(Complex::new(fgn_autocovariance(k, h, hurst), 0.0));
        }
        for k in (1..n).rev() {
            row.push(Complex::new(fgn_autocovariance(k, h, hurst), 0.0));
        }

        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut row);
        let mut eig: Vec<f64> = row.iter().map(|c| c.re).collect();
        let lambda_max = eig.iter().cloned().fold(f64::MIN, f64::max);
        let lambda_min = eig.iter().cloned().fold(f64::MAX, f64::min);

        if lambda_min < -EIGEN_TOLERANCE * lambda_max {
            let warning = format!(
                "circulant embedding has eigenvalue {lambda_min:e} (max {lambda_max:e}) at N = {n}, H = {}; using Cholesky sampler",
                hurst.value()
            );
            log::warn!("{warning}");
            return Ok(Self {
                grid,
                hurst,
                engine: Engine::Fallback(CholeskySampler::new(grid, hurst)?),
                warning: Some(warning),
            });
        }
        for v in eig.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let scale = eig.iter().map(|v| (v / m as f64).sqrt()).collect();
        Ok(Self {
            grid,
            hurst,
            engine: Engine::Fft { scale, fft },
            warning: None,
        })
    }

    /// Set when the embedding was rejected and the Cholesky fallback is in use.
    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    pub fn uses_fallback(&self) -> bool {
        matches!(self.engine, Engine::Fallback(_))
    }
}

impl FbmSampler for CirculantSampler {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn hurst(&self) -> HurstParameter {
        self.hurst
    }

    fn increments(&self, seed: u64) -> Vec<f64> {
        match &self.engine {
            Engine::Fallback(chol) => chol.increments(seed),
            Engine::Fft { scale, fft } => {
                let m = scale.len();
                let z = standard_normals(&mut gaussian_rng(seed), 2 * m);
                // With ξ = U + iV, the real part of F·diag(√(λ/2N))·ξ has the
                // circulant covariance exactly.
                let mut w: Vec<Complex<f64>> = scale
                    .iter()
                    .zip(z.chunks_exact(2))
                    .map(|(s, uv)| Complex::new(s * uv[0], s * uv[1]))
                    .collect();
                fft.process(&mut w);
                w[..self.grid.steps()].iter().map(|c| c.re).collect()
            }
        }
    }
}
