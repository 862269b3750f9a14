//! `E[X_n^{-2}]^{1/2}` over `[0, 10]`, with Monte Carlo standard errors.

use fcir::experiments::{estimate_inverse_moments, ExperimentConfig};

fn main() -> fcir::Result<()> {
    let config = ExperimentConfig {
        horizon: 10.0,
        coarse_exponents: Vec::new(),
        samples: 100,
        ..ExperimentConfig::default()
    };
    let curve = estimate_inverse_moments(&config)?;
    println!("{:>8} {:>12} {:>12}", "t", "estimate", "std err");
    for n in (0..curve.times.len()).step_by(256) {
        println!("{:>8.3} {:>12.6} {:>12.3e}", curve.times[n], curve.estimates[n], curve.std_errors[n]);
    }
    Ok(())
}
