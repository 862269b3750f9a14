//! Compares the Cholesky and circulant-embedding fBm samplers: covariance
//! z-scores, a KS test on `B(T)` and timing.

use std::time::Instant;

use fcir::experiments::{compare_terminal_marginals, sampler_covariance_check};
use fcir::fbm::{CholeskySampler, CirculantSampler, FbmSampler, GridSpec, HurstParameter};

fn main() -> fcir::Result<()> {
    let grid = GridSpec::new(1.0, 256)?;
    for h in [0.6, 0.8] {
        let hurst = HurstParameter::new(h)?;
        let chol = CholeskySampler::new(grid, hurst)?;
        let circ = CirculantSampler::new(grid, hurst)?;
        let samplers: [(&str, &dyn FbmSampler); 2] = [("cholesky", &chol), ("circulant", &circ)];
        for (name, s) in samplers {
            let c = sampler_covariance_check(s, 5000, 1)?;
            println!(
                "H={h} {name:>9}: max |z| = {:.3} at ({}, {})",
                c.max_abs_z, c.worst_i, c.worst_j
            );
        }
        let ks = compare_terminal_marginals(&chol, &circ, 5000, 1, 1 + (1 << 32));
        println!("H={h} KS on B(T): D = {:.4}, p = {:.3}", ks.statistic, ks.p_value);
    }

    let big = GridSpec::dyadic(1.0, 12)?;
    let hurst = HurstParameter::new(0.8)?;
    let t = Instant::now();
    let circ = CirculantSampler::new(big, hurst)?;
    circ.sample(7);
    let circ_time = t.elapsed();
    let t = Instant::now();
    let chol = CholeskySampler::new(big, hurst)?;
    chol.sample(7);
    println!("N=4096: circulant {circ_time:?}, cholesky {:?}", t.elapsed());
    Ok(())
}
