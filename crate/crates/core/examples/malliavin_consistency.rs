//! Discrete product formula for the Malliavin derivative against its
//! exponential form, on shared noise at successive resolutions.

use fcir::experiments::{malliavin_consistency, MalliavinConfig};
use fcir::fbm::{sample_fbm_circulant, GridSpec, HurstParameter};
use fcir::malliavin::{exact_malliavin_quadrature, numeric_malliavin_g};
use fcir::model::CirParams;
use fcir::scheme::simulate_path;

fn main() -> fcir::Result<()> {
    let config = MalliavinConfig {
        exponents: vec![5, 6, 7, 8],
        ..MalliavinConfig::default()
    };
    for l in malliavin_consistency(&config)? {
        let ratio = l.ratio_vs_prev.map_or(String::from("-"), |r| format!("{r:.3}"));
        println!(
            "h = 2^-{}: mean gap {:.4e}, ratio {ratio}, G in [{:.4}, {:.4}]",
            l.exponent, l.mean_abs_gap, l.min_profile, l.max_profile
        );
    }

    let params = CirParams::default();
    let grid = GridSpec::dyadic(1.0, 6)?;
    let path = simulate_path(&sample_fbm_circulant(grid, HurstParameter::new(0.7)?, 3)?, &params)?;
    let profile = numeric_malliavin_g(&path, grid.steps())?;
    println!("\nprofile at t = 1 on one path:");
    for i in (1..=grid.steps()).step_by(8) {
        let s = grid.node(i - 1);
        let exact = exact_malliavin_quadrature(path.grid(), path.levels(), s, 1.0, &params)?;
        println!("s = {s:.4}: G = {:.6}, exponential = {exact:.6}", profile.on_interval(i));
    }
    Ok(())
}
