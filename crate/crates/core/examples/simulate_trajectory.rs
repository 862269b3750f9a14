//! Simulates one trajectory of the fractional CIR rate on `[0, 10]` and
//! prints every 512th node.
//!
//! ```text
//! cargo run --release --example simulate_trajectory -- [hurst] [seed]
//! ```

use fcir::fbm::{sample_fbm_circulant, GridSpec, HurstParameter};
use fcir::model::CirParams;
use fcir::scheme::simulate_path;

fn main() -> fcir::Result<()> {
    let mut args = std::env::args().skip(1);
    let hurst: f64 = args.next().map_or(0.7, |a| a.parse().expect("hurst"));
    let seed: u64 = args.next().map_or(1, |a| a.parse().expect("seed"));

    let params = CirParams::new(2.0, 0.5, 0.5, 1.0)?;
    let grid = GridSpec::dyadic(10.0, 12)?;
    let noise = sample_fbm_circulant(grid, HurstParameter::new(hurst)?, seed)?;
    let path = simulate_path(&noise, &params)?;

    println!("{:>8} {:>12} {:>12} {:>12}", "t", "B(t)", "X(t)", "r(t)");
    let rates = path.rate_path();
    for n in (0..=grid.steps()).step_by(512) {
        println!(
            "{:>8.3} {:>12.6} {:>12.6} {:>12.6}",
            grid.node(n),
            noise.values()[n],
            path.levels()[n],
            rates[n]
        );
    }
    let low = rates.iter().copied().fold(f64::INFINITY, f64::min);
    println!("minimum rate over the path: {low:.6e}");
    Ok(())
}
