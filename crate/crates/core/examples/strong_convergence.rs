//! Matched-path strong convergence at the grid points, for `X` and for
//! the rate `r = X²`.

use fcir::experiments::{run_convergence_grid, ErrorMetric, ExperimentConfig};

fn main() -> fcir::Result<()> {
    let config = ExperimentConfig::default();
    let report = run_convergence_grid(&config)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{:>12} {:>14} {:>14}", "h", "sup |X err|", "sup |r err|");
    for l in &report.levels {
        println!("{:>12.3e} {:>14.6e} {:>14.6e}", l.step, l.grid, l.rate_grid);
    }
    println!("order (X): {:.3}", report.fit_for(ErrorMetric::Grid)?.slope);
    println!("order (r): {:.3}", report.fit_for(ErrorMetric::RateGrid)?.slope);
    report.write_csv(std::io::stdout().lock())
}
