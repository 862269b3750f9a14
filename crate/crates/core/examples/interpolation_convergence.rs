//! Uniform error of the piecewise-linear interpolant for several Hurst
//! parameters. The fitted order tracks `H`.

use fcir::experiments::{run_convergence_uniform, ErrorMetric, ExperimentConfig};
use fcir::fbm::HurstParameter;

fn main() -> fcir::Result<()> {
    for h in [0.6, 0.7, 0.8] {
        let config = ExperimentConfig {
            hurst: HurstParameter::new(h)?,
            ..ExperimentConfig::default()
        };
        let report = run_convergence_uniform(&config)?;
        let errors: Vec<String> = report.levels.iter().map(|l| format!("{:.3e}", l.uniform)).collect();
        println!(
            "H={h}: order {:.3}, errors {}",
            report.fit_for(ErrorMetric::Uniform)?.slope,
            errors.join(" ")
        );
    }
    Ok(())
}
