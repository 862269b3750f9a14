//! Evaluates the inverse-moment conditions and the admissible step size
//! for a parameter set.
//!
//! ```text
//! cargo run --example check_conditions -- [p] [horizon]
//! ```

use fcir::fbm::HurstParameter;
use fcir::model::{
    check_condition, max_step, sufficient_condition_report, CirParams, ConditionReport, Multiplier,
    DEFAULT_CONDITION_GRID, DEFAULT_XI,
};

fn main() -> fcir::Result<()> {
    let mut args = std::env::args().skip(1);
    let p: u32 = args.next().map_or(6, |a| a.parse().expect("p"));
    let horizon: f64 = args.next().map_or(1.0, |a| a.parse().expect("horizon"));
    let params = CirParams::default();

    println!("{}", ConditionReport::CSV_HEADER);
    for h in [0.6, 0.7, 0.8] {
        let hurst = HurstParameter::new(h)?;
        for m in [Multiplier::PPlusOne, Multiplier::ThreePPlusOne] {
            let r = check_condition(p, m, &params, hurst, horizon, DEFAULT_CONDITION_GRID)?;
            println!("{}", r.csv_record());
        }
        println!("{}", sufficient_condition_report(p, &params, hurst, horizon)?.csv_record());
    }
    println!("step bound: {:?}", max_step(&params, DEFAULT_XI)?);
    Ok(())
}
