//! Interior switch count of the built control as the truncation level grows.
//!
//!     cargo run --release --example switch_scaling -- [T]

use chattering::instance::{build_instance, InstanceConfig};
use chattering::spectral::switching_samples;
use chattering::{run, ExponentSpec};

fn main() -> chattering::Result<()> {
    let horizon: f64 = std::env::args().nth(1).map_or(1.0, |s| s.parse().expect("T"));
    let seq = run(0.5, ExponentSpec::Squares, 9, 256)?;
    let config = InstanceConfig {
        oracle: None,
        mode_tolerance: 1e-3,
        ..InstanceConfig::default()
    };
    println!("{:>2} {:>9} {:>9} {:>12}", "L", "switches", "interior", "objective");
    for level in 1..=9 {
        let inst = build_instance(&seq, level, horizon, &config)?;
        let interior = switching_samples(&seq, level, horizon)?.iter().all(|s| s.interior);
        println!(
            "{level:>2} {:>9} {:>9} {:>12.9}",
            inst.diagnostics.interior_switch_count,
            interior,
            inst.diagnostics.objective_value
        );
    }
    Ok(())
}
