//! Compares the closed-form boundary trace of the adjoint with a direct
//! quadrature of the heat kernel against the terminal datum.
//!
//!     cargo run --example trace_identity -- [L]

use chattering::quadrature::{adaptive_composite, GaussLegendre};
use chattering::spectral::{adjoint_trace_time_to_go, greens_kernel, terminal_datum_w};
use chattering::{run, ExponentSpec};

fn main() -> chattering::Result<()> {
    let level: usize = std::env::args().nth(1).map_or(6, |s| s.parse().expect("L"));
    let seq = run(0.5, ExponentSpec::Squares, level.max(1), 128)?;
    let w = terminal_datum_w(&seq, level)?;
    let rule = GaussLegendre::new(10);
    let top = w.modes.last().map_or(1, |m| m.n) as usize;

    println!("{:>10} {:>22} {:>22} {:>10}", "theta", "series", "quadrature", "gap");
    for theta in [1.0, 0.3, 0.1, 0.03, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4] {
        let series = adjoint_trace_time_to_go(&seq, level, theta)?;
        let modes = (8.0 / (theta * std::f64::consts::PI.powi(2))).sqrt() as u64 * 8 + 64;
        let quad = adaptive_composite(
            &rule,
            |xi| greens_kernel(1.0, xi, theta, modes).map_or(f64::NAN, |g| g.value) * w.eval(xi),
            0.0,
            1.0,
            top.max(8),
            1e-12,
            8,
        )?
        .value;
        println!("{theta:>10.1e} {series:>22.15e} {quad:>22.15e} {:>10.2e}", (series - quad).abs());
    }
    Ok(())
}
