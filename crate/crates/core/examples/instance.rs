//! Builds the chattering instance for the default K = 6 sequence and verifies the
//! optimality system.
//!
//!     cargo run --release --example instance -- [L] [T]

use std::time::Instant;

use chattering::instance::{build_instance, positivity_certificate, verify_optimality, InstanceConfig, VerifyOptions};
use chattering::{run, ExponentSpec};

fn main() -> chattering::Result<()> {
    let mut args = std::env::args().skip(1);
    let level: usize = args.next().map_or(6, |s| s.parse().expect("L"));
    let horizon: f64 = args.next().map_or(1.0, |s| s.parse().expect("T"));

    let started = Instant::now();
    let seq = run(0.5, ExponentSpec::Squares, level.max(6), 128)?;
    let inst = build_instance(&seq, level, horizon, &InstanceConfig::default())?;
    let d = &inst.diagnostics;
    println!("L = {level}, T = {horizon}");
    println!("objective          {:.12}", d.objective_value);
    println!("interior switches  {}", d.interior_switch_count);
    println!("sign residual      {}", d.sign_residual);
    if let Some(gap) = d.oracle_l2_gap {
        println!("oracle L2 gap      {gap:.3e}");
    }
    println!("switch time-to-go:");
    for theta in inst.control.switch_time_to_go() {
        println!("  {theta:.6e}");
    }

    let report = verify_optimality(&inst, &VerifyOptions::default())?;
    println!(
        "sign law           {} ({} mismatches, {} excluded of {})",
        pass(report.sign_law.passed),
        report.sign_law.mismatches,
        report.sign_law.excluded,
        report.sign_law.points
    );
    println!(
        "variational ineq.  {} (min {:.3e}, eps {:.3e}, reflected {:.6e})",
        pass(report.variational.passed),
        report.variational.min_inner_product,
        report.variational.eps_quad,
        report.variational.at_reflection
    );
    println!(
        "terminal identity  {} (L2 gap {:.1e})",
        pass(report.terminal.passed),
        report.terminal.l2_gap
    );
    let cert = positivity_certificate(&inst)?;
    println!(
        "positivity         {} ({:.12} vs {:.12})",
        pass(cert.passed),
        cert.parseval,
        cert.quadrature
    );
    println!("elapsed            {:.2?}", started.elapsed());
    Ok(())
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}
