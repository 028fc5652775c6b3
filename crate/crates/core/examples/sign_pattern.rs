//! Evaluates each partial sum at every probe point and reports the sign
//! against its noise floor.
//!
//!     cargo run --example sign_pattern -- [K] [precision_bits]

use chattering::series::{verify_sign_pattern, SignReport};
use chattering::{run, ExponentSpec};

fn main() -> chattering::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(9);
    let bits: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(256);
    let seq = run(0.5, ExponentSpec::Squares, k, bits)?;

    for level in 1..=seq.k() {
        let report = verify_sign_pattern(&seq, level)?;
        println!("L = {level}: {}", if report.ok { "ok" } else { "FAILED" });
        for (i, (v, floor)) in report.values.iter().zip(&report.noise_floors).enumerate() {
            let k = i + 1;
            let want = SignReport::expected_sign(k);
            println!("  k = {k:<2} P_L(z_k) = {v:>+.6e}  floor {floor:.1e}  expected {want:+}");
        }
    }
    Ok(())
}
