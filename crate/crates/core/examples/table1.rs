//! Runs the block-harmonic construction for `alpha_m = m^2`, `z_1 = 0.5` and
//! prints the probe distances and block indices.
//!
//! ```text
//! cargo run --example table1 -- [K] [precision_bits]
//! ```

use chattering::{run, ExponentSpec};

fn main() -> chattering::Result<()> {
    let mut args = std::env::args().skip(1);
    let k: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(6);
    let bits: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(128);

    let seq = run(0.5, ExponentSpec::Squares, k, bits)?;
    println!("{:>3} {:>12} {:>10} {:>10} {:>6}", "k", "1 - z_k", "p_k", "q_k", "r_k");
    for i in 1..=seq.k() {
        println!(
            "{:>3} {:>12.4e} {:>10} {:>10} {:>6}",
            i,
            seq.delta_f64(i),
            seq.p(i),
            seq.q(i),
            seq.r(i)
        );
    }
    Ok(())
}
