//! Crank-Nicolson against the closed-form spectral solve for a constant
//! boundary flux, with observed convergence orders.
//!
//!     cargo run --example fd_oracle

use chattering::fd::{crank_nicolson_solve, compare_l2, FdConfig};
use chattering::spectral::{forward_terminal_state, mode_cutoff, BangBangControl};

fn main() -> chattering::Result<()> {
    let control = BangBangControl::constant(0.1, 1)?;
    let cutoff = mode_cutoff(1e-6)?;
    let reference = forward_terminal_state(&control, cutoff.modes);
    println!("reference: {} modes, sup-norm tail <= {:.2e}", cutoff.modes, cutoff.residual);

    println!("{:>6} {:>6} {:>12} {:>7}", "nx-1", "nt", "L2 gap", "order");
    let mut prev: Option<f64> = None;
    for level in 0..4 {
        let cells = 50usize << level;
        let sol = crank_nicolson_solve(&control, &FdConfig::new(cells + 1, cells))?;
        let gap = compare_l2(&sol.values, &reference);
        let order = prev.map(|p| (p / gap).log2());
        match order {
            Some(o) => println!("{cells:>6} {cells:>6} {gap:>12.4e} {o:>7.3}"),
            None => println!("{cells:>6} {cells:>6} {gap:>12.4e} {:>7}", "-"),
        }
        prev = Some(gap);
    }
    Ok(())
}
