//! Writes the data behind the two standard plots: the rescaled partial sums
//! near z = 1 and the terminal datum on [0, 1].
//!
//!     cargo run --example figures -- [out_dir]

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use chattering::cli::{figure1_abscissa, figure1_value};
use chattering::spectral::{terminal_datum_w, uniform_grid};
use chattering::{run, ExponentSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    fs::create_dir_all(&dir)?;
    let seq = run(0.5, ExponentSpec::Squares, 9, 256)?;

    let mut curves = fs::File::create(dir.join("partial_sums.csv"))?;
    writeln!(curves, "x,L,value")?;
    for level in 2..=9 {
        for i in 0..=500 {
            let x = i as f64 / 500.0;
            if x < 1.0 {
                writeln!(curves, "{x},{level},{}", figure1_value(&seq, level, x)?)?;
            }
        }
    }

    let mut dots = fs::File::create(dir.join("probe_points.csv"))?;
    writeln!(dots, "L,k,x,value")?;
    for level in 2..=9 {
        for k in 1..=level {
            let x = figure1_abscissa(seq.delta_f64(k));
            writeln!(dots, "{level},{k},{x},{}", figure1_value(&seq, level, x)?)?;
        }
    }

    let w = terminal_datum_w(&seq, 6)?;
    let xs = uniform_grid(1001);
    let mut datum = fs::File::create(dir.join("datum.csv"))?;
    writeln!(datum, "x,w")?;
    for (x, v) in xs.iter().zip(w.eval_many(&xs)) {
        writeln!(datum, "{x},{v}")?;
    }
    println!("wrote partial_sums.csv, probe_points.csv, datum.csv to {}", dir.display());
    Ok(())
}
