//! Oracles shared by the integration suites. None of them go through the
//! code paths they are used to check.

#![allow(dead_code, clippy::excessive_precision)]

use std::f64::consts::PI;

use chattering::quadrature::{adaptive_composite, GaussLegendre};
use chattering::spectral::CosineSeries;
use chattering::{run, ChatterSequence, ExponentSpec};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

pub const TABLE_P: [u64; 6] = [1, 2, 21, 333, 994, 9069];
pub const TABLE_Q: [u64; 6] = [1, 5, 22, 334, 996, 9070];
pub const TABLE_R: [u64; 6] = [1, 5, 7, 9, 12, 14];
/// `1 - z_k` as printed in the table, three significant figures.
pub const TABLE_DELTA: [&str; 6] = ["5.00e-1", "1.56e-2", "1.22e-4", "1.52e-5", "2.38e-7", "7.45e-9"];
/// `-log2(1 - z_k)` for the nine-step run.
pub const DELTA_LOG2: [i32; 9] = [1, 6, 13, 16, 22, 27, 33, 38, 45];
pub const EXTENDED: [(u64, u64, u64); 3] = [(55246, 55247, 16), (487928, 487929, 18), (2955455, 2955456, 20)];

/// `P_9(z_k)` at 60 digits, rounded.
pub const P9_AT_PROBES: [f64; 9] = [
    0.46809513767560323,
    -0.10337937122729627,
    0.010843783165992884,
    -0.01905096469476713,
    0.0128150226509716,
    -0.017876329163939926,
    0.0078946621776980991,
    -0.0043521144903483473,
    0.011587294296315462,
];

/// `psi(T - theta, 1)` for `L = 6` at 60 digits.
pub const TRACE6: [(f64, f64); 5] = [
    (0.9, 0.00013877675973453995),
    (0.07, 0.46893460343328893),
    (1e-3, -0.16186854658011157),
    (1e-6, -0.053859658634666298),
    (1e-9, -0.0039616071140635163),
];

pub fn table_sequence() -> ChatterSequence {
    run(0.5, ExponentSpec::Squares, 6, 128).unwrap()
}

pub fn nine_step_sequence() -> ChatterSequence {
    run(0.5, ExponentSpec::Squares, 9, 256).unwrap()
}

/// `sum_{m=1}^{n} m^{-k}` exactly.
pub fn harmonic_power(n: u64, k: u32) -> BigRational {
    let mut s = BigRational::zero();
    for m in 1..=n {
        s += BigRational::new(BigInt::one(), BigInt::from(m).pow(k));
    }
    s
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap()
}

/// `sum_{m <= n} m^{-gamma}` summed from the small end in f64 (the small
/// terms first keeps the rounding well below the tolerances used).
pub fn harmonic_power_f64(n: u64, gamma: f64) -> f64 {
    (1..=n).rev().map(|m| (m as f64).powf(-gamma)).sum()
}

/// Neumann heat kernel by the method of images.
pub fn kernel_by_images(x: f64, xi: f64, s: f64) -> f64 {
    let reach = (1.0 + (40.0 * s).sqrt()).ceil() as i64 + 1;
    let mut total = 0.0;
    for j in -reach..=reach {
        let shift = 2.0 * j as f64;
        for y in [xi, -xi] {
            let d = x - y + shift;
            total += (-(d * d) / (4.0 * s)).exp();
        }
    }
    total / (4.0 * PI * s).sqrt()
}

/// `int_0^1 G(1, xi, theta) w(xi) dxi` by adaptive composite Gauss-Legendre,
/// the kernel taken from the image sum.
pub fn trace_by_quadrature(w: &CosineSeries, theta: f64, tol: f64) -> f64 {
    let rule = GaussLegendre::new(10);
    // Start fine enough to see the highest mode of w.
    let top = w.modes.last().map_or(1, |m| m.n) as usize;
    let panels = (top / 2).max(16);
    adaptive_composite(
        &rule,
        |xi| kernel_by_images(1.0, xi, theta) * w.eval(xi),
        0.0,
        1.0,
        panels,
        tol,
        8,
    )
    .unwrap()
    .value
}

pub fn assert_rel(actual: f64, expected: f64, tol: f64, what: &str) {
    let rel = (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    assert!(rel <= tol, "{what}: {actual:e} vs {expected:e} (relative {rel:e} > {tol:e})");
}
