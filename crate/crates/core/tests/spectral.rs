mod common;

use std::f64::consts::PI;

use chattering::quadrature::{adaptive_composite, GaussLegendre};
use chattering::series::coefficient_power_sum;
use chattering::spectral::*;
use common::*;
use proptest::prelude::*;

#[test]
fn datum_has_alternated_coefficients() {
    let seq = table_sequence();
    let w = terminal_datum_w(&seq, 1).unwrap();
    assert_eq!(w.modes.len(), 1);
    assert_eq!(w.coefficient(1), -1.0);
    let w = terminal_datum_w(&seq, 6).unwrap();
    assert_eq!(w.modes.len(), 14);
    assert_eq!(w.cutoff, 9070);
    assert_eq!(w.a0, 0.0);
    for m in &w.modes {
        let sign = if m.n % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!(m.a_n, sign * seq.coefficient(m.n));
    }
}

#[test]
fn datum_endpoints() {
    let seq = table_sequence();
    let w = terminal_datum_w(&seq, 6).unwrap();
    assert!((w.eval(1.0) - (-0.08402985902985903)).abs() < 1e-15);
    assert!((w.eval(0.0) - (-1.1286685536685537)).abs() < 1e-15);
}

#[test]
fn parseval_matches_block_power_sum_bit_for_bit() {
    let seq = nine_step_sequence();
    for level in 1..=9 {
        let w = terminal_datum_w(&seq, level).unwrap();
        let from_blocks = 0.5 * coefficient_power_sum(&seq, 2.0, level).unwrap();
        assert_eq!(w.norm_squared(), from_blocks);
        let exact = to_f64(&harmonic_power(seq.r(level), 2)) / 2.0;
        assert_rel(w.norm_squared(), exact, 1e-12, "Parseval");
        assert!(w.norm_squared() < PI * PI / 12.0);
    }
}

#[test]
fn samples_move_towards_the_horizon() {
    let seq = nine_step_sequence();
    let samples = switching_samples(&seq, 9, 1.0).unwrap();
    assert!((samples[0].t - 0.9297695072273171).abs() < 1e-15);
    for pair in samples.windows(2) {
        assert!(pair[1].t > pair[0].t && pair[1].t < 1.0);
        assert!(pair[1].time_to_go < pair[0].time_to_go);
    }
    assert!(samples.iter().all(|s| s.interior));
    let late = switching_samples(&seq, 2, 0.05).unwrap();
    assert!(!late[0].interior && late[0].t < 0.0);
    assert!(late[1].interior);
}

#[test]
fn kernel_matches_image_sum() {
    for &(x, xi, s) in &[(1.0, 1.0, 0.1), (0.3, 0.7, 0.01), (0.0, 0.2, 0.5), (0.9, 0.95, 0.002)] {
        let series = greens_kernel(x, xi, s, 400).unwrap();
        let images = kernel_by_images(x, xi, s);
        assert!((series.value - images).abs() < 1e-10, "G({x}, {xi}, {s})");
        assert!(series.truncation_bound < 1e-12);
    }
    // Sixty-digit image sums.
    assert!((greens_kernel(1.0, 1.0, 0.1, 50).unwrap().value - 1.7842861143718929).abs() < 1e-12);
    assert!((greens_kernel(0.3, 0.7, 0.01, 100).unwrap().value - 0.051667463463584467).abs() < 1e-12);
}

#[test]
fn kernel_conserves_mass() {
    let rule = GaussLegendre::new(12);
    for &(x, s) in &[(0.0, 0.05), (0.4, 0.01), (1.0, 0.3)] {
        let total = adaptive_composite(&rule, |xi| greens_kernel(x, xi, s, 200).unwrap().value, 0.0, 1.0, 8, 1e-12, 12)
            .unwrap()
            .value;
        assert!((total - 1.0).abs() < 1e-10, "x = {x}, s = {s}: {total}");
    }
}

#[test]
fn kernel_rejects_nonpositive_time() {
    assert!(greens_kernel(0.5, 0.5, 0.0, 10).is_err());
    assert!(greens_kernel(0.5, 0.5, -1.0, 10).is_err());
}

#[test]
fn trace_matches_reference_values() {
    let seq = table_sequence();
    for &(theta, expected) in &TRACE6 {
        let v = adjoint_trace_time_to_go(&seq, 6, theta).unwrap();
        assert!((v - expected).abs() < 1e-14, "theta = {theta}: {v} vs {expected}");
    }
}

#[test]
fn trace_signs_at_probe_times() {
    let seq = nine_step_sequence();
    for level in 1..=9 {
        for s in switching_samples(&seq, level, 1.0).unwrap() {
            let v = adjoint_trace(&seq, level, 1.0, s.t).unwrap();
            let expected = if s.k % 2 == 1 { 1.0 } else { -1.0 };
            assert!(v * expected > 0.0, "level {level}, k = {}", s.k);
        }
    }
}

#[test]
fn trace_is_first_mode_far_from_the_horizon() {
    let seq = table_sequence();
    let theta = 0.8;
    let v = adjoint_trace_time_to_go(&seq, 6, theta).unwrap();
    let first = (-PI * PI * theta).exp();
    assert!((v - first).abs() < 1e-12 * first.max(1e-300) + (-4.0 * PI * PI * theta).exp());
}

#[test]
fn trace_identity_on_a_few_times() {
    let seq = table_sequence();
    let w = terminal_datum_w(&seq, 6).unwrap();
    for &theta in &[1.0, 0.3, 0.07, 0.01, 1e-3, 1e-4] {
        let series = adjoint_trace_time_to_go(&seq, 6, theta).unwrap();
        let quad = trace_by_quadrature(&w, theta, 1e-10);
        assert!((series - quad).abs() < 1e-8, "theta = {theta}: {series} vs {quad}");
    }
}

#[test]
fn trace_integral_matches_quadrature() {
    let seq = table_sequence();
    let rule = GaussLegendre::new(12);
    for &(lo, hi) in &[(0.5, 1.0), (1e-3, 0.07), (1e-7, 1e-5)] {
        let exact = adjoint_trace_integral(&seq, 6, lo, hi).unwrap();
        let quad = adaptive_composite(&rule, |th| adjoint_trace_time_to_go(&seq, 6, th).unwrap(), lo, hi, 16, 1e-15, 16)
            .unwrap()
            .value;
        assert!((exact - quad).abs() < 1e-13, "[{lo}, {hi}]: {exact} vs {quad}");
    }
}

#[test]
fn adjoint_state_has_flat_boundaries() {
    let seq = table_sequence();
    let h = 1e-6;
    for &theta in &[0.05, 1e-3] {
        let v = adjoint_state_time_to_go(&seq, 6, theta, &[0.0, h, 1.0 - h, 1.0]).unwrap();
        assert!(((v[1] - v[0]) / h).abs() < 1e-6 * (1.0 / theta));
        assert!(((v[3] - v[2]) / h).abs() < 1e-6 * (1.0 / theta));
    }
    let trace = adjoint_trace(&seq, 6, 1.0, 0.5).unwrap();
    assert_eq!(adjoint_state(&seq, 6, 1.0, 0.5, &[1.0]).unwrap()[0], trace);
}

#[test]
fn adjoint_state_approaches_the_datum() {
    let seq = table_sequence();
    let w = terminal_datum_w(&seq, 3).unwrap();
    let xs = [0.0, 0.25, 0.5, 0.9];
    let near = adjoint_state_time_to_go(&seq, 3, 1e-12, &xs).unwrap();
    for (x, v) in xs.iter().zip(near) {
        assert!((v - w.eval(*x)).abs() < 1e-8);
    }
}

#[test]
fn adjoint_needs_square_exponents() {
    let seq = chattering::run(0.5, chattering::ExponentSpec::linear(), 2, 128).unwrap();
    assert!(adjoint_trace(&seq, 2, 1.0, 0.5).is_err());
}

#[test]
fn constant_flux_approaches_the_steady_profile() {
    // y(T, x) - T -> x^2/2 - 1/6 for u = 1.
    let horizon = 5.0;
    let control = BangBangControl::constant(horizon, 1).unwrap();
    let y = forward_terminal_state(&control, 100_000);
    for &x in &[0.0, 0.3, 0.5, 0.8, 1.0] {
        let v = y.eval(x) - horizon;
        assert!((v - (x * x / 2.0 - 1.0 / 6.0)).abs() < 1e-5, "x = {x}: {v}");
    }
    // Away from the endpoints the series converges much faster.
    let v = y.eval(0.5) - horizon;
    assert!((v - (0.125 - 1.0 / 6.0)).abs() < 1e-9);
}

#[test]
fn steady_profile_coefficients_by_quadrature() {
    let rule = GaussLegendre::new(16);
    let control = BangBangControl::constant(40.0, 1).unwrap();
    let y = forward_terminal_state(&control, 20);
    for n in 1..=20u64 {
        let a_n = 2.0
            * adaptive_composite(&rule, |x| (x * x / 2.0 - 1.0 / 6.0) * (n as f64 * PI * x).cos(), 0.0, 1.0, 4, 1e-15, 12)
                .unwrap()
                .value;
        assert!((y.coefficient(n) - a_n).abs() < 1e-12, "mode {n}");
    }
}

#[test]
fn series_json_shape() {
    let seq = table_sequence();
    let w = terminal_datum_w(&seq, 2).unwrap();
    let json: serde_json::Value = serde_json::to_value(&w).unwrap();
    assert_eq!(json["a0"], 0.0);
    assert_eq!(json["modes"][1]["n"], 2);
    assert_eq!(json["modes"][1]["a_n"], -0.5);
}

fn control_strategy() -> impl Strategy<Value = BangBangControl> {
    (0.05f64..2.0, prop::bool::ANY, prop::collection::vec(0.0f64..1.0, 0..12)).prop_map(|(horizon, up, mut cuts)| {
        cuts.sort_by(|a, b| b.total_cmp(a));
        cuts.dedup();
        let thetas: Vec<f64> = cuts.into_iter().map(|c| c * horizon).filter(|&t| t > 0.0 && t < horizon).collect();
        BangBangControl::from_time_to_go(horizon, if up { 1 } else { -1 }, thetas).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_mass_balance(control in control_strategy()) {
        let y = forward_terminal_state(&control, 50);
        let expected: f64 = control
            .segments()
            .iter()
            .map(|s| f64::from(s.sign) * s.duration())
            .collect::<chattering::precision::NeumaierSum>()
            .value();
        prop_assert_eq!(y.a0, expected);
    }

    #[test]
    fn forward_modes_decay(control in control_strategy()) {
        let y = forward_terminal_state(&control, 200);
        for m in &y.modes {
            let bound = 4.0 / ((m.n * m.n) as f64 * PI * PI);
            prop_assert!(m.a_n.abs() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn control_values_are_bang_bang(control in control_strategy(), frac in 0.0f64..1.0) {
        let t = frac * control.horizon();
        let v = control.value_at(t);
        prop_assert!(v == 1 || v == -1);
        let back = BangBangControl::from_document(&control.to_document()).unwrap();
        prop_assert_eq!(back, control);
    }

    #[test]
    fn evolved_norm_never_grows(theta in 0.0f64..0.1, level in 1usize..=6) {
        let seq = table_sequence();
        let w = terminal_datum_w(&seq, level).unwrap();
        prop_assert!(w.evolved(theta).norm_squared() <= w.norm_squared());
    }
}
