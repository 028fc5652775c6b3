mod common;

use chattering::fd::{compare_l2, crank_nicolson_solve, grid_mean, FdConfig};
use chattering::spectral::{forward_terminal_state, mode_cutoff, BangBangControl, CosineSeries};
use proptest::prelude::*;

fn reference(control: &BangBangControl) -> CosineSeries {
    forward_terminal_state(control, mode_cutoff(1e-6).unwrap().modes)
}

#[test]
fn zero_net_flux_keeps_zero_mean() {
    let c = BangBangControl::new(0.3, -1, &[0.15]).unwrap();
    let sol = crank_nicolson_solve(&c, &FdConfig::new(201, 300)).unwrap();
    assert!(grid_mean(&sol.values).abs() < 1e-13);
}

#[test]
fn compare_l2_basics() {
    let zero = CosineSeries::zero();
    assert_eq!(compare_l2(&[2.5; 101], &zero), 2.5);
    let s = CosineSeries::new(0.5, vec![], 0).unwrap();
    assert_eq!(compare_l2(&[0.5; 11], &s), 0.0);
}

#[test]
fn constant_flux_single_segment() {
    let c = BangBangControl::constant(0.1, 1).unwrap();
    let sol = crank_nicolson_solve(&c, &FdConfig::new(401, 400)).unwrap();
    assert_eq!(sol.x.len(), 401);
    assert!(compare_l2(&sol.values, &reference(&c)) < 1e-4);
    assert!((grid_mean(&sol.values) - 0.1).abs() < 1e-12);
}

#[test]
fn second_order_under_joint_refinement() {
    let c = BangBangControl::constant(0.1, 1).unwrap();
    let y = reference(&c);
    let gaps: Vec<f64> = [100usize, 200, 400]
        .iter()
        .map(|&cells| compare_l2(&crank_nicolson_solve(&c, &FdConfig::new(cells + 1, cells)).unwrap().values, &y))
        .collect();
    for pair in gaps.windows(2) {
        let order = (pair[0] / pair[1]).log2();
        assert!(order >= 1.9, "orders from {gaps:?}");
    }
}

#[test]
fn switching_control_matches_spectral_solution() {
    let c = BangBangControl::new(0.2, 1, &[0.05, 0.12, 0.19]).unwrap();
    let y = reference(&c);
    let mut prev = f64::INFINITY;
    for cells in [100usize, 200, 400] {
        let mut cfg = FdConfig::new(cells + 1, cells);
        cfg.min_steps_per_segment = 10;
        let sol = crank_nicolson_solve(&c, &cfg).unwrap();
        let gap = compare_l2(&sol.values, &y);
        assert!(gap < prev * 1.1);
        prev = gap;
        // Mean tracks the signed measure.
        assert!((grid_mean(&sol.values) - y.a0).abs() < 1e-12);
    }
    assert!(prev < 1e-5);
}

#[test]
fn tiny_segments_are_merged_and_reported() {
    let c = BangBangControl::from_time_to_go(1.0, 1, vec![0.5, 1e-3, 1e-3 - 1e-12]).unwrap();
    let sol = crank_nicolson_solve(&c, &FdConfig::new(51, 50)).unwrap();
    assert_eq!(sol.merged_segments, 1);
    assert!(sol.merge_defect > 0.0 && sol.merge_defect < 3e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn mean_is_signed_measure(horizon in 0.05f64..0.5, cut in 0.1f64..0.9, up in prop::bool::ANY) {
        let c = BangBangControl::new(horizon, if up { 1 } else { -1 }, &[cut * horizon]).unwrap();
        let sol = crank_nicolson_solve(&c, &FdConfig::new(101, 100)).unwrap();
        prop_assert!((grid_mean(&sol.values) - c.signed_measure()).abs() < 1e-12);
    }
}
