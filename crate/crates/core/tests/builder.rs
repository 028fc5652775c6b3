mod common;

use chattering::precision::{exact_decimal, Working};
use chattering::series::{coefficient_power_sum, verify_sign_pattern};
use chattering::{run, run_with, BuilderConfig, ChatterSequence, Error, ExponentSpec};
use common::*;
use proptest::prelude::*;

#[test]
fn reproduces_the_published_table() {
    let seq = table_sequence();
    assert_eq!(seq.k(), 6);
    for k in 1..=6 {
        assert_eq!(seq.p(k), TABLE_P[k - 1], "p_{k}");
        assert_eq!(seq.q(k), TABLE_Q[k - 1], "q_{k}");
        assert_eq!(seq.r(k), TABLE_R[k - 1], "r_{k}");
        assert_eq!(chattering::cli::three_figures(seq.delta(k)), TABLE_DELTA[k - 1]);
    }
}

#[test]
fn probe_distances_are_exact_powers_of_two() {
    let seq = nine_step_sequence();
    for (k, &e) in DELTA_LOG2.iter().enumerate() {
        assert_eq!(seq.delta_f64(k + 1), 2f64.powi(-e));
    }
}

#[test]
fn nine_steps_continue_the_table() {
    let seq = nine_step_sequence();
    for (i, &(p, q, r)) in EXTENDED.iter().enumerate() {
        let k = 7 + i;
        assert_eq!((seq.p(k), seq.q(k), seq.r(k)), (p, q, r));
    }
    // The first six blocks do not depend on how far the run goes.
    assert_eq!(seq.truncated(6).unwrap().blocks(), table_sequence().blocks());
}

#[test]
fn block_signs_alternate() {
    let seq = nine_step_sequence();
    for (i, b) in seq.blocks().iter().enumerate() {
        assert_eq!(b.sign, if i % 2 == 0 { 1 } else { -1 });
    }
}

#[test]
fn single_iteration() {
    let seq = run(0.5, ExponentSpec::Squares, 1, 128).unwrap();
    assert_eq!(seq.k(), 1);
    assert_eq!(seq.coefficient(1), 1.0);
    assert_eq!(seq.coefficient(2), 0.0);
}

#[test]
fn rejects_bad_inputs() {
    for z1 in [0.0, 1.0, -0.5, f64::NAN] {
        assert!(matches!(run(z1, ExponentSpec::Squares, 3, 128), Err(Error::Domain(_))), "z1 = {z1}");
    }
    assert!(run(0.5, ExponentSpec::Squares, 0, 128).is_err());
    assert!(run(0.5, ExponentSpec::Squares, 3, 16).is_err());
    assert!(run(0.5, ExponentSpec::polynomial(vec![5]), 3, 128).is_err());
}

#[test]
fn harmonic_cap_names_the_iteration() {
    let config = BuilderConfig {
        max_harmonic_index: 10,
        ..BuilderConfig::with_precision(128)
    };
    match run_with(0.5, ExponentSpec::Squares, 6, config) {
        Err(Error::Iteration { k, source }) => {
            assert!(k >= 1);
            assert!(matches!(*source, Error::HarmonicCap { .. }));
        }
        other => panic!("expected a capped run, got {other:?}"),
    }
}

#[test]
fn power_sums_match_exact_rationals() {
    let seq = table_sequence();
    for k in 1..=6 {
        let exact = to_f64(&harmonic_power(seq.r(k), 2));
        assert_rel(coefficient_power_sum(&seq, 2.0, k).unwrap(), exact, 1e-15, "gamma = 2");
        let exact = to_f64(&harmonic_power(seq.r(k), 1));
        assert_rel(coefficient_power_sum(&seq, 1.0, k).unwrap(), exact, 1e-15, "gamma = 1");
    }
}

#[test]
fn json_keeps_probe_points_bit_exact() {
    let seq = nine_step_sequence();
    let back = ChatterSequence::from_json(&seq.to_json().unwrap()).unwrap();
    assert_eq!(back, seq);
    for k in 1..=9 {
        assert_eq!(exact_decimal(back.delta(k)), exact_decimal(seq.delta(k)));
    }
}

#[test]
fn hand_edited_document_is_rejected() {
    let seq = table_sequence();
    let mut doc = seq.to_document().unwrap();
    doc.blocks[2].q += 1;
    assert!(matches!(ChatterSequence::from_document(doc), Err(Error::Invariant(_))));
    let mut doc = seq.to_document().unwrap();
    doc.deltas[1] = "0.75".into();
    assert!(ChatterSequence::from_document(doc).is_err());
    let w = Working::new(128).unwrap();
    assert!(w.parse_decimal("not a number").is_err());
}

fn exponent_strategy() -> impl Strategy<Value = ExponentSpec> {
    prop_oneof![
        Just(ExponentSpec::Squares),
        Just(ExponentSpec::linear()),
        Just(ExponentSpec::polynomial(vec![0, 2])),
        Just(ExponentSpec::polynomial(vec![1, 1, 1])),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn construction_invariants_hold(z1 in 0.05f64..0.95, exps in exponent_strategy()) {
        let seq = run(z1, exps, 4, 128).unwrap();
        seq.check_structure().unwrap();
        for level in 1..=4 {
            prop_assert!(verify_sign_pattern(&seq, level).unwrap().ok);
        }
        for k in 2..=4 {
            prop_assert!(seq.p(k) > seq.q(k - 1));
            prop_assert!(seq.r(k) >= seq.r(k - 1) + 2);
            prop_assert!(seq.delta_f64(k) < seq.delta_f64(k - 1));
        }
    }

    #[test]
    fn construction_is_deterministic(z1 in 0.05f64..0.95) {
        let a = run(z1, ExponentSpec::Squares, 4, 128).unwrap();
        let b = run(z1, ExponentSpec::Squares, 4, 128).unwrap();
        prop_assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn json_round_trip(z1 in 0.05f64..0.95, bits in 64usize..300) {
        let seq = run(z1, ExponentSpec::Squares, 3, bits).unwrap();
        let back = ChatterSequence::from_json(&seq.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, seq);
    }

    #[test]
    fn power_sum_identity(gamma in 1.0f64..4.0, k in 1usize..=6) {
        let seq = table_sequence();
        let direct = coefficient_power_sum(&seq, gamma, k).unwrap();
        let reference = harmonic_power_f64(seq.r(k), gamma);
        prop_assert!((direct - reference).abs() <= 1e-13 * reference);
    }
}
