use banded_esa_core::criterion::{estimate_limsup, Verdict};
use banded_esa_core::deficiency::{classify_deficiency, defect_recurrence, defect_recurrence_with, recurrence_residual, Summability, DEFAULT_MARGIN};
use banded_esa_core::operator::OperatorSpec;
use banded_esa_core::section::Shift;
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn minus_is_conjugate_of_plus(delta in 0.2f64..3.0) {
        let spec = OperatorSpec::counterexample(delta);
        let p = defect_recurrence(&spec, 2000, Shift::Plus).unwrap();
        let m = defect_recurrence(&spec, 2000, Shift::Minus).unwrap();
        for x in 1..=2000 {
            let (lp, ap) = p.log_polar(x).unwrap();
            let (lm, am) = m.log_polar(x).unwrap();
            prop_assert!((lp - lm).abs() <= 1e-12 * lp.abs().max(1.0));
            let phase = (Complex64::from_polar(1.0, ap) - Complex64::from_polar(1.0, -am)).norm();
            prop_assert!(phase <= 1e-12, "x = {}: {}", x, phase);
        }
        prop_assert_eq!(p.classification, m.classification);
    }

    #[test]
    fn classification_ignores_start_scale(delta in 0.2f64..3.0, scale in 1e-6f64..1e6, phase in 0.0f64..6.28) {
        let spec = OperatorSpec::counterexample(delta);
        let base = defect_recurrence(&spec, 5000, Shift::Plus).unwrap();
        let scaled = defect_recurrence_with(&spec, 5000, Shift::Plus, Complex64::from_polar(scale, phase), DEFAULT_MARGIN).unwrap();
        prop_assert_eq!(base.classification, scaled.classification);
        prop_assert!((base.decay_exponent - scaled.decay_exponent).abs() <= 1e-9);
    }

    #[test]
    fn rows_satisfied(delta in 0.1f64..4.0) {
        let spec = OperatorSpec::counterexample(delta);
        for shift in [Shift::Plus, Shift::Minus] {
            let sol = defect_recurrence(&spec, 3000, shift).unwrap();
            prop_assert!(recurrence_residual(&spec, &sol) <= 1e-12);
            prop_assert!(sol.partial_sums.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}

#[test]
fn exponent_is_half_delta_above_one() {
    for delta in [1.5, 2.0] {
        let sol = defect_recurrence(&OperatorSpec::counterexample(delta), 10_000, Shift::Plus).unwrap();
        assert!((sol.decay_exponent - delta / 2.0).abs() <= 0.05, "{delta}: {}", sol.decay_exponent);
        assert_eq!(sol.classification, Summability::SquareSummable);
    }
}

#[test]
fn harmonic_edge_has_unit_modulus() {
    // u_x = i^(x-1) solves the delta = 1 recurrence exactly
    let sol = defect_recurrence(&OperatorSpec::counterexample(1.0), 1000, Shift::Plus).unwrap();
    let mut expected = Complex64::new(1.0, 0.0);
    for x in 1..=1000 {
        assert!((sol.value(x).unwrap() - expected).norm() <= 1e-12 * x as f64);
        expected *= Complex64::i();
    }
    // the raw slope is 0 but the drift-corrected exponent sits on the edge
    assert!(sol.raw_exponent.abs() < 1e-9);
    assert!((sol.decay_exponent - 0.5).abs() < 0.01);
    assert_eq!(sol.classification, Summability::Borderline);
}

#[test]
fn exponent_is_half_delta_everywhere() {
    for delta in [0.3, 0.5, 0.8, 1.0, 1.5, 2.0, 3.0] {
        let sol = defect_recurrence(&OperatorSpec::counterexample(delta), 10_000, Shift::Plus).unwrap();
        assert!((sol.decay_exponent - delta / 2.0).abs() <= 0.05, "{delta}: {}", sol.decay_exponent);
    }
}

#[test]
fn criterion_never_claims_esa_when_deficient() {
    for delta in [1.02, 1.05, 1.1, 1.2, 1.5, 2.0, 3.0] {
        let spec = OperatorSpec::counterexample(delta);
        let d = classify_deficiency(&spec, 10_000).unwrap();
        assert_ne!(d.esa_consistent, Some(true), "{delta}");
        if delta >= 1.2 {
            assert_eq!(d.esa_consistent, Some(false), "{delta}");
        }
        assert_eq!(estimate_limsup(&spec, 10_000, 8).unwrap().verdict, Verdict::Inconclusive, "{delta}");
    }
}
