//! One test per acceptance criterion. Each prints a pass/fail line to stderr
//! (bypassing the test harness capture) before asserting.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use banded_esa_core::criterion::{estimate_limsup, Verdict};
use banded_esa_core::deficiency::{classify_deficiency, Summability};
use banded_esa_core::diagnostics::{
    apriori_bound_check, commutator_split, weighted_row_smallness, SmallnessConfig, WeightProfile,
};
use banded_esa_core::operator::{verify_band, verify_hermitian, BandProfile, IndexRange, OperatorSpec, ViolationKind};
use banded_esa_core::report::{fixture, run_suite, spread_vector, Status, SuiteCommand};
use banded_esa_core::section::{
    adaptive_resolvent, build_section, solve_shifted, truncate_spec, Shift, SparseVector, TruncationParams, Window,
};
use common::{dense_commutator_form, dense_solve, hashed_spec, l2, max_abs_diff};
use num_complex::Complex64;
use proptest::strategy::{Strategy, ValueTree};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn line(n: u32, pass: bool, what: &str, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "acceptance {n:>2} {verdict} {what}: {detail}");
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(Config::with_cases(cases), TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

/// Draws `count` values from `strategy` with a fixed seed.
fn draw<S: Strategy>(strategy: S, count: usize) -> Vec<S::Value> {
    let mut r = runner(count as u32);
    (0..count).map(|_| strategy.new_tree(&mut r).expect("strategy").current()).collect()
}

fn random_vector(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b)), len)
}

#[test]
fn criterion_01_counterexample_deficiency() {
    let start = Instant::now();
    let r = classify_deficiency(&OperatorSpec::counterexample(1.5), 10_000).unwrap();
    let elapsed = start.elapsed();
    let pass = (r.plus.exponent - 0.75).abs() <= 0.05
        && (r.minus.exponent - 0.75).abs() <= 0.05
        && r.plus.classification == Summability::SquareSummable
        && r.minus.classification == Summability::SquareSummable
        && r.deficiency_estimate == Some((1, 1))
        && r.esa_consistent == Some(false)
        && elapsed < Duration::from_secs(1);
    line(
        1,
        pass,
        "delta = 1.5 defect solutions",
        format!(
            "exponent {:.4}/{:.4}, {:?}/{:?}, estimate {:?}, esa_consistent {:?}, {:.3}s",
            r.plus.exponent,
            r.minus.exponent,
            r.plus.classification,
            r.minus.classification,
            r.deficiency_estimate,
            r.esa_consistent,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_02_limit_point_side() {
    let start = Instant::now();
    let half = classify_deficiency(&OperatorSpec::counterexample(0.5), 10_000).unwrap();
    let t_half = start.elapsed();
    let start = Instant::now();
    let edge = classify_deficiency(&OperatorSpec::counterexample(1.0), 10_000).unwrap();
    let t_edge = start.elapsed();
    let pass = (half.plus.exponent - 0.25).abs() <= 0.05
        && half.plus.classification == Summability::Divergent
        && half.minus.classification == Summability::Divergent
        && half.deficiency_estimate == Some((0, 0))
        && edge.plus.classification == Summability::Borderline
        && edge.esa_consistent.is_none()
        && t_half < Duration::from_secs(1)
        && t_edge < Duration::from_secs(1);
    line(
        2,
        pass,
        "delta = 0.5 and the delta = 1 edge",
        format!(
            "0.5: exponent {:.4} {:?} {:?}; 1.0: exponent {:.4} {:?}; {:.3}s/{:.3}s",
            half.plus.exponent,
            half.plus.classification,
            half.deficiency_estimate,
            edge.plus.exponent,
            edge.plus.classification,
            t_half.as_secs_f64(),
            t_edge.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_criterion_engine() {
    let start = Instant::now();
    let poly = estimate_limsup(&fixture("poly_growth_band").unwrap(), 10_000, 8).unwrap();
    let t_poly = start.elapsed();
    let start = Instant::now();
    let ce = estimate_limsup(&OperatorSpec::counterexample(1.5), 10_000, 8).unwrap();
    let t_ce = start.elapsed();
    let pass = poly.verdict == Verdict::EsaThmMain
        && (poly.trend_exponent + 0.2).abs() <= 0.1
        && ce.verdict == Verdict::Inconclusive
        && (ce.trend_exponent - 0.5).abs() <= 0.1
        && t_poly < Duration::from_secs(5)
        && t_ce < Duration::from_secs(5);
    line(
        3,
        pass,
        "limsup verdicts",
        format!(
            "poly {:?} trend {:.4}; counterexample {:?} trend {:.4}; {:.3}s/{:.3}s",
            poly.verdict,
            poly.trend_exponent,
            ce.verdict,
            ce.trend_exponent,
            t_poly.as_secs_f64(),
            t_ce.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_solver_exactness() {
    let diag = adaptive_resolvent(&OperatorSpec::diagonal(2.0), &SparseVector::unit(0), Shift::Plus, 1e-12, 2).unwrap();
    let f0_err = (diag.value(0) - Complex64::new(0.2, 0.4)).norm();

    let g = SparseVector::from_entries([(-2, Complex64::new(0.3, -0.7)), (4, Complex64::new(-1.5, 0.25))]);
    let zero = adaptive_resolvent(&OperatorSpec::zero(BandProfile::jacobi()), &g, Shift::Minus, 1e-12, 2).unwrap();
    let exact = zero.window.iter().all(|x| zero.value(x) == g.get(x));

    let cases = draw(
        (any_seed(), 1i64..=3, 0.0f64..0.5, 8usize..=200, proptest::bool::ANY)
            .prop_flat_map(|(seed, n, gamma, w, plus)| (proptest::strategy::Just((seed, n, gamma, w, plus)), random_vector(w))),
        100,
    );
    let mut worst = 0.0f64;
    for ((seed, n, gamma, w, plus), g) in &cases {
        let spec = hashed_spec(*seed, BandProfile::new(*n, *gamma).unwrap(), 10.0);
        let section = build_section(&spec, Window::new(-(*w as i64) / 2, -(*w as i64) / 2 + *w as i64 - 1).unwrap()).unwrap();
        let shift = if *plus { Shift::Plus } else { Shift::Minus };
        let (f, _) = solve_shifted(&section, shift, g).unwrap();
        worst = worst.max(l2(&f) / l2(g));
    }
    let pass = f0_err <= 1e-12 && exact && worst <= 1.0 + 1e-12;
    line(
        4,
        pass,
        "solver exactness",
        format!("|f0 - (0.2+0.4i)| = {f0_err:.2e}, zero matrix exact: {exact}, max ||f||/||g|| over 100 fixtures = {worst:.15}"),
    );
    assert!(pass);
}

fn any_seed() -> impl Strategy<Value = i64> {
    proptest::num::i64::ANY
}

#[test]
fn criterion_05_dense_oracle() {
    let start = Instant::now();
    let cases = draw(
        (any_seed(), 1i64..=5, 1usize..=64, proptest::bool::ANY)
            .prop_flat_map(|(seed, bw, w, plus)| (proptest::strategy::Just((seed, bw, w, plus)), random_vector(w))),
        50,
    );
    let mut worst = 0.0f64;
    for ((seed, bw, w, plus), g) in &cases {
        let spec = hashed_spec(*seed, BandProfile::new(*bw, 0.0).unwrap(), 10.0);
        let section = build_section(&spec, Window::new(0, *w as i64 - 1).unwrap()).unwrap();
        let shift = if *plus { Shift::Plus } else { Shift::Minus };
        let (f, _) = solve_shifted(&section, shift, g).unwrap();
        worst = worst.max(max_abs_diff(&f, &dense_solve(&section, shift, g)));
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-10 && elapsed < Duration::from_secs(10);
    line(
        5,
        pass,
        "banded vs dense solve",
        format!("max-norm gap {worst:.2e} over 50 sections, {:.3}s", elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn criterion_06_apriori_bound() {
    let start = Instant::now();
    let spec = fixture("poly_growth_band").unwrap();
    let g = SparseVector::unit(0);
    let mut pass = true;
    let mut detail = Vec::new();
    for k in [1u32, 2, 3] {
        let sol = adaptive_resolvent(&spec, &g, Shift::Plus, 1e-8, k).unwrap();
        let r = apriori_bound_check(sol.window, &sol.values, &g, f64::from(k), 10.0, 0.5, &[1e2, 1e3, 1e4]).unwrap();
        pass &= r.passed();
        detail.push(format!("k={k} worst ratio {:.4}", r.worst_ratio()));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    line(6, pass, "||Tf|| <= ||Tg||/(1-delta)", format!("{} (bound 2), {:.3}s", detail.join(", "), elapsed.as_secs_f64()));
    assert!(pass);
}

#[test]
fn criterion_07_proof_chain() {
    let start = Instant::now();
    let spec = fixture("poly_growth_band").unwrap();
    let band = *spec.profile();
    let delta = 0.5;
    let found = weighted_row_smallness(&spec, 1.0, delta, &SmallnessConfig::default()).unwrap();
    let found = found.found().expect("row smallness for k = 1").clone();
    let weight = WeightProfile::new(1.0, found.plateau, found.cap).unwrap();

    // the resolvent solution and a spread vector over the whole weighted window
    let sol = adaptive_resolvent(&spec, &SparseVector::unit(0), Shift::Plus, 1e-8, 1).unwrap();
    let radius = (found.y_bar + band.lower_reach(found.y_bar.ceil() as i64)).ceil() as i64 + 1;
    let wide = Window::new(-radius, radius).unwrap();
    let vectors = [
        (build_section(&spec, sol.window).unwrap(), sol.values.clone()),
        (build_section(&spec, wide).unwrap(), spread_vector(wide)),
    ];
    let mut young = true;
    let mut bounds = true;
    let mut i1_share = 0.0f64;
    for (section, f) in &vectors {
        let s = commutator_split(section, f, &weight, &band, delta).unwrap();
        young &= s.young_bound_holds(1e-10);
        bounds &= s.i1_bound_holds(1e-12) && s.i2_bound_holds(1e-12);
        i1_share = i1_share.max(s.i1 / s.weighted_norm_sq);
    }

    // dense commutator on windows of width 512 with transition regions inside
    let mut dense_gap = 0.0f64;
    for (plateau, cap) in [(10.0, 100.0), (3.0, 250.0), (50.0, 60.0)] {
        let w = WeightProfile::new(1.0, plateau, cap).unwrap();
        let window = Window::new(-256, 255).unwrap();
        let section = build_section(&spec, window).unwrap();
        let f = spread_vector(window);
        let s = commutator_split(&section, &f, &w, &band, delta).unwrap();
        let t: Vec<f64> = window.iter().map(|x| w.weight(x)).collect();
        let dense = dense_commutator_form(&section, &t, &f);
        dense_gap = dense_gap.max((dense - s.bilinear_form).norm() / s.term_magnitude);
        young &= s.young_bound_holds(1e-10);
    }
    let elapsed = start.elapsed();
    let pass = young && bounds && dense_gap <= 1e-10 && elapsed < Duration::from_secs(60);
    line(
        7,
        pass,
        "commutator split, I1/I2 bounds, dense oracle",
        format!(
            "X = {:.1}, Y = {:.1}, max I1/||Tf||^2 = {i1_share:.4} (bound {}), dense gap {dense_gap:.2e}, {:.3}s",
            found.plateau,
            found.cap,
            delta / 2.0,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_lower_band_lemma() {
    let profiles = draw((any_seed(), 1i64..=3, 0.0f64..0.5), 20);
    let range = IndexRange::new(-1000, 1000);
    let mut lower = 0usize;
    let mut checked = 0u64;
    for (seed, n, gamma) in &profiles {
        let spec = hashed_spec(*seed, BandProfile::new(*n, *gamma).unwrap(), 10.0);
        let report = verify_band(&spec, range);
        assert_eq!(report.count(ViolationKind::UpperBand), 0);
        assert!(verify_hermitian(&spec, range).passed());
        lower += report.count(ViolationKind::LowerBand);
        checked += report.pairs_checked;
    }
    let pass = lower == 0;
    line(8, pass, "lower band from hermiticity", format!("20 specs, {checked} pairs, {lower} lower-band violations"));
    assert!(pass);
}

#[test]
fn criterion_09_truncation_consistency() {
    let spec = fixture("tridiagonal").unwrap();
    let g = SparseVector::from_entries([(0, Complex64::new(1.0, 0.0)), (2, Complex64::new(0.0, -1.0))]);
    let full = adaptive_resolvent(&spec, &g, Shift::Plus, 1e-12, 2).unwrap();
    let gap = |level: u64| {
        let t = truncate_spec(&spec, TruncationParams::new(level).unwrap());
        let sol = adaptive_resolvent(&t, &g, Shift::Plus, 1e-12, 2).unwrap();
        full.window.iter().chain(sol.window.iter()).map(|x| (full.value(x) - sol.value(x)).norm()).fold(0.0, f64::max)
    };
    let gaps: Vec<(u64, f64)> = [2, 4, 8, 16, 32, 64].into_iter().map(|n| (n, gap(n))).collect();
    let pass = gaps.iter().filter(|(n, _)| *n >= 16).all(|(_, d)| *d <= 1e-8);
    let shown: Vec<String> = gaps.iter().map(|(n, d)| format!("N={n}: {d:.2e}")).collect();
    line(9, pass, "truncated solutions converge", shown.join(", "));
    assert!(pass);
}

#[test]
fn criterion_10_full_suite() {
    let start = Instant::now();
    let suite = run_suite(&SuiteCommand::ALL).unwrap();
    let elapsed = start.elapsed();
    let mismatched: Vec<String> = suite
        .items
        .iter()
        .filter(|i| !i.matches)
        .map(|i| format!("{:?} {} got {:?}", i.command, i.fixture, i.status))
        .collect();
    let pass = suite.exit_code() == 0 && suite.status == Status::Ok && elapsed < Duration::from_secs(120);
    line(
        10,
        pass,
        "bundled suite",
        format!("{} items, exit code {}, {:.3}s {}", suite.items.len(), suite.exit_code(), elapsed.as_secs_f64(), mismatched.join("; ")),
    );
    assert!(pass);
}
