//! Sampled satisfaction of the strengthened formula implies dense satisfaction
//! of the requirement, and the implication is strict.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sampleguard::corpus::{blackout_case, overload_case};
use sampleguard::logic::{Duration, LtlFormula, MtlFormula};
use sampleguard::semantics::{eval_ltl_sampled, eval_mtl_dense, sample_dense, DenseTrace, Verdict};
use sampleguard::strengthen::{compute_horizon, strengthen, StrengthenError};

fn d(n: i64) -> Duration {
    Duration::minutes(n)
}

#[test]
fn bounded_overload_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut strict, mut both_sat, mut both_violated) = (0, 0, 0);
    for _ in 0..10_000 {
        let case = overload_case(&mut rng);
        let r = strengthen(&case.mtl, case.delta).unwrap();
        assert_eq!(r.horizon_m, Some(case.m));
        let sampled = sample_dense(&case.dense, case.delta).unwrap();
        let ltl = eval_ltl_sampled(&r.ltl, &sampled).unwrap();
        let mtl = eval_mtl_dense(&case.mtl, &case.dense).unwrap();
        match (ltl.is_sat(), mtl.is_sat()) {
            (true, false) => panic!("unsound: {case:?}"),
            (false, true) => strict += 1,
            (true, true) => both_sat += 1,
            (false, false) => both_violated += 1,
        }
    }
    // The corpus exercises every cell that can occur.
    assert!(strict > 0 && both_sat > 0 && both_violated > 0);
}

#[test]
fn footnote_trace_is_strict() {
    // Overload exactly on [t, t + 3Δ) with t between samples, κ = 4Δ - δ.
    let (delta_small, delta) = (d(1), d(5));
    let kappa = delta.times(4) - delta_small;
    let dense = DenseTrace::from_intervals(delta_small, d(40), &[("oload_1", &[(d(3), d(18))])]).unwrap();
    let mtl = MtlFormula::bounded_overload(1, kappa);
    let r = strengthen(&mtl, delta).unwrap();
    assert_eq!(r.horizon_m, Some(3));
    let sampled = sample_dense(&dense, delta).unwrap();
    assert_eq!(eval_mtl_dense(&mtl, &dense).unwrap(), Verdict::Sat);
    // Samples 1, 2, 3 (t = 5, 10, 15) all see the overload.
    assert_eq!(eval_ltl_sampled(&r.ltl, &sampled).unwrap(), Verdict::Violated(1));
}

#[test]
fn blackout_corpus_with_dwell() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let phi = LtlFormula::globally(LtlFormula::not(LtlFormula::atom(sampleguard::Atom::blackout(1))));
    let mut violated = 0;
    for _ in 0..10_000 {
        let case = blackout_case(&mut rng);
        let sampled = sample_dense(&case.dense, case.delta).unwrap();
        let ltl = eval_ltl_sampled(&phi, &sampled).unwrap();
        let mtl = eval_mtl_dense(&case.mtl, &case.dense).unwrap();
        assert!(!(ltl.is_sat() && mtl.is_violated()), "unsound: {case:?}");
        violated += usize::from(mtl.is_violated());
    }
    assert!(violated > 1000);
}

#[test]
fn short_blackout_slips_between_samples() {
    // γ = 3 < Δ = 5: a blackout on [1, 4) is never sampled.
    let dense = DenseTrace::from_intervals(d(1), d(10), &[("blackout_1", &[(d(1), d(4))])]).unwrap();
    let mtl = MtlFormula::no_blackout(1);
    let r = strengthen(&mtl, d(5)).unwrap();
    let sampled = sample_dense(&dense, d(5)).unwrap();
    assert_eq!(eval_ltl_sampled(&r.ltl, &sampled).unwrap(), Verdict::Sat);
    assert_eq!(eval_mtl_dense(&mtl, &dense).unwrap(), Verdict::Violated(d(1)));
}

fn rational() -> impl Strategy<Value = Duration> {
    (1i64..=500, 1i64..=60).prop_map(|(n, q)| Duration::ratio(n, q))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn horizon_brackets_the_deadline(a in rational(), b in rational()) {
        prop_assume!(a != b);
        let (kappa, delta) = if a > b { (a, b) } else { (b, a) };
        let m = compute_horizon(kappa, delta).unwrap();
        prop_assert!(m >= 1);
        prop_assert!(delta.times(i64::from(m)) <= kappa);
        prop_assert!(kappa < delta.times(i64::from(m) + 1));
        prop_assert_eq!(
            compute_horizon(delta, delta),
            Err(StrengthenError::SamplingTooCoarse { kappa: delta, delta })
        );
    }
}
