//! Random trace generators for soundness and equivalence checks.
//!
//! All generators draw from a caller-supplied RNG, so a corpus is fixed by
//! its seed.

use rand::Rng;

use crate::logic::{Atom, Duration, MtlFormula};
use crate::semantics::{Assignment, DenseTrace, SampledTrace};

/// A dense trace of `oload_1` with a bounded-overload requirement whose
/// deadline exceeds the sampling period.
#[derive(Debug, Clone)]
pub struct OverloadCase {
    pub delta_small: Duration,
    pub delta: Duration,
    pub kappa: Duration,
    /// `⌊κ/Δ⌋`, drawn from `1..=12`.
    pub m: u32,
    pub mtl: MtlFormula,
    pub dense: DenseTrace,
}

pub fn overload_case(rng: &mut impl Rng) -> OverloadCase {
    let d = rng.random_range(1..=4i64);
    let delta_small = Duration::ratio(1, d);
    let (k, m, r) = loop {
        let k = rng.random_range(1..=6i64);
        let m = rng.random_range(1..=12i64);
        let r = rng.random_range(0..k);
        if m * k + r > k {
            break (k, m, r);
        }
    };
    let delta = delta_small.times(k);
    let kappa_ticks = m * k + r;
    let kappa = delta_small.times(kappa_ticks);
    let samples = rng.random_range(1..=40i64);
    let horizon_ticks = samples * k;
    let count = rng.random_range(0..=5);
    let intervals: Vec<(Duration, Duration)> = (0..count)
        .map(|_| {
            let start = rng.random_range(0..horizon_ticks);
            let len = rng.random_range(1..=kappa_ticks + k + 1);
            (delta_small.times(start), delta_small.times(start + len))
        })
        .collect();
    let dense = DenseTrace::from_intervals(delta_small, delta_small.times(horizon_ticks), &[("oload_1", &intervals)])
        .expect("generated on the grid");
    OverloadCase {
        delta_small,
        delta,
        kappa,
        m: m as u32,
        mtl: MtlFormula::bounded_overload(1, kappa),
        dense,
    }
}

/// A dense trace of `blackout_1` in which every maximal blackout lasts at
/// least `gamma` (or runs into the horizon), with `gamma > delta`.
#[derive(Debug, Clone)]
pub struct BlackoutCase {
    pub delta_small: Duration,
    pub delta: Duration,
    pub gamma: Duration,
    pub mtl: MtlFormula,
    pub dense: DenseTrace,
}

pub fn blackout_case(rng: &mut impl Rng) -> BlackoutCase {
    let d = rng.random_range(1..=4i64);
    let delta_small = Duration::ratio(1, d);
    let k = rng.random_range(1..=6i64);
    let gamma_ticks = k + rng.random_range(1..=2 * k);
    let samples = rng.random_range(1..=40i64);
    let horizon_ticks = samples * k;
    let count = rng.random_range(0..=4);
    let intervals: Vec<(Duration, Duration)> = (0..count)
        .map(|_| {
            let start = rng.random_range(0..horizon_ticks);
            let len = gamma_ticks + rng.random_range(0..=10);
            (delta_small.times(start), delta_small.times(start + len))
        })
        .collect();
    let dense = DenseTrace::from_intervals(delta_small, delta_small.times(horizon_ticks), &[("blackout_1", &intervals)])
        .expect("generated on the grid");
    BlackoutCase {
        delta_small,
        delta: delta_small.times(k),
        gamma: delta_small.times(gamma_ticks),
        mtl: MtlFormula::no_blackout(1),
        dense,
    }
}

/// Random sampled trace over `atoms`, each true with probability `p_true`.
pub fn random_sampled(rng: &mut impl Rng, len: usize, atoms: &[Atom], p_true: f64) -> SampledTrace {
    let samples = (0..len)
        .map(|_| {
            atoms
                .iter()
                .map(|a| (a.name().to_string(), rng.random_bool(p_true)))
                .collect::<Assignment>()
        })
        .collect();
    SampledTrace {
        delta: Duration::minutes(1),
        samples,
    }
}
